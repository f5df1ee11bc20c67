"""Generative sampling of hand-contact pairs on a chair (conditional VAE).

The encoder sees the chair's center-relative voxel encoding and a contact
pair (both hands, chair-local coordinates); the decoder reconstructs the
pair from a 6-d latent plus the scene features. Sampling draws the latent
from the standard normal, decodes, and pushes each hand through the 10 cm
surface-projection rule; hands that fail it come back as "no contact".
A sentinel code far below the chair stands in for absent hands during
training so one-handed styles stay expressible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neural.layers import Dense, DenseNet, Module
from .neural.normalizer import Normalizer
from .scene.chair import ChairModel
from .scene.contacts import ContactSpec, project_contact
from .scene.encodings import CHAIR_ENCODING_LEN, encode_chair_centered

LATENT_DIM = 6
CONTACT_DIM = 6  # two hands x 3
KL_WEIGHT = 0.1
NO_CONTACT_SENTINEL = np.array([0.0, -2.0, 0.0])


@dataclass
class ContactNetConfig:
    scene_encoder: tuple[int, ...] = (512, 512, 64)
    contact_encoder: tuple[int, ...] = (64, 64)
    decoder: tuple[int, ...] = (512, 512)
    latent: int = LATENT_DIM
    beta: float = KL_WEIGHT
    epochs: int = 150
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0

    def scaled(self, width: float) -> "ContactNetConfig":
        s = lambda dims: tuple(max(8, int(round(d * width))) for d in dims)
        return ContactNetConfig(
            scene_encoder=s(self.scene_encoder),
            contact_encoder=s(self.contact_encoder),
            decoder=s(self.decoder),
            latent=self.latent,
            beta=self.beta,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
        )


class ContactVAE(Module):
    def __init__(self, config: ContactNetConfig | None = None, rng=None):
        cfg = config or ContactNetConfig()
        rng = rng or np.random.default_rng(cfg.seed)
        self.config = cfg
        self.beta = cfg.beta
        self.latent = cfg.latent
        self.enc_scene = DenseNet(
            [CHAIR_ENCODING_LEN, *cfg.scene_encoder], rng, "ct.scene", elu_output=True
        )
        sf = cfg.scene_encoder[-1]
        self.enc_contact = DenseNet(
            [sf + CONTACT_DIM, *cfg.contact_encoder], rng, "ct.enc", elu_output=True
        )
        self.head_mu = Dense(cfg.contact_encoder[-1], cfg.latent, rng, "ct.mu")
        self.head_logvar = Dense(cfg.contact_encoder[-1], cfg.latent, rng, "ct.logvar")
        self.decoder = DenseNet(
            [cfg.latent + sf, *cfg.decoder, CONTACT_DIM], rng, "ct.dec"
        )
        self.scene_norm: Normalizer | None = None
        self.contact_norm: Normalizer | None = None
        self._cache: dict | None = None

    # ---------------------------------------------------------------- passes

    def encode(self, scene_norm: np.ndarray, c_norm: np.ndarray):
        sf = self.enc_scene.forward(scene_norm)
        h = self.enc_contact.forward(np.concatenate([sf, c_norm], axis=-1))
        return self.head_mu.forward(h), self.head_logvar.forward(h), sf

    def decode(self, z: np.ndarray, scene_feat: np.ndarray) -> np.ndarray:
        return self.decoder.forward(np.concatenate([z, scene_feat], axis=-1))

    def forward_train(self, scene_norm: np.ndarray, c_norm: np.ndarray, eps: np.ndarray):
        mu, logvar, sf = self.encode(scene_norm, c_norm)
        std = np.exp(0.5 * logvar)
        z = mu + std * eps
        c_hat = self.decode(z, sf)
        self._cache = {"mu": mu, "logvar": logvar, "std": std, "eps": eps, "sf_dim": sf.shape[-1]}
        return c_hat, mu, logvar, z

    def loss_and_grads(self, scene_norm: np.ndarray, c_norm: np.ndarray, eps: np.ndarray):
        """Reconstruction + beta * KL; runs backward and returns the scalars."""
        c_hat, mu, logvar, _ = self.forward_train(scene_norm, c_norm, eps)
        b = c_hat.shape[0]
        diff = c_hat - c_norm
        recon = float(np.mean(np.sum(diff**2, axis=-1)))
        kl = float(np.mean(kl_divergence(mu, logvar)))
        loss = recon + self.beta * kl

        d_chat = 2.0 * diff / b
        cache = self._cache
        d_dec_in = self.decoder.backward(d_chat)
        dz = d_dec_in[..., : self.latent]
        d_sf_dec = d_dec_in[..., self.latent :]

        d_mu = dz + self.beta * mu / b
        d_logvar = dz * cache["eps"] * 0.5 * cache["std"] + self.beta * 0.5 * (
            np.exp(logvar) - 1.0
        ) / b
        dh = self.head_mu.backward(d_mu) + self.head_logvar.backward(d_logvar)
        d_enc_in = self.enc_contact.backward(dh)
        d_sf = d_enc_in[..., : cache["sf_dim"]] + d_sf_dec
        self.enc_scene.backward(d_sf)
        return loss, recon, kl

    # -------------------------------------------------------------- sampling

    def decode_raw(self, z: np.ndarray, chair: ChairModel) -> np.ndarray:
        """Latents -> chair-local contact pairs (denormalized)."""
        if self.scene_norm is None or self.contact_norm is None:
            raise RuntimeError("model has no normalization statistics")
        scene = self.scene_norm.apply(encode_chair_centered(chair)[None, :])
        sf = self.enc_scene.forward(scene)
        z = np.atleast_2d(z)
        sf = np.repeat(sf, len(z), axis=0)
        return self.contact_norm.invert(self.decode(z, sf))

    def parameters(self):
        return (
            self.enc_scene.parameters()
            + self.enc_contact.parameters()
            + self.head_mu.parameters()
            + self.head_logvar.parameters()
            + self.decoder.parameters()
        )

    def gradients(self):
        return (
            self.enc_scene.gradients()
            + self.enc_contact.gradients()
            + self.head_mu.gradients()
            + self.head_logvar.gradients()
            + self.decoder.gradients()
        )

    def meta(self) -> dict:
        cfg = self.config
        return {
            "kind": "contactnet",
            "config": {
                "scene_encoder": list(cfg.scene_encoder),
                "contact_encoder": list(cfg.contact_encoder),
                "decoder": list(cfg.decoder),
                "latent": cfg.latent,
                "beta": cfg.beta,
            },
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "ContactVAE":
        c = meta["config"]
        return cls(
            ContactNetConfig(
                scene_encoder=tuple(c["scene_encoder"]),
                contact_encoder=tuple(c["contact_encoder"]),
                decoder=tuple(c["decoder"]),
                latent=c["latent"],
                beta=c["beta"],
            )
        )


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Closed-form KL(q || N(0, I)) per sample for a diagonal Gaussian."""
    return 0.5 * np.sum(mu**2 + np.exp(logvar) - 1.0 - logvar, axis=-1)


def contact_pair_local(spec: ContactSpec, chair: ChairModel) -> np.ndarray:
    """World contact spec -> 6-vector in chair-local coords with sentinels."""
    out = np.empty(6)
    for i, side in enumerate(("left", "right")):
        p = spec.hand(side)
        if p is None:
            out[3 * i : 3 * i + 3] = NO_CONTACT_SENTINEL
        else:
            out[3 * i : 3 * i + 3] = chair.transform.to_local(p)
    return out


def sample_contacts(
    model: ContactVAE,
    chair: ChairModel,
    n: int,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[ContactSpec]:
    """Draw n contact pairs; hands failing the projection rule come back None."""
    if rng is None:
        rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.latent))
    pairs = model.decode_raw(z, chair)
    specs = []
    for row in pairs:
        spec = {}
        for i, side in enumerate(("left", "right")):
            world = chair.transform.to_world(row[3 * i : 3 * i + 3])
            spec[side] = project_contact(world, chair)
        specs.append(ContactSpec(spec["left"], spec["right"]))
    return specs


@dataclass
class ContactDataset:
    """Per-example chair encodings and chair-local contact pairs."""

    scene: np.ndarray  # (N, 2048)
    contacts: np.ndarray  # (N, 6)

    def __post_init__(self):
        if self.scene.shape[1] != CHAIR_ENCODING_LEN or self.contacts.shape[1] != 6:
            raise ValueError("contact dataset dimensions are wrong")


def train_contactnet(
    dataset: ContactDataset,
    config: ContactNetConfig | None = None,
    log=None,
) -> tuple[ContactVAE, dict]:
    from .neural.optim import Adam

    cfg = config or ContactNetConfig()
    if len(dataset.scene) == 0:
        raise ValueError("empty training dataset")
    rng = np.random.default_rng(cfg.seed)
    model = ContactVAE(cfg, rng)
    model.scene_norm = Normalizer.fit(dataset.scene)
    model.contact_norm = Normalizer.fit(dataset.contacts)

    scene = model.scene_norm.apply(dataset.scene)
    contacts = model.contact_norm.apply(dataset.contacts)
    n = len(scene)
    opt = Adam(model)
    history = {"loss": [], "recon": [], "kl": []}
    n_batches = max(1, n // cfg.batch_size)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        tot = tot_r = tot_k = 0.0
        for bi in range(n_batches):
            ids = perm[bi * cfg.batch_size : (bi + 1) * cfg.batch_size]
            if len(ids) == 0:
                continue
            eps = rng.standard_normal((len(ids), cfg.latent))
            model.zero_grads()
            loss, recon, kl = model.loss_and_grads(scene[ids], contacts[ids], eps)
            opt.step(cfg.lr)
            tot += loss
            tot_r += recon
            tot_k += kl
        history["loss"].append(tot / n_batches)
        history["recon"].append(tot_r / n_batches)
        history["kl"].append(tot_k / n_batches)
        if log:
            log(
                f"contactnet epoch {epoch}: loss {tot/n_batches:.5f} "
                f"recon {tot_r/n_batches:.5f} kl {tot_k/n_batches:.5f}"
            )
    return model, history

"""Mixture of experts with parameter blending.

A gating network (softmax over K experts) produces per-sample weights; the
prediction network runs with per-layer parameters blended as sum_k w_k *
theta_k. For a linear layer that blend equals blending the per-expert
pre-activations, which is how the forward computes it (no per-sample weight
matrices get materialized); blend_parameters() exposes the literal blended
parameter vector.
"""

from __future__ import annotations

import numpy as np

from .layers import DenseNet, Module, elu, elu_grad, he_uniform


class MixtureOfExperts(Module):
    def __init__(
        self,
        gate_in: int,
        in_dim: int,
        out_dim: int,
        experts: int = 10,
        hidden: int = 512,
        gate_hidden: int = 128,
        rng: np.random.Generator | None = None,
        name: str = "moe",
    ):
        rng = rng or np.random.default_rng(0)
        self.name = name
        self.k = experts
        self.dims = [in_dim, hidden, hidden, out_dim]
        self.gating = DenseNet(
            [gate_in, gate_hidden, gate_hidden, experts],
            rng,
            name=f"{name}.gate",
            softmax_output=True,
        )
        self.w = []
        self.b = []
        for li in range(3):
            fan_in = self.dims[li]
            self.w.append(
                np.stack([he_uniform(rng, (self.dims[li + 1], fan_in), fan_in) for _ in range(experts)])
            )
            self.b.append(np.zeros((experts, self.dims[li + 1])))
        self.dw = [np.zeros_like(w) for w in self.w]
        self.db = [np.zeros_like(b) for b in self.b]
        self._cache: dict | None = None

    # ---------------------------------------------------------------- forward

    def forward(self, gate_x: np.ndarray, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.dims[0]:
            raise ValueError(f"{self.name}: input dim {x.shape[-1]} != {self.dims[0]}")
        weights = self.gating.forward(gate_x)  # (B, K)
        cache = {"weights": weights, "h": [x], "z": [], "per_expert": []}
        h = x
        for li in range(3):
            # per-expert pre-activations for every sample: (B, K, H)
            pe = np.einsum("bi,koi->bko", h, self.w[li], optimize=True) + self.b[li]
            z = np.einsum("bko,bk->bo", pe, weights, optimize=True)
            cache["per_expert"].append(pe)
            cache["z"].append(z)
            h = elu(z) if li < 2 else z
            cache["h"].append(h)
        self._cache = cache
        return h

    @property
    def last_gate_weights(self) -> np.ndarray:
        return self._cache["weights"] if self._cache else None

    def backward(self, dy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (d_gate_x, d_x)."""
        c = self._cache
        weights = c["weights"]
        d_weights = np.zeros_like(weights)
        dz = dy
        for li in range(2, -1, -1):
            if li < 2:
                dz = dz * elu_grad(c["z"][li])
            # gating sees every layer's per-expert outputs
            d_weights += np.einsum("bo,bko->bk", dz, c["per_expert"][li], optimize=True)
            h_in = c["h"][li]
            self.dw[li] += np.einsum("bo,bk,bi->koi", dz, weights, h_in, optimize=True)
            self.db[li] += np.einsum("bo,bk->ko", dz, weights, optimize=True)
            # d h_in: back through the blended weight matrix
            dz_next = np.einsum("bo,koi,bk->bi", dz, self.w[li], weights, optimize=True)
            dz = dz_next
        d_gate_x = self.gating.backward(d_weights)
        return d_gate_x, dz

    # ------------------------------------------------------------- utilities

    def blend_parameters(self, gate_weights: np.ndarray) -> np.ndarray:
        """Literal sum_k w_k * theta_k over the prediction-network parameters."""
        parts = []
        for li in range(3):
            parts.append(np.einsum("k,koi->oi", gate_weights, self.w[li]).ravel())
            parts.append(np.einsum("k,ko->o", gate_weights, self.b[li]).ravel())
        return np.concatenate(parts)

    def expert_forward(self, k: int, x: np.ndarray) -> np.ndarray:
        """Run a single expert's network (no gating)."""
        h = x
        for li in range(3):
            z = h @ self.w[li][k].T + self.b[li][k]
            h = elu(z) if li < 2 else z
        return h

    def parameters(self):
        out = list(self.gating.parameters())
        for li in range(3):
            out.append((f"{self.name}.w{li}", self.w[li]))
            out.append((f"{self.name}.b{li}", self.b[li]))
        return out

    def gradients(self):
        out = list(self.gating.gradients())
        for li in range(3):
            out.append((f"{self.name}.w{li}", self.dw[li]))
            out.append((f"{self.name}.b{li}", self.db[li]))
        return out

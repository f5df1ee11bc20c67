"""Autoregressive full-body pose prediction with a mixture of experts.

One forward pass maps the current state (control signal, pose, trajectory
window, goal window, both scene encodings, global phase) to the next pose,
future trajectory/goal windows, the next global phase, auxiliary
future-root-relative joints, goal-relative trajectory, and key-joint contact
labels. Everything is expressed in the current frame's root space; the
runtime owns the root integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controlnet import SIGNAL_SIZE, TAU_PLUS
from .kinematics.frames import (
    FUTURE_SAMPLES,
    MotionFrame,
    TRAJECTORY_SAMPLES,
    TrajectoryWindow,
)
from .kinematics.rotations import matrix_to_rot6d, rot6d_to_matrix
from .neural.layers import DenseNet, Module
from .neural.moe import MixtureOfExperts
from .neural.normalizer import Normalizer
from .scene.chair import ChairModel
from .scene.encodings import (
    CHAIR_ENCODING_LEN,
    EGO_ENCODING_LEN,
    encode_chair_centric,
    encode_ego_cylinder,
)

JOINTS = 22
JOINT_FEATURES = JOINTS * (3 + 6 + 3)  # 264
WINDOW_FEATURES = TRAJECTORY_SAMPLES * (3 + 6 + 3)  # 156
FUTURE_FEATURES = FUTURE_SAMPLES * (3 + 6 + 3)  # 84
GOAL_REL_FEATURES = FUTURE_SAMPLES * (3 + 6)  # 63
CONTACT_LABELS = 5


def _block_layout(blocks: list[tuple[str, int]]) -> dict[str, tuple[int, int]]:
    out = {}
    i = 0
    for name, size in blocks:
        out[name] = (i, i + size)
        i += size
    out["__total__"] = (0, i)
    return out


INPUT_LAYOUT = _block_layout(
    [
        ("control", SIGNAL_SIZE),  # 56
        ("joints", JOINT_FEATURES),  # 264
        ("trajectory", WINDOW_FEATURES),  # 156
        ("goal", WINDOW_FEATURES),  # 156
        ("chair", CHAIR_ENCODING_LEN),  # 2048
        ("ego", EGO_ENCODING_LEN),  # 1408
        ("phase", 1),
    ]
)
INPUT_DIM = INPUT_LAYOUT["__total__"][1]  # 4089

OUTPUT_LAYOUT = _block_layout(
    [
        ("joints", JOINT_FEATURES),  # 264
        ("future_trajectory", FUTURE_FEATURES),  # 84
        ("future_goal", FUTURE_FEATURES),  # 84
        ("phase", 1),
        ("future_root_joints", JOINTS * 3),  # 66
        ("goal_relative_trajectory", GOAL_REL_FEATURES),  # 63
        ("contact_labels", CONTACT_LABELS),  # 5
    ]
)
OUTPUT_DIM = OUTPUT_LAYOUT["__total__"][1]  # 567


def layout_checksum() -> str:
    import hashlib
    import json

    blob = json.dumps({"in": INPUT_LAYOUT, "out": OUTPUT_LAYOUT}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def input_slice(name: str) -> slice:
    a, b = INPUT_LAYOUT[name]
    return slice(a, b)


def output_slice(name: str) -> slice:
    a, b = OUTPUT_LAYOUT[name]
    return slice(a, b)


# gating features: global phase + current goal action + key-joint velocities
_KEY_JOINTS_DEFAULT = (0, 9, 13, 16, 20)


def gating_feature_indices(key_joints=_KEY_JOINTS_DEFAULT) -> np.ndarray:
    idx = [INPUT_LAYOUT["phase"][0]]
    goal_start = INPUT_LAYOUT["goal"][0]
    # goal window stores positions, then directions, then actions; the action
    # row of the center sample:
    actions_start = goal_start + TRAJECTORY_SAMPLES * (3 + 6)
    center = TRAJECTORY_SAMPLES // 2
    idx.extend(range(actions_start + 3 * center, actions_start + 3 * center + 3))
    joints_start = INPUT_LAYOUT["joints"][0]
    vel_start = joints_start + JOINTS * (3 + 6)
    for j in key_joints:
        idx.extend(range(vel_start + 3 * j, vel_start + 3 * j + 3))
    return np.array(idx, dtype=np.int64)


GATING_DIM = 1 + 3 + 3 * len(_KEY_JOINTS_DEFAULT)  # 19


# ---------------------------------------------------------------- assembly


@dataclass
class GoalSpec:
    """Target of the episode: a spot to reach with an intended action."""

    position: np.ndarray  # (3,) world (seat center for sitting)
    yaw: float  # facing to adopt at the goal
    action: np.ndarray  # (3,) one-hot over (idle, walk, sit)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        self.action = np.asarray(self.action, dtype=np.float64).reshape(3)


def window_to_root(window: TrajectoryWindow, frame: MotionFrame) -> np.ndarray:
    """World trajectory window -> root-space features (pos | dir | action)."""
    root = frame.root
    pos = root.to_local(window.positions)
    dirs = np.zeros((len(window.directions), 6))
    for i, d6 in enumerate(window.directions):
        dirs[i] = matrix_to_rot6d(root.rotation.T @ rot6d_to_matrix(d6))
    return np.concatenate([pos.ravel(), dirs.ravel(), window.actions.ravel()])


def goal_window_features(goal: GoalSpec, frame: MotionFrame) -> np.ndarray:
    """Constant goal broadcast over the window, in root space."""
    root = frame.root
    pos = np.tile(root.to_local(goal.position), (TRAJECTORY_SAMPLES, 1))
    from .kinematics.rotations import yaw_matrix

    d6 = matrix_to_rot6d(root.rotation.T @ yaw_matrix(goal.yaw))
    dirs = np.tile(d6, (TRAJECTORY_SAMPLES, 1))
    actions = np.tile(goal.action, (TRAJECTORY_SAMPLES, 1))
    return np.concatenate([pos.ravel(), dirs.ravel(), actions.ravel()])


def assemble_input(
    frame: MotionFrame,
    window: TrajectoryWindow,
    goal: GoalSpec,
    chair: ChairModel,
    control: np.ndarray,
    phase: float,
) -> np.ndarray:
    """Raw (unnormalized) input vector in the documented block layout."""
    control = np.asarray(control, dtype=np.float64).reshape(SIGNAL_SIZE)
    joints = np.concatenate(
        [
            frame.joint_positions.ravel(),
            frame.joint_rotations.ravel(),
            frame.joint_velocities.ravel(),
        ]
    )
    traj = window_to_root(window, frame)
    goal_feat = goal_window_features(goal, frame)
    chair_enc = encode_chair_centric(chair, frame.root.position)
    ego_enc = encode_ego_cylinder(chair, frame.root)
    x = np.concatenate(
        [control, joints, traj, goal_feat, chair_enc, ego_enc, [phase]]
    )
    assert x.shape == (INPUT_DIM,)
    return x


# ------------------------------------------------------------------ outputs


@dataclass
class PoseNetOutput:
    joint_positions: np.ndarray  # (22, 3) root-relative (next frame's root)
    joint_rotations: np.ndarray  # (22, 6)
    joint_velocities: np.ndarray  # (22, 3)
    future_positions: np.ndarray  # (7, 3) root positions, current root space
    future_directions: np.ndarray  # (7, 6)
    future_actions: np.ndarray  # (7, 3) renormalized
    future_goal: np.ndarray  # (7, 12)
    phase: float
    future_root_joints: np.ndarray  # (22, 3)
    goal_relative_trajectory: np.ndarray  # (7, 9)
    contact_labels: np.ndarray  # (5,) in [0, 1]

    @classmethod
    def decode(cls, y: np.ndarray) -> "PoseNetOutput":
        y = np.asarray(y, dtype=np.float64).reshape(OUTPUT_DIM)
        j = y[output_slice("joints")]
        pos = j[: JOINTS * 3].reshape(JOINTS, 3)
        rot = j[JOINTS * 3 : JOINTS * 9].reshape(JOINTS, 6)
        vel = j[JOINTS * 9 :].reshape(JOINTS, 3)
        ft = y[output_slice("future_trajectory")]
        fpos = ft[: FUTURE_SAMPLES * 3].reshape(FUTURE_SAMPLES, 3)
        fdir = ft[FUTURE_SAMPLES * 3 : FUTURE_SAMPLES * 9].reshape(FUTURE_SAMPLES, 6)
        fact = ft[FUTURE_SAMPLES * 9 :].reshape(FUTURE_SAMPLES, 3)
        fact = renormalize_actions(fact)
        return cls(
            joint_positions=pos,
            joint_rotations=rot,
            joint_velocities=vel,
            future_positions=fpos,
            future_directions=fdir,
            future_actions=fact,
            future_goal=y[output_slice("future_goal")].reshape(FUTURE_SAMPLES, 12),
            phase=float(np.clip(y[output_slice("phase")][0], 0.0, 1.0)),
            future_root_joints=y[output_slice("future_root_joints")].reshape(JOINTS, 3),
            goal_relative_trajectory=y[output_slice("goal_relative_trajectory")].reshape(
                FUTURE_SAMPLES, 9
            ),
            contact_labels=np.clip(y[output_slice("contact_labels")], 0.0, 1.0),
        )


def renormalize_actions(actions: np.ndarray) -> np.ndarray:
    """Clip at zero and divide by the sum (uniform fallback on zero rows)."""
    a = np.clip(np.asarray(actions, dtype=np.float64), 0.0, None)
    s = a.sum(axis=-1, keepdims=True)
    uniform = np.full_like(a, 1.0 / a.shape[-1])
    return np.where(s > 1e-12, a / np.maximum(s, 1e-12), uniform)


# -------------------------------------------------------------------- model


@dataclass
class PoseNetConfig:
    encoder_control: tuple[int, ...] = (128, 128, 128)
    encoder_body: tuple[int, ...] = (512, 512, 512)
    encoder_goal: tuple[int, ...] = (128, 128, 128)
    encoder_chair: tuple[int, ...] = (512, 512, 512)
    encoder_ego: tuple[int, ...] = (256, 256, 256)
    experts: int = 10
    expert_hidden: int = 512
    gate_hidden: int = 128
    epochs: int = 150
    batch_size: int = 256
    lr0: float = 1e-4
    lr_min: float = 5e-6
    val_fraction: float = 0.1
    seed: int = 0
    # training-time noise (normalized space) on the autoregressive input
    # blocks, so closed-loop rollouts can recover from their own drift
    input_noise_std: float = 0.12

    def scaled(self, width: float) -> "PoseNetConfig":
        """Uniformly shrunk widths for desk-scale runs."""
        s = lambda dims: tuple(max(8, int(round(d * width))) for d in dims)
        return PoseNetConfig(
            encoder_control=s(self.encoder_control),
            encoder_body=s(self.encoder_body),
            encoder_goal=s(self.encoder_goal),
            encoder_chair=s(self.encoder_chair),
            encoder_ego=s(self.encoder_ego),
            experts=self.experts,
            expert_hidden=max(16, int(round(self.expert_hidden * width))),
            gate_hidden=max(8, int(round(self.gate_hidden * width))),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr0=self.lr0,
            lr_min=self.lr_min,
            val_fraction=self.val_fraction,
            seed=self.seed,
            input_noise_std=self.input_noise_std,
        )


class PoseNetModel(Module):
    def __init__(self, config: PoseNetConfig | None = None, rng=None):
        cfg = config or PoseNetConfig()
        rng = rng or np.random.default_rng(cfg.seed)
        self.config = cfg
        self.enc_c = DenseNet([SIGNAL_SIZE, *cfg.encoder_control], rng, "pn.enc_c", elu_output=True)
        body_in = JOINT_FEATURES + WINDOW_FEATURES
        self.enc_jt = DenseNet([body_in, *cfg.encoder_body], rng, "pn.enc_jt", elu_output=True)
        self.enc_g = DenseNet([WINDOW_FEATURES, *cfg.encoder_goal], rng, "pn.enc_g", elu_output=True)
        self.enc_i = DenseNet([CHAIR_ENCODING_LEN, *cfg.encoder_chair], rng, "pn.enc_i", elu_output=True)
        self.enc_e = DenseNet([EGO_ENCODING_LEN, *cfg.encoder_ego], rng, "pn.enc_e", elu_output=True)
        feat = (
            cfg.encoder_control[-1]
            + cfg.encoder_body[-1]
            + cfg.encoder_goal[-1]
            + cfg.encoder_chair[-1]
            + cfg.encoder_ego[-1]
        )
        self.moe = MixtureOfExperts(
            gate_in=GATING_DIM,
            in_dim=feat,
            out_dim=OUTPUT_DIM,
            experts=cfg.experts,
            hidden=cfg.expert_hidden,
            gate_hidden=cfg.gate_hidden,
            rng=rng,
            name="pn.moe",
        )
        self.gate_idx = gating_feature_indices()
        self.input_norm: Normalizer | None = None
        self.output_norm: Normalizer | None = None

    def _encode(self, x: np.ndarray) -> np.ndarray:
        c = self.enc_c.forward(x[..., input_slice("control")])
        jt = self.enc_jt.forward(
            x[..., INPUT_LAYOUT["joints"][0] : INPUT_LAYOUT["trajectory"][1]]
        )
        g = self.enc_g.forward(x[..., input_slice("goal")])
        i = self.enc_i.forward(x[..., input_slice("chair")])
        e = self.enc_e.forward(x[..., input_slice("ego")])
        return np.concatenate([c, jt, g, i, e], axis=-1)

    def forward_norm(self, x_norm: np.ndarray) -> np.ndarray:
        """Normalized input -> normalized output (training path)."""
        feats = self._encode(x_norm)
        return self.moe.forward(x_norm[..., self.gate_idx], feats)

    def backward_norm(self, dy: np.ndarray) -> None:
        d_gate, d_feat = self.moe.backward(dy)
        cfg = self.config
        ofs = 0
        for enc, width in (
            (self.enc_c, cfg.encoder_control[-1]),
            (self.enc_jt, cfg.encoder_body[-1]),
            (self.enc_g, cfg.encoder_goal[-1]),
            (self.enc_i, cfg.encoder_chair[-1]),
            (self.enc_e, cfg.encoder_ego[-1]),
        ):
            enc.backward(d_feat[..., ofs : ofs + width])
            ofs += width
        # gating input gradient is not propagated to the raw input (the raw
        # input is data, not a learned quantity)

    def forward_raw(self, x_raw: np.ndarray) -> np.ndarray:
        if self.input_norm is None or self.output_norm is None:
            raise RuntimeError("model has no normalization statistics")
        x = self.input_norm.apply(np.atleast_2d(np.asarray(x_raw, dtype=np.float64)))
        y = self.forward_norm(x)
        return self.output_norm.invert(y)

    def predict(self, x_raw: np.ndarray) -> PoseNetOutput:
        return PoseNetOutput.decode(self.forward_raw(x_raw)[0])

    def parameters(self):
        return (
            self.enc_c.parameters()
            + self.enc_jt.parameters()
            + self.enc_g.parameters()
            + self.enc_i.parameters()
            + self.enc_e.parameters()
            + self.moe.parameters()
        )

    def gradients(self):
        return (
            self.enc_c.gradients()
            + self.enc_jt.gradients()
            + self.enc_g.gradients()
            + self.enc_i.gradients()
            + self.enc_e.gradients()
            + self.moe.gradients()
        )

    def meta(self) -> dict:
        cfg = self.config
        return {
            "kind": "posenet",
            "layout_checksum": layout_checksum(),
            "input_dim": INPUT_DIM,
            "output_dim": OUTPUT_DIM,
            "config": {
                "encoder_control": list(cfg.encoder_control),
                "encoder_body": list(cfg.encoder_body),
                "encoder_goal": list(cfg.encoder_goal),
                "encoder_chair": list(cfg.encoder_chair),
                "encoder_ego": list(cfg.encoder_ego),
                "experts": cfg.experts,
                "expert_hidden": cfg.expert_hidden,
                "gate_hidden": cfg.gate_hidden,
            },
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "PoseNetModel":
        if meta.get("layout_checksum") != layout_checksum():
            raise ValueError("checkpoint layout checksum does not match this build")
        c = meta["config"]
        cfg = PoseNetConfig(
            encoder_control=tuple(c["encoder_control"]),
            encoder_body=tuple(c["encoder_body"]),
            encoder_goal=tuple(c["encoder_goal"]),
            encoder_chair=tuple(c["encoder_chair"]),
            encoder_ego=tuple(c["encoder_ego"]),
            experts=c["experts"],
            expert_hidden=c["expert_hidden"],
            gate_hidden=c["gate_hidden"],
        )
        return cls(cfg)


def posenet_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over the full output vector, with gradient."""
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred - target
    loss = float(np.mean(d**2))
    return loss, 2.0 * d / d.size


@dataclass
class PoseDataset:
    """Frame-pair training data: raw inputs and raw targets."""

    inputs: np.ndarray  # (N, INPUT_DIM)
    targets: np.ndarray  # (N, OUTPUT_DIM)

    def __post_init__(self):
        if self.inputs.shape[1] != INPUT_DIM or self.targets.shape[1] != OUTPUT_DIM:
            raise ValueError("dataset dimensions do not match the layout")
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs/targets length mismatch")


def train_posenet(
    dataset: PoseDataset,
    config: PoseNetConfig | None = None,
    log=None,
    gate_ablation: bool = False,
) -> tuple[PoseNetModel, dict]:
    from .neural.optim import Adam, cosine_lr

    cfg = config or PoseNetConfig()
    if len(dataset.inputs) == 0:
        raise ValueError("empty training dataset")
    rng = np.random.default_rng(cfg.seed)
    model = PoseNetModel(cfg, rng)
    model.input_norm = Normalizer.fit(dataset.inputs)
    model.output_norm = Normalizer.fit(dataset.targets)

    x_all = model.input_norm.apply(dataset.inputs)
    y_all = model.output_norm.apply(dataset.targets)
    n = len(x_all)
    n_val = max(1, int(n * cfg.val_fraction)) if n > 10 else 0
    order = rng.permutation(n)
    val_idx = order[:n_val]
    train_idx = order[n_val:]

    opt = Adam(model)
    history = {"train": [], "val": [], "lr": []}
    best = (np.inf, model.param_vector())
    n_batches = max(1, len(train_idx) // cfg.batch_size)

    # noise goes on the state blocks the rollout feeds back into itself
    noisy = np.zeros(INPUT_DIM, dtype=bool)
    for block in ("control", "joints", "trajectory", "phase"):
        a, b = INPUT_LAYOUT[block]
        noisy[a:b] = True

    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr0, cfg.lr_min)
        perm = rng.permutation(len(train_idx))
        total = 0.0
        for bi in range(n_batches):
            ids = train_idx[perm[bi * cfg.batch_size : (bi + 1) * cfg.batch_size]]
            if len(ids) == 0:
                continue
            xb = x_all[ids]
            if cfg.input_noise_std > 0:
                xb = xb.copy()
                xb[:, noisy] += cfg.input_noise_std * rng.standard_normal(
                    (len(ids), int(noisy.sum()))
                )
            if gate_ablation:
                xb = xb.copy()
                xb[:, model.gate_idx] = 0.0
            model.zero_grads()
            yp = model.forward_norm(xb)
            loss, dy = posenet_loss(yp, y_all[ids])
            model.backward_norm(dy)
            opt.step(lr)
            total += loss
        total /= n_batches
        if n_val:
            xv = x_all[val_idx]
            if gate_ablation:
                xv = xv.copy()
                xv[:, model.gate_idx] = 0.0
            val_loss, _ = posenet_loss(model.forward_norm(xv), y_all[val_idx])
        else:
            val_loss = total
        history["train"].append(total)
        history["val"].append(val_loss)
        history["lr"].append(lr)
        if val_loss < best[0]:
            best = (val_loss, model.param_vector())
        if log:
            log(f"posenet epoch {epoch}: train {total:.5f} val {val_loss:.5f} lr {lr:.2e}")

    model.set_param_vector(best[1])
    return model, history

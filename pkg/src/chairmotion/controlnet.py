"""Hand-motion planner: future hand trajectories relative to contact targets.

The control signal for frame i+1 holds, per hand, 7 future positions
relative to that hand's contact point plus 7 future local-phase samples.
Inputs are the straight guidance line from the current hand to its contact,
the recent local-phase window, and the current pose; a 2-layer LSTM carries
temporal state. Hands without a contact run with zeroed blocks throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics.frames import MotionFrame
from .neural.layers import Dense, DenseNet, Module
from .neural.normalizer import Normalizer
from .neural.recurrent import RecurrentStack

TAU = 13  # phase-window samples over [-1, +1] s
TAU_PLUS = 7  # future samples over [0, +1] s
TRAJ_SIZE = 2 * 3 * TAU_PLUS  # 42
PHASE_SIZE = 2 * TAU_PLUS  # 14
SIGNAL_SIZE = TRAJ_SIZE + PHASE_SIZE  # 56
POSE_FEATURES = 22 * (3 + 6 + 3)  # 264
GUIDANCE_SIZE = TRAJ_SIZE
PHASE_WINDOW_SIZE = 2 * TAU  # 26

ONSET_SPEED = 0.25  # m/s toward the contact
ONSET_RUN = 3  # consecutive frames


@dataclass
class ControlSignal:
    """Planned hand control: trajectories (2, 3, tau+) + local phases (2, tau+)."""

    hand_trajectories: np.ndarray
    local_phases: np.ndarray

    def __post_init__(self):
        self.hand_trajectories = np.asarray(self.hand_trajectories, dtype=np.float64)
        self.local_phases = np.asarray(self.local_phases, dtype=np.float64)
        if self.hand_trajectories.shape != (2, 3, TAU_PLUS):
            raise ValueError(f"trajectories shape {self.hand_trajectories.shape}")
        if self.local_phases.shape != (2, TAU_PLUS):
            raise ValueError(f"phases shape {self.local_phases.shape}")

    @classmethod
    def zeros(cls) -> "ControlSignal":
        return cls(np.zeros((2, 3, TAU_PLUS)), np.zeros((2, TAU_PLUS)))

    @classmethod
    def unflatten(cls, v: np.ndarray) -> "ControlSignal":
        v = np.asarray(v, dtype=np.float64).reshape(SIGNAL_SIZE)
        return cls(
            v[:TRAJ_SIZE].reshape(2, 3, TAU_PLUS),
            v[TRAJ_SIZE:].reshape(2, TAU_PLUS),
        )

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.hand_trajectories.ravel(), self.local_phases.ravel()]
        )

    def zero_hand(self, hand: int) -> "ControlSignal":
        out = ControlSignal(self.hand_trajectories.copy(), self.local_phases.copy())
        out.hand_trajectories[hand] = 0.0
        out.local_phases[hand] = 0.0
        return out

    def clamped(self) -> "ControlSignal":
        return ControlSignal(
            self.hand_trajectories, np.clip(self.local_phases, 0.0, 1.0)
        )


@dataclass
class GuidanceLine:
    """Straight-line interpolation from each hand to its contact, contact-relative."""

    values: np.ndarray  # (2, 3, TAU_PLUS)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (2, 3, TAU_PLUS):
            raise ValueError(f"guidance shape {self.values.shape}")

    def flatten(self) -> np.ndarray:
        return self.values.ravel()


@dataclass
class LocalPhaseWindow:
    values: np.ndarray  # (2, TAU)

    def __post_init__(self):
        self.values = np.clip(np.asarray(self.values, dtype=np.float64), 0.0, 1.0)
        if self.values.shape != (2, TAU):
            raise ValueError(f"phase window shape {self.values.shape}")

    def flatten(self) -> np.ndarray:
        return self.values.ravel()


def make_guidance(
    hand_positions: np.ndarray, contacts: list[np.ndarray | None]
) -> GuidanceLine:
    """tau+ points fading linearly from (hand - contact) to zero.

    hand_positions: (2, 3); contacts: per-hand point or None (zero block).
    All quantities must share one frame; the result is frame-relative
    (translating hand and contact together changes nothing).
    """
    values = np.zeros((2, 3, TAU_PLUS))
    fade = 1.0 - np.arange(TAU_PLUS) / (TAU_PLUS - 1)
    for h in range(2):
        if contacts[h] is None:
            continue
        rel = np.asarray(hand_positions[h]) - np.asarray(contacts[h])
        values[h] = rel[:, None] * fade[None, :]
    return GuidanceLine(values)


def extract_local_phase(
    sequence: list[MotionFrame],
    chair,
    hand: str,
    skeleton,
    contact_threshold: float = 0.05,
    fps: float = 30.0,
) -> np.ndarray:
    """Per-frame reach progress for one hand: 0 at movement onset, 1 at contact.

    Contact frames come from chair-surface proximity; within each reach the
    phase is the normalized remaining-distance progress, monotonized by a
    running max. Frames outside any reach are 0 (before) or 1 (while the
    contact holds).
    """
    n = len(sequence)
    phases = np.zeros(n)
    if n == 0 or chair is None:
        return phases
    wrist = skeleton.index(f"{hand}_wrist")
    pos = np.array([fr.world_positions()[wrist] for fr in sequence])
    dist = np.array([chair.distance_world(p) for p in pos])
    in_contact = dist < contact_threshold
    if not in_contact.any():
        return phases

    # contiguous contact groups
    idx = np.where(in_contact)[0]
    groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    prev_release = -1
    for g in groups:
        c0, c1 = int(g[0]), int(g[-1])
        contact_point = pos[c0]
        d = np.linalg.norm(pos - contact_point, axis=1)
        # onset: walk back from contact until approach speed stays low
        onset = max(prev_release + 1, 0)
        below = 0
        for t in range(c0 - 1, prev_release, -1):
            speed_toward = (d[t] - d[t + 1]) * fps
            if speed_toward < ONSET_SPEED:
                below += 1
                if below >= ONSET_RUN:
                    onset = t + ONSET_RUN
                    break
            else:
                below = 0
        if c0 > onset and d[onset] > 1e-9:
            prog = 1.0 - d[onset : c0 + 1] / d[onset]
            phases[onset : c0 + 1] = np.maximum.accumulate(np.clip(prog, 0.0, 1.0))
        phases[c0 : c1 + 1] = 1.0
        prev_release = c1
    return phases


class ControlNetModel(Module):
    """Encoders + 2-layer LSTM + linear head over the flattened control signal."""

    def __init__(
        self,
        encoder_width: int = 128,
        hidden: int = 512,
        rng: np.random.Generator | None = None,
    ):
        rng = rng or np.random.default_rng(0)
        self.encoder_width = encoder_width
        self.hidden = hidden
        e = encoder_width
        self.pose_enc = DenseNet([POSE_FEATURES, e, e], rng, name="cn.pose", elu_output=True)
        self.guid_enc = DenseNet([GUIDANCE_SIZE, e, e], rng, name="cn.guid", elu_output=True)
        self.phase_enc = DenseNet([PHASE_WINDOW_SIZE, e, e], rng, name="cn.phase", elu_output=True)
        self.rnn = RecurrentStack(3 * e, hidden=hidden, layers=2, rng=rng, name="cn.rnn")
        self.head = Dense(hidden, SIGNAL_SIZE, rng, name="cn.head")
        self.input_norm: Normalizer | None = None
        self.output_norm: Normalizer | None = None

    # stacked input layout: pose | guidance | phase window
    @staticmethod
    def pack_input(pose_vec, guidance_vec, phase_vec) -> np.ndarray:
        return np.concatenate([pose_vec, guidance_vec, phase_vec], axis=-1)

    def initial_state(self, batch: int = 1):
        return self.rnn.initial_state(batch)

    def _encode(self, x_norm: np.ndarray) -> np.ndarray:
        p = self.pose_enc.forward(x_norm[..., :POSE_FEATURES])
        g = self.guid_enc.forward(
            x_norm[..., POSE_FEATURES : POSE_FEATURES + GUIDANCE_SIZE]
        )
        f = self.phase_enc.forward(x_norm[..., POSE_FEATURES + GUIDANCE_SIZE :])
        return np.concatenate([p, g, f], axis=-1)

    def step(
        self, x_raw: np.ndarray, state, record: bool = False
    ) -> tuple[np.ndarray, list]:
        """One frame: raw packed input -> raw flattened control signal."""
        if self.input_norm is None or self.output_norm is None:
            raise RuntimeError("model has no normalization statistics")
        x = self.input_norm.apply(np.atleast_2d(x_raw))
        h, new_state = self.rnn.step(self._encode(x), state, record=record)
        y = self.head.forward(h)
        return self.output_norm.invert(y), new_state

    def forward_signal(self, pose_vec, guidance: GuidanceLine, phases: LocalPhaseWindow, state):
        """Convenience wrapper returning a clamped ControlSignal."""
        x = self.pack_input(pose_vec, guidance.flatten(), phases.flatten())
        y, new_state = self.step(x, state)
        sig = ControlSignal.unflatten(y[0]).clamped()
        return sig, new_state

    def parameters(self):
        return (
            self.pose_enc.parameters()
            + self.guid_enc.parameters()
            + self.phase_enc.parameters()
            + self.rnn.parameters()
            + self.head.parameters()
        )

    def gradients(self):
        return (
            self.pose_enc.gradients()
            + self.guid_enc.gradients()
            + self.phase_enc.gradients()
            + self.rnn.gradients()
            + self.head.gradients()
        )

    def meta(self) -> dict:
        return {
            "kind": "controlnet",
            "encoder_width": self.encoder_width,
            "hidden": self.hidden,
        }


def controlnet_loss(
    pred: np.ndarray,
    target: np.ndarray,
    guidance: np.ndarray,
    lambdas: tuple[float, float, float] = (1.0, 1.0, 0.1),
) -> tuple[float, np.ndarray]:
    """Trajectory MSE + phase MSE + guidance-regularizer norm, with gradient.

    pred/target: (B, 56) raw control signals; guidance: (B, 42). The
    regularizer is the (unsquared) Euclidean distance between the predicted
    trajectory block and the guidance line, averaged over the batch.
    """
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    guidance = np.atleast_2d(guidance)
    l1, l2, l3 = lambdas
    b = pred.shape[0]

    d_traj = pred[:, :TRAJ_SIZE] - target[:, :TRAJ_SIZE]
    d_phase = pred[:, TRAJ_SIZE:] - target[:, TRAJ_SIZE:]
    mse_traj = float(np.mean(d_traj**2))
    mse_phase = float(np.mean(d_phase**2))

    reg_diff = pred[:, :TRAJ_SIZE] - guidance
    reg_norms = np.linalg.norm(reg_diff, axis=1)
    reg = float(np.mean(reg_norms))

    loss = l1 * mse_traj + l2 * mse_phase + l3 * reg

    grad = np.zeros_like(pred)
    grad[:, :TRAJ_SIZE] += l1 * 2.0 * d_traj / d_traj.size
    grad[:, TRAJ_SIZE:] += l2 * 2.0 * d_phase / d_phase.size
    safe = np.maximum(reg_norms, 1e-12)
    grad[:, :TRAJ_SIZE] += l3 * reg_diff / safe[:, None] / b
    return loss, grad


@dataclass
class ControlNetConfig:
    encoder_width: int = 128
    hidden: int = 512
    epochs: int = 150
    window: int = 60
    batch_size: int = 32
    lr0: float = 1e-3
    lr_min: float = 5e-6
    lambdas: tuple[float, float, float] = (1.0, 1.0, 0.1)
    # scheduled sampling ramps 0 -> sampling_max over these epoch fractions
    sampling_ramp: tuple[float, float] = (0.2, 0.8)
    sampling_max: float = 1.0
    val_fraction: float = 0.1
    seed: int = 0


@dataclass
class ControlWindow:
    """One 60-frame training window (precomputed per-frame raw features)."""

    pose: np.ndarray  # (T, 264)
    hand_root: np.ndarray  # (T, 2, 3) gt hand positions, root frame
    contact_root: np.ndarray  # (T, 2, 3) active contact in root frame (0 if none)
    phase_window: np.ndarray  # (T, 26)
    target: np.ndarray  # (T, 56)
    has_contact: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 2), dtype=bool)
    )  # (T, 2) per-frame active-contact mask


def guidance_from_state(
    hand_root: np.ndarray, contact_root: np.ndarray, has_contact: np.ndarray
) -> np.ndarray:
    """(2,3) hand + (2,3) contact -> flattened guidance, zeroed per inactive hand."""
    contacts = [contact_root[h] if has_contact[h] else None for h in range(2)]
    return make_guidance(hand_root, contacts).flatten()


def sampling_probability(epoch: int, cfg: ControlNetConfig) -> float:
    lo = cfg.sampling_ramp[0] * cfg.epochs
    hi = cfg.sampling_ramp[1] * cfg.epochs
    if epoch <= lo:
        return 0.0
    if epoch >= hi:
        return cfg.sampling_max
    return cfg.sampling_max * float((epoch - lo) / max(hi - lo, 1e-9))


def train_controlnet(
    windows: list[ControlWindow],
    config: ControlNetConfig | None = None,
    log=None,
) -> tuple[ControlNetModel, dict]:
    """Teacher-forced BPTT over 60-frame windows with scheduled sampling."""
    from .neural.optim import Adam, cosine_lr

    cfg = config or ControlNetConfig()
    if not windows:
        raise ValueError("empty training dataset")
    rng = np.random.default_rng(cfg.seed)

    model = ControlNetModel(cfg.encoder_width, cfg.hidden, rng)

    # normalization stats over all frames of all windows (teacher-forced inputs)
    xs = []
    ys = []
    for w in windows:
        for t in range(w.pose.shape[0]):
            guid = guidance_from_state(w.hand_root[t], w.contact_root[t], w.has_contact[t])
            xs.append(model.pack_input(w.pose[t], guid, w.phase_window[t]))
            ys.append(w.target[t])
    model.input_norm = Normalizer.fit(np.array(xs))
    model.output_norm = Normalizer.fit(np.array(ys))

    n_val = max(1, int(len(windows) * cfg.val_fraction)) if len(windows) > 4 else 0
    order = rng.permutation(len(windows))
    val_ids = set(order[:n_val].tolist())
    train_windows = [windows[i] for i in range(len(windows)) if i not in val_ids]
    val_windows = [windows[i] for i in sorted(val_ids)]

    opt = Adam(model)
    history = {"train": [], "val": [], "lr": []}
    best = (np.inf, model.param_vector())

    def run_window_batch(batch: list[ControlWindow], p_sample: float, train: bool) -> float:
        t_len = min(w.pose.shape[0] for w in batch)
        bsz = len(batch)
        state = model.initial_state(bsz)
        pose = np.stack([w.pose[:t_len] for w in batch], axis=1)  # (T, B, 264)
        hand = np.stack([w.hand_root[:t_len] for w in batch], axis=1)  # (T, B, 2, 3)
        contact = np.stack([w.contact_root[:t_len] for w in batch], axis=1)
        phase = np.stack([w.phase_window[:t_len] for w in batch], axis=1)
        target = np.stack([w.target[:t_len] for w in batch], axis=1)
        has_contact = np.stack([w.has_contact[:t_len] for w in batch], axis=1)  # (T, B, 2)

        model.rnn.reset_cache()
        total = 0.0
        head_caches = []
        enc_caches = []
        grads_y = []
        hand_used = hand[0].copy()
        fade = 1.0 - np.arange(TAU_PLUS) / (TAU_PLUS - 1)
        for t in range(t_len):
            rel = hand_used - contact[t]
            guid = rel[..., None] * fade  # (B, 2, 3, 7)
            guid[~has_contact[t]] = 0.0
            guid_flat = guid.reshape(bsz, -1)
            x_raw = np.concatenate([pose[t], guid_flat, phase[t]], axis=-1)
            x = model.input_norm.apply(x_raw)
            enc = model._encode(x)
            h, state = model.rnn.step(enc, state, record=train)
            y_norm = model.head.forward(h)
            y = model.output_norm.invert(y_norm)
            loss, dy = controlnet_loss(y, target[t], guid_flat, cfg.lambdas)
            total += loss
            if train:
                grads_y.append(dy * model.output_norm.std)  # back through invert
                head_caches.append(h)
                enc_caches.append((x, enc))
            # scheduled sampling: next step's "current hand" may come from
            # this prediction (stop-gradient feedback)
            pred_sig = y[:, : 2 * 3 * TAU_PLUS].reshape(bsz, 2, 3, TAU_PLUS)
            use_pred = rng.random(bsz) < p_sample
            next_t = min(t + 1, t_len - 1)
            hand_used = hand[next_t].copy()
            if use_pred.any():
                pred_hand = contact[next_t] + pred_sig[:, :, :, 0]
                for hnd in range(2):
                    sel = use_pred & has_contact[next_t][:, hnd]
                    hand_used[sel, hnd] = pred_hand[sel, hnd]

        if train:
            # backprop through the head per step, then BPTT through the rnn
            d_h_seq = []
            for t in range(t_len):
                model.head._x = head_caches[t]
                d_h_seq.append(model.head.backward(grads_y[t]))
            d_enc_seq = model.rnn.backward_sequence(d_h_seq)
            for t in range(t_len):
                x, _ = enc_caches[t]
                e = model.encoder_width
                d = d_enc_seq[t]
                model.pose_enc.forward(x[..., :POSE_FEATURES])
                model.pose_enc.backward(d[..., :e])
                model.guid_enc.forward(x[..., POSE_FEATURES : POSE_FEATURES + GUIDANCE_SIZE])
                model.guid_enc.backward(d[..., e : 2 * e])
                model.phase_enc.forward(x[..., POSE_FEATURES + GUIDANCE_SIZE :])
                model.phase_enc.backward(d[..., 2 * e :])
        return total / t_len

    n_batches = max(1, len(train_windows) // cfg.batch_size)
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr0, cfg.lr_min)
        p_sample = sampling_probability(epoch, cfg)
        perm = rng.permutation(len(train_windows))
        epoch_loss = 0.0
        for bi in range(n_batches):
            ids = perm[bi * cfg.batch_size : (bi + 1) * cfg.batch_size]
            if len(ids) == 0:
                continue
            batch = [train_windows[i] for i in ids]
            model.zero_grads()
            epoch_loss += run_window_batch(batch, p_sample, train=True)
            opt.step(lr)
        epoch_loss /= n_batches
        if val_windows:
            val_loss = run_window_batch(val_windows, 0.0, train=False)
        else:
            val_loss = epoch_loss
        history["train"].append(epoch_loss)
        history["val"].append(val_loss)
        history["lr"].append(lr)
        if val_loss < best[0]:
            best = (val_loss, model.param_vector())
        if log:
            log(f"controlnet epoch {epoch}: train {epoch_loss:.5f} val {val_loss:.5f} lr {lr:.2e}")

    model.set_param_vector(best[1])
    return model, history

"""Object-swap augmentation: replace the chair, reproject contacts, fix poses.

For every annotated contact the original contact point is projected onto the
new chair's surface, and per-frame IK pulls the contacting joints onto the
warped targets. Frames within half a second of a contact group get eased
targets so corrections blend in and out smoothly. Sequences whose IK
residuals stay above 5 cm on more than 10% of contact frames are rejected
(with the report attached either way).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kinematics.fk import make_frame, character_to_local
from ..kinematics.ik import solve_fullbody_ik
from ..kinematics.skeleton import default_skeleton
from ..scene.chair import ChairModel
from .sequence import SequenceFile

BLEND_FRAMES = 15  # 0.5 s at 30 fps
RESIDUAL_LIMIT = 0.05
REJECT_FRACTION = 0.10
SCALE_RANGE = (0.8, 1.2)

# contact slots: (flag column, joint name)
_SLOTS = (
    (0, "pelvis"),
    (1, "left_wrist"),
    (2, "right_wrist"),
    (3, "left_ankle"),
    (4, "right_ankle"),
)


@dataclass
class AugmentResult:
    sequence: SequenceFile | None
    accepted: bool
    contact_frames: int
    bad_frames: int
    max_residual: float
    per_joint_max: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "contact_frames": self.contact_frames,
            "bad_frames": self.bad_frames,
            "max_residual_cm": self.max_residual * 100.0,
            "per_joint_max_cm": {k: v * 100.0 for k, v in self.per_joint_max.items()},
        }


def _blend_weights(flags: np.ndarray, blend: int) -> np.ndarray:
    """Per-frame correction weight: 1 inside groups, easing over the window."""
    t = len(flags)
    w = flags.astype(np.float64).copy()
    idx = np.where(flags > 0.5)[0]
    if len(idx) == 0:
        return w
    groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    for g in groups:
        g0, g1 = int(g[0]), int(g[-1])
        for k in range(1, blend + 1):
            u = 1.0 - k / (blend + 1)
            if g0 - k >= 0:
                w[g0 - k] = max(w[g0 - k], u)
            if g1 + k < t:
                w[g1 + k] = max(w[g1 + k], u)
    return w


def augment_object_swap(
    seq: SequenceFile,
    source_chair: ChairModel,
    new_chair: ChairModel,
    scale: float = 1.0,
    skeleton=None,
) -> AugmentResult:
    skeleton = skeleton or default_skeleton()
    if not (SCALE_RANGE[0] <= scale <= SCALE_RANGE[1]):
        raise ValueError(f"scale {scale} outside {SCALE_RANGE}")

    target_chair = new_chair if scale == 1.0 else new_chair.scaled(scale)
    # the replacement sits at the same world placement as the original
    placement = (
        seq.chair_transform if seq.chair_transform is not None else source_chair.transform
    )
    target_chair = target_chair.with_transform(placement.copy())

    t_total = len(seq)
    joint_ids = {name: skeleton.index(name) for _, name in _SLOTS}
    world = np.array([fr.world_positions() for fr in seq.frames])

    # original contact point per slot group = joint position at group start;
    # warped target = its projection on the new chair (feet stay grounded)
    targets = np.full((t_total, 5, 3), np.nan)
    weights = np.zeros((t_total, 5))
    for slot, (col, name) in enumerate(_SLOTS):
        flags = seq.contact_flags[:, col] > 0.5
        if not flags.any():
            continue
        weights[:, slot] = _blend_weights(flags, BLEND_FRAMES)
        jid = joint_ids[name]
        idx = np.where(flags)[0]
        groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
        for g in groups:
            g0, g1 = int(g[0]), int(g[-1])
            original = world[g0, jid]
            if name in ("left_ankle", "right_ankle"):
                delta = np.zeros(3)  # ground contacts are chair-independent
            else:
                # reprojection delta: where the old chair's contact lands on
                # the new chair, relative to where it was (identity swap -> 0)
                on_new, _ = target_chair.closest_point_world(original)
                on_old, _ = source_chair.with_transform(placement).closest_point_world(original)
                delta = on_new - on_old
            lo = max(g0 - BLEND_FRAMES, 0)
            hi = min(g1 + BLEND_FRAMES, t_total - 1)
            for t in range(lo, hi + 1):
                if weights[t, slot] > 0:
                    targets[t, slot] = world[t, jid] + weights[t, slot] * delta

    new_frames = []
    residuals = []
    contact_frames = 0
    bad = 0
    per_joint_max = {name: 0.0 for _, name in _SLOTS}
    for t in range(t_total):
        fr = seq.frames[t]
        constraints = []
        slot_names = []
        for slot, (col, name) in enumerate(_SLOTS):
            if np.isfinite(targets[t, slot, 0]):
                constraints.append((joint_ids[name], targets[t, slot]))
                slot_names.append(name)
        if not constraints:
            new_frames.append(fr.copy())
            continue
        solve_root = any(n == "pelvis" for n in slot_names)
        res = solve_fullbody_ik(
            skeleton, fr, constraints, solve_root=solve_root, tolerance=0.005
        )
        new_frames.append(res.pose)
        if (seq.contact_flags[t, :] > 0.5).any():
            contact_frames += 1
            worst = res.max_residual
            residuals.append(worst)
            if worst > RESIDUAL_LIMIT:
                bad += 1
            for name, dist in zip(slot_names, res.residuals):
                per_joint_max[name] = max(per_joint_max[name], float(dist))

    # velocities refreshed from the corrected world positions
    for t in range(t_total):
        if t == 0:
            new_frames[t].joint_velocities[...] = seq.frames[0].joint_velocities
        else:
            delta = new_frames[t].world_positions() - new_frames[t - 1].world_positions()
            new_frames[t].joint_velocities[...] = new_frames[t].root.direction_to_local(delta)

    accepted = contact_frames == 0 or (bad / max(contact_frames, 1)) <= REJECT_FRACTION
    out_seq = None
    if accepted:
        contacts = seq.contacts
        if contacts.any_active:
            contacts = contacts.projected(target_chair)
        out_seq = SequenceFile(
            subject=seq.subject,
            chair_id=target_chair.id,
            interaction_type=seq.interaction_type,
            frames=new_frames,
            contact_flags=seq.contact_flags.copy(),
            local_phases=seq.local_phases.copy(),
            global_phase=seq.global_phase.copy(),
            contacts=contacts,
            goal=seq.goal,
            fps=seq.fps,
            chair_transform=placement.copy(),
        )
    return AugmentResult(
        sequence=out_seq,
        accepted=accepted,
        contact_frames=contact_frames,
        bad_frames=bad,
        max_residual=float(max(residuals)) if residuals else 0.0,
        per_joint_max=per_joint_max,
    )

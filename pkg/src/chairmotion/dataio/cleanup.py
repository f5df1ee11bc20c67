"""Post-capture cleanup: temporal smoothing and foot-slide removal.

The smoother does gradient descent with backtracking on the rotation
sequence objective (squared frame-to-frame difference plus the unsquared
central-difference acceleration norm); the objective is evaluated exactly,
so each accepted step is non-increasing. Foot-slide removal averages each
contact group's foot position and pulls the feet onto those anchors with
per-frame IK.
"""

from __future__ import annotations

import numpy as np

from ..kinematics.fk import make_frame, character_to_local
from ..kinematics.ik import solve_fullbody_ik
from ..kinematics.rotations import rot6d_to_matrix_batch, matrix_to_rot6d_batch
from ..kinematics.skeleton import default_skeleton
from .sequence import SequenceFile

SMOOTH_ITERATIONS = 50
SMOOTH_EPS = 1e-12
SLIDE_BLEND_FRAMES = 3


def smoothness_objective(rotations: np.ndarray, weights=(1.0, 1.0)) -> float:
    """Sum of squared first differences plus unsquared acceleration norms.

    rotations: (T, J, 6) rotation features over time.
    """
    r = np.asarray(rotations, dtype=np.float64)
    w1, w2 = weights
    diff = r[1:] - r[:-1]
    term1 = float(np.sum(diff**2))
    acc = r[2:] - 2.0 * r[1:-1] + r[:-2]
    term2 = float(np.sum(np.sqrt(np.sum(acc.reshape(len(acc), -1) ** 2, axis=1))))
    return w1 * term1 + w2 * term2


def _objective_gradient(r: np.ndarray, weights=(1.0, 1.0), eps=1e-9) -> np.ndarray:
    w1, w2 = weights
    grad = np.zeros_like(r)
    diff = r[1:] - r[:-1]
    grad[1:] += 2.0 * w1 * diff
    grad[:-1] -= 2.0 * w1 * diff
    acc = r[2:] - 2.0 * r[1:-1] + r[:-2]
    norms = np.sqrt(np.sum(acc.reshape(len(acc), -1) ** 2, axis=1))
    unit = acc / np.maximum(norms, eps)[:, None, None]
    grad[2:] += w2 * unit
    grad[1:-1] -= 2.0 * w2 * unit
    grad[:-2] += w2 * unit
    return grad


def temporal_smooth(
    seq: SequenceFile,
    iterations: int = SMOOTH_ITERATIONS,
    weights=(1.0, 1.0),
    skeleton=None,
) -> tuple[SequenceFile, list[float]]:
    """Minimize the rotation-smoothness objective; returns (sequence, trace)."""
    skeleton = skeleton or default_skeleton()
    t_total = len(seq)
    if t_total < 3:
        return seq, [smoothness_objective(np.array([f.joint_rotations for f in seq.frames]), weights)]

    r = np.array([fr.joint_rotations for fr in seq.frames])  # (T, J, 6)
    trace = [smoothness_objective(r, weights)]
    step = 0.05
    for _ in range(iterations):
        g = _objective_gradient(r, weights)
        # endpoints stay anchored so the clip boundaries don't drift
        g[0] = 0.0
        g[-1] = 0.0
        accepted = False
        for _ in range(20):
            cand = r - step * g
            val = smoothness_objective(cand, weights)
            if val <= trace[-1]:
                r = cand
                trace.append(val)
                accepted = True
                step *= 1.3
                break
            step *= 0.5
        if not accepted or (len(trace) > 1 and trace[-2] - trace[-1] < SMOOTH_EPS):
            break

    # rebuild frames: positions re-derived through FK on the smoothed rotations
    new_frames = []
    prev = None
    for t in range(t_total):
        fr = seq.frames[t]
        local = character_to_local(skeleton, rot6d_to_matrix_batch(r[t]))
        nf = make_frame(skeleton, local, fr.root, fr.action_labels, prev)
        new_frames.append(nf)
        prev = nf
    out = SequenceFile(
        subject=seq.subject,
        chair_id=seq.chair_id,
        interaction_type=seq.interaction_type,
        frames=new_frames,
        contact_flags=seq.contact_flags.copy(),
        local_phases=seq.local_phases.copy(),
        global_phase=seq.global_phase.copy(),
        contacts=seq.contacts,
        goal=seq.goal,
        fps=seq.fps,
        chair_transform=None if seq.chair_transform is None else seq.chair_transform.copy(),
    )
    return out, trace


def detect_ground_foot_contacts(
    seq: SequenceFile,
    skeleton=None,
    height_limit: float = 0.12,
    speed_limit: float = 0.35,
) -> np.ndarray:
    """(T, 4) planted flags for (l_ankle, l_toe, r_ankle, r_toe)."""
    skeleton = skeleton or default_skeleton()
    ids = skeleton.foot_joint_indices
    pos = np.array([fr.world_positions()[ids] for fr in seq.frames])  # (T, 4, 3)
    heights = pos[..., 1]
    speeds = np.zeros(heights.shape)
    if len(pos) > 1:
        speeds[1:] = np.linalg.norm(np.diff(pos, axis=0), axis=2) * seq.fps
        speeds[0] = speeds[1]
    limits = np.array([height_limit, height_limit * 0.6, height_limit, height_limit * 0.6])
    return (heights < limits[None, :]) & (speeds < speed_limit)


def group_mean_targets(
    positions: np.ndarray, labels: np.ndarray
) -> list[tuple[int, int, np.ndarray]]:
    """Per contiguous positive-label group: (start, end, mean world position)."""
    out = []
    idx = np.where(labels)[0]
    if len(idx) == 0:
        return out
    groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    for g in groups:
        g0, g1 = int(g[0]), int(g[-1])
        out.append((g0, g1, positions[g0 : g1 + 1].mean(axis=0)))
    return out


def foot_slide_metric(seq: SequenceFile, labels: np.ndarray, skeleton=None) -> float:
    """Mean per-frame displacement of feet while labeled in contact (meters)."""
    skeleton = skeleton or default_skeleton()
    ids = skeleton.foot_joint_indices
    pos = np.array([fr.world_positions()[ids] for fr in seq.frames])
    slides = []
    for f in range(4):
        lab = labels[:, f]
        for t in range(1, len(seq)):
            if lab[t] and lab[t - 1]:
                slides.append(np.linalg.norm(pos[t, f] - pos[t - 1, f]))
    return float(np.mean(slides)) if slides else 0.0


def remove_foot_slide(
    seq: SequenceFile,
    labels: np.ndarray,
    skeleton=None,
) -> SequenceFile:
    """Anchor labeled foot contacts at their group-mean positions via IK."""
    skeleton = skeleton or default_skeleton()
    labels = np.asarray(labels, dtype=bool)
    t_total = len(seq)
    if labels.shape != (t_total, 4):
        raise ValueError(f"labels shape {labels.shape}, expected ({t_total}, 4)")
    ids = skeleton.foot_joint_indices
    pos = np.array([fr.world_positions()[ids] for fr in seq.frames])

    # per-frame targets with eased lead-in/out around each group
    targets = np.full((t_total, 4, 3), np.nan)
    for f in range(4):
        for g0, g1, mean in group_mean_targets(pos[:, f], labels[:, f]):
            for t in range(g0, g1 + 1):
                targets[t, f] = mean
            for k in range(1, SLIDE_BLEND_FRAMES + 1):
                w = 1.0 - k / (SLIDE_BLEND_FRAMES + 1)
                if g0 - k >= 0 and not np.isfinite(targets[g0 - k, f, 0]):
                    targets[g0 - k, f] = pos[g0 - k, f] + w * (mean - pos[g0 - k, f])
                if g1 + k < t_total and not np.isfinite(targets[g1 + k, f, 0]):
                    targets[g1 + k, f] = pos[g1 + k, f] + w * (mean - pos[g1 + k, f])

    new_frames = []
    for t in range(t_total):
        constraints = [
            (ids[f], targets[t, f]) for f in range(4) if np.isfinite(targets[t, f, 0])
        ]
        if not constraints:
            new_frames.append(seq.frames[t].copy())
            continue
        res = solve_fullbody_ik(
            skeleton,
            seq.frames[t],
            constraints[:5],
            tolerance=0.0005,
            iterations=80,
        )
        new_frames.append(res.pose)

    for t in range(t_total):
        if t == 0:
            new_frames[t].joint_velocities[...] = seq.frames[0].joint_velocities
        else:
            delta = new_frames[t].world_positions() - new_frames[t - 1].world_positions()
            new_frames[t].joint_velocities[...] = new_frames[t].root.direction_to_local(delta)

    return SequenceFile(
        subject=seq.subject,
        chair_id=seq.chair_id,
        interaction_type=seq.interaction_type,
        frames=new_frames,
        contact_flags=seq.contact_flags.copy(),
        local_phases=seq.local_phases.copy(),
        global_phase=seq.global_phase.copy(),
        contacts=seq.contacts,
        goal=seq.goal,
        fps=seq.fps,
        chair_transform=None if seq.chair_transform is None else seq.chair_transform.copy(),
    )

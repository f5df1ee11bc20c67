"""Full-body inverse kinematics.

solve_fullbody_ik runs damped-least-squares steps over all joint rotations
plus (optionally) root translation, with per-joint stiffness weights so a
hand constraint is absorbed by the arm chain rather than the torso, and a
null-space pull back toward the source pose. Backtracking on the residual
makes the iteration monotone.

two_bone_ik is the closed-form shoulder/elbow solve used when constructing
synthetic reach motions; it places the wrist exactly when the target is
within arm's length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fk import character_to_local, fk_full, local_to_character
from .frames import MotionFrame, RootTransform
from .rotations import axis_angle_matrix, matrix_to_rot6d_batch
from .skeleton import Skeleton

DEFAULT_DAMPING = 0.01
DEFAULT_ITERATIONS = 50
DEFAULT_TOLERANCE = 0.01  # meters
SOURCE_PULL = 0.1

# Stiffness per joint name prefix; higher = moves less. Arm chain is cheap so
# hand constraints stay local.
_STIFFNESS = {
    "pelvis": 300.0,
    "spine": 300.0,
    "neck": 300.0,
    "head": 300.0,
    "clavicle": 8.0,
    "shoulder": 1.0,
    "elbow": 1.0,
    "wrist": 1.0,
    "hip": 1.0,
    "knee": 1.0,
    "ankle": 1.0,
    "toe": 1.0,
}
_ROOT_STIFFNESS = 100.0


def _joint_weights(skeleton: Skeleton) -> np.ndarray:
    w = np.ones(skeleton.joint_count)
    for i, name in enumerate(skeleton.names):
        for key, val in _STIFFNESS.items():
            if key in name:
                w[i] = val
                break
    return w


def _log_map(r: np.ndarray) -> np.ndarray:
    """Rotation matrix -> axis-angle vector (robust for small angles)."""
    cos_a = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-9:
        return np.zeros(3)
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = np.linalg.norm(axis)
    if s < 1e-9:
        # near pi: pick the dominant diagonal axis
        d = np.sqrt(np.maximum(np.diag(r) + 1.0, 0.0) / 2.0)
        return angle * d / max(np.linalg.norm(d), 1e-12)
    return angle * axis / s


@dataclass
class IKResult:
    pose: MotionFrame
    residuals: np.ndarray  # (k,) final distance per constraint, meters
    iterations: int
    converged: bool
    residual_trace: list[float] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


def solve_fullbody_ik(
    skeleton: Skeleton,
    pose: MotionFrame,
    constraints: list[tuple[int, np.ndarray]],
    iterations: int = DEFAULT_ITERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
    damping: float = DEFAULT_DAMPING,
    source_pull: float = SOURCE_PULL,
    solve_root: bool = False,
) -> IKResult:
    """Pull constrained joints to world targets, deviating minimally elsewhere.

    constraints: (joint index, world-space target) pairs, at most one per
    joint. Unreachable targets yield a best-effort pose and a nonzero
    residual in the result rather than an error.
    """
    if len(constraints) == 0:
        return IKResult(pose.copy(), np.zeros(0), 0, True, [])
    if len(constraints) > 5:
        raise ValueError("at most 5 constraints (key joints) are supported")

    targets = np.array([np.asarray(t, dtype=np.float64) for _, t in constraints])
    joint_ids = [int(j) for j, _ in constraints]

    local_src = character_to_local(skeleton, pose.joint_rotations)
    local = local_src.copy()
    root = pose.root.copy()
    nj = skeleton.joint_count
    jw = _joint_weights(skeleton)

    # ancestor chains once; constraint rows only see their own chain
    chains = [set(skeleton.ancestors(j)) for j in joint_ids]

    def residual_vec(positions: np.ndarray) -> np.ndarray:
        return (targets - positions[joint_ids]).ravel()

    def rms(err: np.ndarray) -> float:
        return float(np.sqrt(np.mean(err**2)))

    positions, world_rot = fk_full(skeleton, local, root)
    err = residual_vec(positions)
    trace = [rms(err)]
    converged = False
    it = 0

    n_params = 3 * nj + (3 if solve_root else 0)
    inv_sqrt_w = np.concatenate(
        [np.repeat(1.0 / np.sqrt(jw), 3)]
        + ([np.full(3, 1.0 / np.sqrt(_ROOT_STIFFNESS))] if solve_root else [])
    )

    for it in range(1, iterations + 1):
        dists = np.linalg.norm(err.reshape(-1, 3), axis=1)
        if np.all(dists < tolerance):
            converged = True
            break

        jac = np.zeros((3 * len(joint_ids), n_params))
        for ci, jid in enumerate(joint_ids):
            p = positions[jid]
            for a in chains[ci]:
                if a == jid:
                    continue  # a joint's own rotation does not move its origin
                o = positions[a]
                lever = p - o
                for ax in range(3):
                    jac[3 * ci : 3 * ci + 3, 3 * a + ax] = np.cross(
                        world_rot[a][:, ax], lever
                    )
            if solve_root:
                jac[3 * ci : 3 * ci + 3, 3 * nj : 3 * nj + 3] = np.eye(3)

        jw_mat = jac * inv_sqrt_w[None, :]
        gram = jw_mat @ jw_mat.T + (damping**2) * np.eye(jw_mat.shape[0])
        core = np.linalg.solve(gram, err)
        delta = inv_sqrt_w * (jw_mat.T @ core)

        if source_pull > 0.0:
            v = np.zeros(n_params)
            for j in range(nj):
                v[3 * j : 3 * j + 3] = source_pull * _log_map(local[j].T @ local_src[j])
            # project the pull into the constraint null space (first order)
            jv = jac @ v
            v_null = v - inv_sqrt_w * (jw_mat.T @ np.linalg.solve(gram, jv))
            delta = delta + v_null

        # clamp per-joint rotation step
        step_norms = np.linalg.norm(delta[: 3 * nj].reshape(nj, 3), axis=1)
        max_step = step_norms.max() if step_norms.size else 0.0
        if max_step > 0.5:
            delta *= 0.5 / max_step

        base = rms(err)
        scale = 1.0
        accepted = False
        for _ in range(10):
            cand = local.copy()
            for j in range(nj):
                d = scale * delta[3 * j : 3 * j + 3]
                if np.dot(d, d) > 0.0:
                    cand[j] = cand[j] @ axis_angle_matrix(d, np.linalg.norm(d))
            cand_root = root.copy()
            if solve_root:
                dr = scale * delta[3 * nj : 3 * nj + 3]
                cand_root.x += dr[0]
                cand_root.height += dr[1]
                cand_root.z += dr[2]
            cand_pos, cand_rot = fk_full(skeleton, cand, cand_root)
            cand_err = residual_vec(cand_pos)
            if rms(cand_err) <= base + 1e-15:
                local, root = cand, cand_root
                positions, world_rot, err = cand_pos, cand_rot, cand_err
                accepted = True
                break
            scale *= 0.5
        trace.append(rms(err))
        if not accepted or base - rms(err) < 1e-14:
            break

    dists = np.linalg.norm(err.reshape(-1, 3), axis=1)
    converged = bool(np.all(dists < tolerance))

    char = local_to_character(skeleton, local)
    new_world = fk_full(skeleton, local, root)[0]
    out = MotionFrame(
        joint_positions=root.to_local(new_world),
        joint_rotations=matrix_to_rot6d_batch(char),
        joint_velocities=pose.joint_velocities.copy(),
        root=root,
        action_labels=pose.action_labels.copy(),
    )
    return IKResult(out, dists, it, converged, trace)


def _shortest_arc(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rotation matrix taking unit vector a onto unit vector b."""
    a = a / max(np.linalg.norm(a), 1e-12)
    b = b / max(np.linalg.norm(b), 1e-12)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        # pick any perpendicular axis
        helper = np.array([1.0, 0.0, 0.0])
        if abs(a[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        return axis_angle_matrix(axis, np.pi)
    axis = np.cross(a, b)
    angle = np.arccos(np.clip(c, -1.0, 1.0))
    return axis_angle_matrix(axis, angle)


def two_bone_ik(
    skeleton: Skeleton,
    local_rotations: np.ndarray,
    root: RootTransform,
    side: str,
    target: np.ndarray,
    pole_hint: np.ndarray | None = None,
) -> np.ndarray:
    """Closed-form arm IK: rotate shoulder+elbow so the wrist lands on target.

    local_rotations: (J, 3, 3) local matrices, modified copies returned.
    side: "left" or "right". Targets beyond reach clamp to the arm's length
    along the shoulder->target ray.
    """
    sh = skeleton.index(f"{side}_shoulder")
    el = skeleton.index(f"{side}_elbow")
    wr = skeleton.index(f"{side}_wrist")
    local = np.array(local_rotations, dtype=np.float64, copy=True)

    a = float(np.linalg.norm(skeleton.offsets[el]))
    b = float(np.linalg.norm(skeleton.offsets[wr]))
    target = np.asarray(target, dtype=np.float64)

    positions, world_rot = fk_full(skeleton, local, root)
    s = positions[sh]
    to_t = target - s
    d = float(np.linalg.norm(to_t))
    d = float(np.clip(d, abs(a - b) + 1e-6, a + b - 1e-9))
    e_sd = to_t / max(np.linalg.norm(to_t), 1e-12)

    if pole_hint is None:
        # elbows drop down and slightly back relative to facing
        pole_hint = -0.9 * np.array([0.0, 1.0, 0.0]) - 0.45 * root.forward
    pole = pole_hint - e_sd * float(np.dot(pole_hint, e_sd))
    if np.linalg.norm(pole) < 1e-6:
        pole = np.array([0.0, 0.0, 1.0]) - e_sd * e_sd[2]
    pole /= np.linalg.norm(pole)

    cos_alpha = np.clip((a * a + d * d - b * b) / (2.0 * a * d), -1.0, 1.0)
    sin_alpha = np.sqrt(max(0.0, 1.0 - cos_alpha * cos_alpha))
    elbow_pos = s + a * (cos_alpha * e_sd + sin_alpha * pole)

    # aim shoulder at the elbow
    cur_dir = world_rot[sh] @ (skeleton.offsets[el] / a)
    arc = _shortest_arc(cur_dir, (elbow_pos - s) / a)
    w_parent = world_rot[skeleton.parents[sh]]
    local[sh] = w_parent.T @ arc @ w_parent @ local[sh]

    # aim elbow at the (clamped) target
    positions, world_rot = fk_full(skeleton, local, root)
    e = positions[el]
    wrist_target = s + e_sd * d
    cur_fore = world_rot[el] @ (skeleton.offsets[wr] / b)
    des_fore = wrist_target - e
    arc2 = _shortest_arc(cur_fore, des_fore / max(np.linalg.norm(des_fore), 1e-12))
    w_sh = world_rot[skeleton.parents[el]]
    local[el] = w_sh.T @ arc2 @ w_sh @ local[el]
    return local

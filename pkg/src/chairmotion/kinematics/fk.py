"""Forward kinematics and local/character-space rotation conversion."""

from __future__ import annotations

import numpy as np

from .frames import MotionFrame, RootTransform
from .rotations import rot6d_to_matrix_batch
from .skeleton import Skeleton


def _as_matrices(rotations: np.ndarray) -> np.ndarray:
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.shape[-1] == 6:
        return rot6d_to_matrix_batch(rotations)
    return rotations


def forward_kinematics(
    skeleton: Skeleton,
    local_rotations: np.ndarray,
    root: RootTransform,
) -> np.ndarray:
    """World positions of all joints from local (parent-relative) rotations.

    local_rotations: (J, 6) 6D or (J, 3, 3) matrices; joint 0's rotation is
    relative to the root yaw frame. The root joint lands at root.position.
    """
    pos, _ = fk_full(skeleton, local_rotations, root)
    return pos


def fk_full(
    skeleton: Skeleton,
    local_rotations: np.ndarray,
    root: RootTransform,
) -> tuple[np.ndarray, np.ndarray]:
    """World positions (J, 3) and world rotation matrices (J, 3, 3)."""
    mats = _as_matrices(local_rotations)
    j = skeleton.joint_count
    pos = np.zeros((j, 3))
    rot = np.zeros((j, 3, 3))
    root_rot = root.rotation
    pos[0] = root.position
    rot[0] = root_rot @ mats[0]
    for i in range(1, j):
        p = skeleton.parents[i]
        rot[i] = rot[p] @ mats[i]
        pos[i] = pos[p] + rot[p] @ skeleton.offsets[i]
    return pos, rot


def make_frame(
    skeleton: Skeleton,
    local_rotations: np.ndarray,
    root: RootTransform,
    action_labels=(1.0, 0.0, 0.0),
    prev: MotionFrame | None = None,
) -> MotionFrame:
    """Build a consistent MotionFrame from local rotations via FK.

    Velocities are world finite differences against `prev` (zero when absent),
    expressed in the new frame's root axes.
    """
    from .rotations import matrix_to_rot6d_batch

    world = forward_kinematics(skeleton, local_rotations, root)
    char = local_to_character(skeleton, local_rotations)
    if prev is None:
        vel = np.zeros((skeleton.joint_count, 3))
    else:
        vel = root.direction_to_local(world - prev.world_positions())
    return MotionFrame(
        joint_positions=root.to_local(world),
        joint_rotations=matrix_to_rot6d_batch(char),
        joint_velocities=vel,
        root=root.copy(),
        action_labels=np.asarray(action_labels, dtype=np.float64),
    )


def local_to_character(skeleton: Skeleton, local_rotations: np.ndarray) -> np.ndarray:
    """Accumulate local rotations into character-space (root-relative) matrices."""
    mats = _as_matrices(local_rotations)
    out = np.zeros_like(mats)
    out[0] = mats[0]
    for i in range(1, skeleton.joint_count):
        out[i] = out[skeleton.parents[i]] @ mats[i]
    return out


def character_to_local(skeleton: Skeleton, char_rotations: np.ndarray) -> np.ndarray:
    """Invert local_to_character."""
    mats = _as_matrices(char_rotations)
    out = np.zeros_like(mats)
    out[0] = mats[0]
    for i in range(1, skeleton.joint_count):
        out[i] = mats[skeleton.parents[i]].T @ mats[i]
    return out

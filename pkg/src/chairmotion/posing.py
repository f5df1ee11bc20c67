"""Procedural pose construction: relaxed stance, walk cycle, sit blending.

These are analytic poses over local joint rotations. The synthetic dataset
generator layers reach IK on top; the runtime uses the stance as episode
start state.
"""

from __future__ import annotations

import numpy as np

from .kinematics.rotations import axis_angle_matrix
from .kinematics.skeleton import Skeleton

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])

STAND_PELVIS_HEIGHT = 0.95


def relaxed_stand_locals(skeleton: Skeleton) -> np.ndarray:
    """Arms hanging slightly bent, legs straight. Local rotation matrices."""
    local = np.stack([np.eye(3)] * skeleton.joint_count)
    deg = np.radians
    local[skeleton.index("left_shoulder")] = axis_angle_matrix(_Z, deg(-75))
    local[skeleton.index("left_elbow")] = axis_angle_matrix(_Y, deg(-20)) @ axis_angle_matrix(_Z, deg(-8))
    local[skeleton.index("right_shoulder")] = axis_angle_matrix(_Z, deg(75))
    local[skeleton.index("right_elbow")] = axis_angle_matrix(_Y, deg(20)) @ axis_angle_matrix(_Z, deg(8))
    return local


def walk_cycle_locals(
    skeleton: Skeleton, phase: float, intensity: float = 1.0
) -> np.ndarray:
    """Stride pose at walk-cycle phase in [0, 1); intensity scales amplitudes."""
    local = relaxed_stand_locals(skeleton)
    w = 2.0 * np.pi * phase
    hip_amp = np.radians(28.0) * intensity
    knee_amp = np.radians(40.0) * intensity
    arm_amp = np.radians(14.0) * intensity

    hip_l = hip_amp * np.sin(w)
    hip_r = hip_amp * np.sin(w + np.pi)
    # shank flexes most as its leg swings forward
    knee_l = knee_amp * max(0.0, np.sin(w + 2.2))
    knee_r = knee_amp * max(0.0, np.sin(w + np.pi + 2.2))

    local[skeleton.index("left_hip")] = axis_angle_matrix(_X, -hip_l)
    local[skeleton.index("right_hip")] = axis_angle_matrix(_X, -hip_r)
    local[skeleton.index("left_knee")] = axis_angle_matrix(_X, knee_l)
    local[skeleton.index("right_knee")] = axis_angle_matrix(_X, knee_r)
    # ankles counter-rotate a little to keep the feet near level
    local[skeleton.index("left_ankle")] = axis_angle_matrix(_X, 0.35 * hip_l - 0.5 * knee_l)
    local[skeleton.index("right_ankle")] = axis_angle_matrix(_X, 0.35 * hip_r - 0.5 * knee_r)

    arm_l = arm_amp * np.sin(w + np.pi)
    arm_r = arm_amp * np.sin(w)
    local[skeleton.index("left_shoulder")] = (
        axis_angle_matrix(_X, -arm_l) @ local[skeleton.index("left_shoulder")]
    )
    local[skeleton.index("right_shoulder")] = (
        axis_angle_matrix(_X, -arm_r) @ local[skeleton.index("right_shoulder")]
    )
    return local


def walk_bob(phase: float, intensity: float = 1.0) -> float:
    """Vertical pelvis oscillation over the stride."""
    return 0.012 * intensity * np.cos(4.0 * np.pi * phase)


def sit_blend_locals(
    skeleton: Skeleton, base: np.ndarray, amount: float
) -> np.ndarray:
    """Blend a pose toward the seated configuration; amount in [0, 1]."""
    a = float(np.clip(amount, 0.0, 1.0))
    local = np.array(base, copy=True)
    hip = np.radians(85.0) * a
    knee = np.radians(85.0) * a
    lean = np.radians(12.0) * a  # torso eases back as the hips fold
    for side in ("left", "right"):
        local[skeleton.index(f"{side}_hip")] = axis_angle_matrix(_X, -hip) @ local[
            skeleton.index(f"{side}_hip")
        ]
        local[skeleton.index(f"{side}_knee")] = axis_angle_matrix(_X, knee) @ local[
            skeleton.index(f"{side}_knee")
        ]
        local[skeleton.index(f"{side}_ankle")] = local[
            skeleton.index(f"{side}_ankle")
        ] @ axis_angle_matrix(_X, -0.15 * knee)
    local[skeleton.index("spine1")] = axis_angle_matrix(_X, 0.4 * lean) @ local[
        skeleton.index("spine1")
    ]
    local[skeleton.index("spine2")] = axis_angle_matrix(_X, -0.4 * lean) @ local[
        skeleton.index("spine2")
    ]
    return local


def seated_pelvis_height(seat_height: float) -> float:
    """Pelvis height when seated on a seat surface."""
    return seat_height + 0.05


def ease_cos(t: float) -> float:
    """Cosine ease-in-out on [0, 1]."""
    t = float(np.clip(t, 0.0, 1.0))
    return 0.5 - 0.5 * np.cos(np.pi * t)

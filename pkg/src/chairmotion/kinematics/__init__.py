from .rotations import (
    matrix_to_rot6d,
    rot6d_to_matrix,
    yaw_matrix,
    DegenerateRotationError,
)
from .skeleton import Skeleton, KEY_JOINT_NAMES, default_skeleton
from .frames import (
    RootTransform,
    MotionFrame,
    TrajectoryWindow,
    TRAJECTORY_SAMPLES,
    sample_trajectory_window,
)
from .fk import (
    forward_kinematics,
    fk_full,
    make_frame,
    local_to_character,
    character_to_local,
)
from .ik import solve_fullbody_ik, IKResult, two_bone_ik

__all__ = [
    "matrix_to_rot6d",
    "rot6d_to_matrix",
    "yaw_matrix",
    "DegenerateRotationError",
    "Skeleton",
    "KEY_JOINT_NAMES",
    "default_skeleton",
    "RootTransform",
    "MotionFrame",
    "TrajectoryWindow",
    "TRAJECTORY_SAMPLES",
    "sample_trajectory_window",
    "forward_kinematics",
    "fk_full",
    "make_frame",
    "local_to_character",
    "character_to_local",
    "solve_fullbody_ik",
    "IKResult",
    "two_bone_ik",
]

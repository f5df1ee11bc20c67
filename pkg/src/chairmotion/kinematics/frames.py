"""Per-frame skeletal state and trajectory windows.

World axes are y-up; the ground is the xz plane. A root transform is the
pelvis position plus a facing yaw; "root-relative" quantities live in that
yaw-aligned frame with the pelvis at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotations import matrix_to_rot6d, yaw_matrix
from .skeleton import JOINT_COUNT

# Samples per trajectory window, uniform over [-1, +1] s around the frame.
TRAJECTORY_SAMPLES = 13
# Samples per future window, uniform over [0, +1] s.
FUTURE_SAMPLES = 7

ACTION_NAMES = ("idle", "walk", "sit")


@dataclass
class RootTransform:
    """World-space 2D position + facing yaw + pelvis height."""

    x: float = 0.0
    z: float = 0.0
    yaw: float = 0.0
    height: float = 0.95

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.height, self.z])

    @property
    def ground_position(self) -> np.ndarray:
        return np.array([self.x, 0.0, self.z])

    @property
    def rotation(self) -> np.ndarray:
        return yaw_matrix(self.yaw)

    @property
    def forward(self) -> np.ndarray:
        """Unit facing direction in the ground plane."""
        return self.rotation[:, 2]

    def to_world(self, points: np.ndarray) -> np.ndarray:
        """Map root-relative points (..., 3) into world space."""
        return np.asarray(points) @ self.rotation.T + self.position

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points) - self.position) @ self.rotation

    def direction_to_world(self, d: np.ndarray) -> np.ndarray:
        return np.asarray(d) @ self.rotation.T

    def direction_to_local(self, d: np.ndarray) -> np.ndarray:
        return np.asarray(d) @ self.rotation

    def copy(self) -> "RootTransform":
        return RootTransform(self.x, self.z, self.yaw, self.height)


@dataclass
class MotionFrame:
    """One frame of skeletal state.

    joint_positions: (22, 3) root-relative, meters.
    joint_rotations: (22, 6) character-space (root-relative) 6D rotations.
    joint_velocities: (22, 3) meters/frame, expressed in the root-yaw axes.
    action_labels: (3,) soft labels over (idle, walk, sit), summing to 1.
    """

    joint_positions: np.ndarray
    joint_rotations: np.ndarray
    joint_velocities: np.ndarray
    root: RootTransform
    action_labels: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        self.joint_positions = np.asarray(self.joint_positions, dtype=np.float64)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=np.float64)
        self.joint_velocities = np.asarray(self.joint_velocities, dtype=np.float64)
        self.action_labels = np.asarray(self.action_labels, dtype=np.float64)
        if self.joint_positions.shape != (JOINT_COUNT, 3):
            raise ValueError(f"joint_positions shape {self.joint_positions.shape}")
        if self.joint_rotations.shape != (JOINT_COUNT, 6):
            raise ValueError(f"joint_rotations shape {self.joint_rotations.shape}")
        if self.joint_velocities.shape != (JOINT_COUNT, 3):
            raise ValueError(f"joint_velocities shape {self.joint_velocities.shape}")
        if self.action_labels.shape != (3,):
            raise ValueError(f"action_labels shape {self.action_labels.shape}")
        s = float(self.action_labels.sum())
        if abs(s - 1.0) > 1e-5:
            raise ValueError(f"action labels must sum to 1, got {s}")

    def world_positions(self) -> np.ndarray:
        return self.root.to_world(self.joint_positions)

    def world_velocities(self) -> np.ndarray:
        return self.root.direction_to_world(self.joint_velocities)

    def copy(self) -> "MotionFrame":
        return MotionFrame(
            self.joint_positions.copy(),
            self.joint_rotations.copy(),
            self.joint_velocities.copy(),
            self.root.copy(),
            self.action_labels.copy(),
        )

    def flat_features(self) -> np.ndarray:
        """Flattened (pos, rot, vel) vector, the diversity-metric pose feature."""
        return np.concatenate(
            [
                self.joint_positions.ravel(),
                self.joint_rotations.ravel(),
                self.joint_velocities.ravel(),
            ]
        )


@dataclass
class TrajectoryWindow:
    """Root trajectory sampled uniformly over [-1, +1] s around a frame.

    positions/directions are world-space here; input assembly converts them
    to the frame's root space.
    """

    positions: np.ndarray  # (13, 3)
    directions: np.ndarray  # (13, 6)
    actions: np.ndarray  # (13, 3)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.directions = np.asarray(self.directions, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.float64)
        t = TRAJECTORY_SAMPLES
        if self.positions.shape != (t, 3):
            raise ValueError(f"positions shape {self.positions.shape}")
        if self.directions.shape != (t, 6):
            raise ValueError(f"directions shape {self.directions.shape}")
        if self.actions.shape != (t, 3):
            raise ValueError(f"actions shape {self.actions.shape}")


def window_frame_offsets(fps: float, samples: int = TRAJECTORY_SAMPLES) -> np.ndarray:
    """Frame offsets for the [-1, +1] s window (13 -> every fps/6 frames)."""
    half = (samples - 1) // 2
    times = np.linspace(-1.0, 1.0, samples)
    assert times[half] == 0.0
    return np.round(times * fps).astype(np.int64)


def future_frame_offsets(fps: float, samples: int = FUTURE_SAMPLES) -> np.ndarray:
    """Frame offsets for the [0, +1] s future window."""
    times = np.linspace(0.0, 1.0, samples)
    return np.round(times * fps).astype(np.int64)


def sample_trajectory_window(
    sequence: list[MotionFrame], frame_index: int, fps: float = 30.0
) -> TrajectoryWindow:
    """Sample the 13-point root trajectory window centered at frame_index.

    Out-of-range samples clamp to the first/last frame.
    """
    if len(sequence) == 0:
        raise ValueError("cannot sample a trajectory window from an empty sequence")
    offsets = window_frame_offsets(fps)
    positions = np.zeros((TRAJECTORY_SAMPLES, 3))
    directions = np.zeros((TRAJECTORY_SAMPLES, 6))
    actions = np.zeros((TRAJECTORY_SAMPLES, 3))
    for k, off in enumerate(offsets):
        i = int(np.clip(frame_index + off, 0, len(sequence) - 1))
        fr = sequence[i]
        positions[k] = fr.root.position
        directions[k] = matrix_to_rot6d(fr.root.rotation)
        actions[k] = fr.action_labels
    return TrajectoryWindow(positions, directions, actions)

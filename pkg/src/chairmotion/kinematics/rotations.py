"""Rotation utilities: 3x3 matrices, the 6D two-column representation, yaw helpers.

The 6D representation stores the first two columns of a rotation matrix,
flattened as (col0, col1). Reconstruction runs Gram-Schmidt so that any
6 numbers (not too degenerate) map back to a proper rotation.
"""

from __future__ import annotations

import numpy as np


class DegenerateRotationError(ValueError):
    """Raised when a 6D rotation input cannot be orthonormalized."""


def matrix_to_rot6d(m: np.ndarray) -> np.ndarray:
    """First two columns of a rotation matrix, flattened to 6 values."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"expected 3x3 matrix, got {m.shape}")
    return np.concatenate([m[:, 0], m[:, 1]])


def rot6d_to_matrix(r6: np.ndarray) -> np.ndarray:
    """Gram-Schmidt a 6D vector back to an orthonormal matrix with det +1."""
    r6 = np.asarray(r6, dtype=np.float64).reshape(6)
    a = r6[:3]
    b = r6[3:]
    na = np.linalg.norm(a)
    if na < 1e-8:
        raise DegenerateRotationError("first 6D column has near-zero norm")
    x = a / na
    b = b - np.dot(x, b) * x
    nb = np.linalg.norm(b)
    if nb < 1e-8:
        raise DegenerateRotationError("6D columns are near-collinear")
    y = b / nb
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=1)


def rot6d_to_matrix_batch(r6: np.ndarray) -> np.ndarray:
    """Vectorized Gram-Schmidt for an (..., 6) array of 6D rotations."""
    r6 = np.asarray(r6, dtype=np.float64)
    a = r6[..., :3]
    b = r6[..., 3:]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(na < 1e-8):
        raise DegenerateRotationError("first 6D column has near-zero norm")
    x = a / na
    b = b - np.sum(x * b, axis=-1, keepdims=True) * x
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any(nb < 1e-8):
        raise DegenerateRotationError("6D columns are near-collinear")
    y = b / nb
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=-1)


def matrix_to_rot6d_batch(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation about the world up axis (y). Positive yaw turns +z toward +x."""
    c = np.cos(yaw)
    s = np.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def yaw_of_direction(d: np.ndarray) -> float:
    """Yaw angle whose forward (+z) column points along the xz part of d."""
    return float(np.arctan2(d[0], d[2]))


def axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues formula."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.eye(3)
    x, y, z = axis / n
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def identity_rot6d(count: int | None = None) -> np.ndarray:
    """Identity rotation in 6D form; stacked (count, 6) when count given."""
    r = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    if count is None:
        return r
    return np.tile(r, (count, 1))

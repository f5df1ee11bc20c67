"""Scene encodings consumed by the pose predictor.

Two complementary grids:
  * chair-centric: the chair's precomputed 8x8x8 occupancy plus, per voxel,
    the vector from the character root to the voxel center (all in the
    chair's local frame, so simultaneous rigid motions cancel). 512 cells
    x 4 values = 2048.
  * ego-centric cylinder: binary chair occupancy on a cylindrical grid that
    travels and turns with the character. 16 angular x 8 radial x 11
    vertical = 1408, flattened angle-major, then radius, then height.
"""

from __future__ import annotations

import numpy as np

from ..kinematics.frames import RootTransform
from .chair import ChairModel

CHAIR_ENCODING_LEN = 2048

EGO_ANGULAR = 16
EGO_RADIAL = 8
EGO_VERTICAL = 11
EGO_ENCODING_LEN = EGO_ANGULAR * EGO_RADIAL * EGO_VERTICAL
EGO_RADIUS = 1.25
EGO_Y_MIN = -0.25  # relative to the ground under the root
EGO_Y_MAX = 1.75


def encode_chair_centric(chair: ChairModel, root_position: np.ndarray) -> np.ndarray:
    """Occupancy + root-to-voxel offsets, flattened per cell to 2048 values."""
    root_local = chair.transform.to_local(np.asarray(root_position, dtype=np.float64))
    offsets = chair.grid_centers_local - root_local
    out = np.empty((len(offsets), 4))
    out[:, 0] = chair.grid_occupancy
    out[:, 1:] = offsets
    return out.reshape(-1)


def encode_chair_centered(chair: ChairModel) -> np.ndarray:
    """Variant with offsets from the chair's own center (contact sampling)."""
    lo, hi = chair.bounds_local
    return encode_chair_centric_local(chair, (lo + hi) / 2.0)


def encode_chair_centric_local(chair: ChairModel, point_local: np.ndarray) -> np.ndarray:
    offsets = chair.grid_centers_local - np.asarray(point_local, dtype=np.float64)
    out = np.empty((len(offsets), 4))
    out[:, 0] = chair.grid_occupancy
    out[:, 1:] = offsets
    return out.reshape(-1)


def ego_cell_index(angular: int, radial: int, vertical: int) -> int:
    return (angular * EGO_RADIAL + radial) * EGO_VERTICAL + vertical


def encode_ego_cylinder(chair: ChairModel, root: RootTransform) -> np.ndarray:
    """Binary occupancy of the chair inside the character's cylinder."""
    out = np.zeros(EGO_ENCODING_LEN)
    pts = chair.fine_points_world()
    # into the root frame anchored at the ground under the pelvis
    rel = (pts - root.ground_position) @ root.rotation

    r = np.hypot(rel[:, 0], rel[:, 2])
    keep = (r < EGO_RADIUS) & (rel[:, 1] >= EGO_Y_MIN) & (rel[:, 1] < EGO_Y_MAX)
    if not keep.any():
        return out
    rel = rel[keep]
    r = r[keep]

    ang = np.arctan2(rel[:, 0], rel[:, 2])  # 0 along facing, positive to the left
    ai = np.floor((ang + np.pi) / (2.0 * np.pi) * EGO_ANGULAR).astype(int)
    ai = np.clip(ai, 0, EGO_ANGULAR - 1)
    ri = np.clip((r / EGO_RADIUS * EGO_RADIAL).astype(int), 0, EGO_RADIAL - 1)
    vi = np.clip(
        ((rel[:, 1] - EGO_Y_MIN) / (EGO_Y_MAX - EGO_Y_MIN) * EGO_VERTICAL).astype(int),
        0,
        EGO_VERTICAL - 1,
    )
    out[(ai * EGO_RADIAL + ri) * EGO_VERTICAL + vi] = 1.0
    return out

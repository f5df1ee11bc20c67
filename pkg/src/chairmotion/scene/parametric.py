"""Procedurally generated chairs built from box primitives.

These stand in for an external shape collection: seat + backrest + legs,
optional armrests, and a wider sofa variant. The local frame has its origin
on the ground under the seat center, facing +z (a seated person faces +z).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .chair import ChairModel, ChairTransform
from .mesh import TriangleMesh

_BOX_FACES = np.array(
    [
        [0, 1, 2], [0, 2, 3],  # bottom (y-)
        [4, 6, 5], [4, 7, 6],  # top (y+)
        [0, 4, 5], [0, 5, 1],  # z-
        [3, 2, 6], [3, 6, 7],  # z+
        [1, 5, 6], [1, 6, 2],  # x+
        [0, 3, 7], [0, 7, 4],  # x-
    ]
)


def box_mesh(lo, hi) -> TriangleMesh:
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    verts = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y0, z1], [x0, y0, z1],
            [x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1],
        ]
    )
    return TriangleMesh(verts, _BOX_FACES.copy())


@dataclass
class ChairParams:
    seat_width: float = 0.48
    seat_depth: float = 0.48
    seat_height: float = 0.45
    seat_thickness: float = 0.06
    back_height: float = 0.45
    back_thickness: float = 0.06
    has_arms: bool = True
    arm_height: float = 0.24  # above the seat surface
    arm_width: float = 0.07
    arm_length: float = 0.42
    arm_thickness: float = 0.05
    leg_thickness: float = 0.05
    sofa: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def build_chair_mesh(p: ChairParams) -> TriangleMesh:
    w2 = p.seat_width / 2.0
    d2 = p.seat_depth / 2.0
    h = p.seat_height

    mesh = box_mesh([-w2, h - p.seat_thickness, -d2], [w2, h, d2])
    # backrest behind the seat (-z)
    mesh = mesh.merged(
        box_mesh([-w2, h, -d2 - p.back_thickness], [w2, h + p.back_height, -d2])
    )
    if p.sofa:
        # solid side panels down to the ground
        for sx in (-1, 1):
            x0 = sx * w2
            x1 = sx * (w2 + p.arm_width)
            lo_x, hi_x = min(x0, x1), max(x0, x1)
            mesh = mesh.merged(
                box_mesh([lo_x, 0.0, -d2 - p.back_thickness],
                         [hi_x, h + p.arm_height, d2 - 0.05])
            )
        # plinth base instead of legs
        mesh = mesh.merged(box_mesh([-w2, 0.0, -d2], [w2, h - p.seat_thickness, d2]))
        return mesh

    lt = p.leg_thickness
    for sx in (-1, 1):
        for sz in (-1, 1):
            cx = sx * (w2 - lt / 2.0)
            cz = sz * (d2 - lt / 2.0)
            mesh = mesh.merged(
                box_mesh([cx - lt / 2, 0.0, cz - lt / 2],
                         [cx + lt / 2, h - p.seat_thickness, cz + lt / 2])
            )
    if p.has_arms:
        for sx in (-1, 1):
            x0 = sx * w2
            x1 = sx * (w2 + p.arm_width)
            lo_x, hi_x = min(x0, x1), max(x0, x1)
            top = h + p.arm_height
            z0 = -d2
            z1 = -d2 + p.arm_length
            mesh = mesh.merged(box_mesh([lo_x, top - p.arm_thickness, z0], [hi_x, top, z1]))
            # support post under the armrest front
            mid = (lo_x + hi_x) / 2.0
            mesh = mesh.merged(
                box_mesh([mid - 0.02, h, z1 - 0.06], [mid + 0.02, top - p.arm_thickness, z1 - 0.02])
            )
    return mesh


def seat_metadata(p: ChairParams) -> dict:
    return {
        "center": [0.0, p.seat_height, 0.0],
        "size": [p.seat_width, p.seat_depth],
    }


def contact_regions(p: ChairParams) -> dict:
    """Hand-contact patches in the chair local frame.

    Keys are from the seated person's view (facing +z, so their left is +x).
    Each value is (center, half_extents) of a rectangular patch on a top
    surface. Chairs without arms expose the seat's side edges instead.
    """
    regions: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    w2 = p.seat_width / 2.0
    d2 = p.seat_depth / 2.0
    if p.has_arms or p.sofa:
        top = p.seat_height + p.arm_height
        z_c = -d2 + p.arm_length / 2.0 if not p.sofa else 0.0
        z_half = (p.arm_length / 2.0 - 0.03) if not p.sofa else (d2 - 0.1)
        for key, sx in (("left", 1.0), ("right", -1.0)):
            cx = sx * (w2 + p.arm_width / 2.0)
            regions[key] = (
                np.array([cx, top, z_c]),
                np.array([p.arm_width / 2.0 - 0.01, 0.0, max(z_half, 0.03)]),
            )
    else:
        for key, sx in (("left", 1.0), ("right", -1.0)):
            regions[key] = (
                np.array([sx * (w2 - 0.05), p.seat_height, d2 * 0.3]),
                np.array([0.04, 0.0, d2 * 0.5]),
            )
    return regions


def sample_contact_point(
    p: ChairParams, side: str, rng: np.random.Generator
) -> np.ndarray:
    """Random point on the given hand's contact patch (chair local frame)."""
    center, half = contact_regions(p)[side]
    u = rng.uniform(-1.0, 1.0, 3)
    return center + u * half


def make_chair_set(
    count: int, seed: int = 0, transform_ring: float = 0.0
) -> list[tuple[ChairModel, ChairParams]]:
    """A varied set of procedural chairs (some armless, some sofas)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        style = rng.random()
        sofa = style > 0.85
        has_arms = sofa or style > 0.25
        p = ChairParams(
            seat_width=rng.uniform(0.9, 1.5) if sofa else rng.uniform(0.42, 0.56),
            seat_depth=rng.uniform(0.48, 0.62) if sofa else rng.uniform(0.42, 0.54),
            seat_height=rng.uniform(0.38, 0.44) if sofa else rng.uniform(0.40, 0.50),
            seat_thickness=rng.uniform(0.05, 0.10),
            back_height=rng.uniform(0.35, 0.55),
            back_thickness=rng.uniform(0.05, 0.09),
            has_arms=has_arms,
            arm_height=rng.uniform(0.18, 0.28),
            arm_width=rng.uniform(0.05, 0.10),
            arm_length=rng.uniform(0.32, 0.46),
            arm_thickness=rng.uniform(0.04, 0.06),
            leg_thickness=rng.uniform(0.04, 0.06),
            sofa=sofa,
        )
        p.arm_length = min(p.arm_length, p.seat_depth - 0.04)
        mesh = build_chair_mesh(p)
        transform = ChairTransform(np.zeros(3))
        if transform_ring > 0:
            ang = rng.uniform(-np.pi, np.pi)
            transform = ChairTransform(
                np.array([transform_ring * np.cos(ang), 0.0, transform_ring * np.sin(ang)]),
                yaw=rng.uniform(-np.pi, np.pi),
            )
        chair = ChairModel(f"chair_{i:03d}", mesh, transform, seat_metadata(p))
        out.append((chair, p))
    return out

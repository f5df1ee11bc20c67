"""Triangle meshes: OBJ parsing, closest-point queries, voxel intersection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ObjParseError(ValueError):
    """OBJ text could not be parsed; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"OBJ parse error at line {line_number}: {message}")


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (
            self.faces.min() < 0 or self.faces.max() >= len(self.vertices)
        ):
            raise ValueError("face index out of range")

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0 or len(self.vertices) == 0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def triangles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def transformed(self, matrix: np.ndarray, translation: np.ndarray) -> "TriangleMesh":
        return TriangleMesh(self.vertices @ np.asarray(matrix).T + translation, self.faces)

    def closest_point(self, point: np.ndarray) -> tuple[np.ndarray, float, int]:
        """Closest surface point, its distance, and the owning face index."""
        a, b, c = self.triangles()
        cps = closest_point_on_triangles(np.asarray(point, dtype=np.float64), a, b, c)
        d2 = np.sum((cps - point) ** 2, axis=1)
        i = int(np.argmin(d2))
        return cps[i], float(np.sqrt(d2[i])), i

    def distance(self, point: np.ndarray) -> float:
        return self.closest_point(point)[1]

    def merged(self, other: "TriangleMesh") -> "TriangleMesh":
        return TriangleMesh(
            np.vstack([self.vertices, other.vertices]),
            np.vstack([self.faces, other.faces + len(self.vertices)]),
        )

    # ------------------------------------------------------------------ OBJ

    @classmethod
    def from_obj_text(cls, text: str) -> "TriangleMesh":
        vertices: list[list[float]] = []
        faces: list[list[int]] = []
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ObjParseError(ln, "vertex needs 3 coordinates")
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError as e:
                    raise ObjParseError(ln, f"bad vertex coordinate: {e}") from None
            elif tag == "f":
                if len(parts) < 4:
                    raise ObjParseError(ln, "face needs at least 3 vertices")
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ObjParseError(ln, f"bad face index {tok!r}") from None
                    if i == 0:
                        raise ObjParseError(ln, "OBJ face indices are 1-based")
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for v in idx:
                    if not (0 <= v < len(vertices)):
                        raise ObjParseError(ln, f"face index {v + 1} out of range")
                # triangle fan for quads and n-gons
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # other tags (vn, vt, o, g, s, usemtl, mtllib) are ignored
        if not vertices or not faces:
            raise ObjParseError(0, "mesh has no vertices or no faces")
        return cls(np.array(vertices), np.array(faces))

    def to_obj_text(self, name: str = "mesh") -> str:
        lines = [f"o {name}"]
        for v in self.vertices:
            lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
        for f in self.faces:
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
        return "\n".join(lines) + "\n"


def closest_point_on_triangles(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """Closest point to p on each triangle (a[i], b[i], c[i]).

    Vectorized barycentric-region case analysis.
    """
    ab = b - a
    ac = c - a
    ap = p - a

    d1 = np.sum(ab * ap, axis=1)
    d2 = np.sum(ac * ap, axis=1)
    out = np.zeros_like(a)
    done = np.zeros(len(a), dtype=bool)

    # vertex region A
    mask = (d1 <= 0) & (d2 <= 0)
    out[mask] = a[mask]
    done |= mask

    bp = p - b
    d3 = np.sum(ab * bp, axis=1)
    d4 = np.sum(ac * bp, axis=1)
    mask = (~done) & (d3 >= 0) & (d4 <= d3)
    out[mask] = b[mask]
    done |= mask

    vc = d1 * d4 - d3 * d2
    mask = (~done) & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    denom = np.where(np.abs(d1 - d3) < 1e-30, 1.0, d1 - d3)
    v = d1 / denom
    out[mask] = a[mask] + v[mask, None] * ab[mask]
    done |= mask

    cp = p - c
    d5 = np.sum(ab * cp, axis=1)
    d6 = np.sum(ac * cp, axis=1)
    mask = (~done) & (d6 >= 0) & (d5 <= d6)
    out[mask] = c[mask]
    done |= mask

    vb = d5 * d2 - d1 * d6
    mask = (~done) & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    denom = np.where(np.abs(d2 - d6) < 1e-30, 1.0, d2 - d6)
    w = d2 / denom
    out[mask] = a[mask] + w[mask, None] * ac[mask]
    done |= mask

    va = d3 * d6 - d5 * d4
    mask = (~done) & (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    denom = (d4 - d3) + (d5 - d6)
    denom = np.where(np.abs(denom) < 1e-30, 1.0, denom)
    w = (d4 - d3) / denom
    out[mask] = b[mask] + w[mask, None] * (c[mask] - b[mask])
    done |= mask

    # interior
    mask = ~done
    denom = va + vb + vc
    denom = np.where(np.abs(denom) < 1e-30, 1.0, denom)
    v = vb / denom
    w = vc / denom
    out[mask] = a[mask] + v[mask, None] * ab[mask] + w[mask, None] * ac[mask]
    return out


def triangles_intersect_boxes(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    centers: np.ndarray,
    half: np.ndarray,
) -> np.ndarray:
    """Which axis-aligned boxes intersect at least one triangle.

    Separating-axis test per (triangle, box); loops triangles, vectorizes
    boxes. Returns a bool array over boxes.
    """
    n_boxes = len(centers)
    hit = np.zeros(n_boxes, dtype=bool)
    half = np.asarray(half, dtype=np.float64)
    tri_lo = np.minimum(np.minimum(a, b), c)
    tri_hi = np.maximum(np.maximum(a, b), c)
    for t in range(len(a)):
        # AABB prune before the full separating-axis test
        rem = ~hit
        rem &= np.all(centers + half >= tri_lo[t] - 1e-12, axis=1)
        rem &= np.all(centers - half <= tri_hi[t] + 1e-12, axis=1)
        if not rem.any():
            continue
        v0 = a[t] - centers[rem]
        v1 = b[t] - centers[rem]
        v2 = c[t] - centers[rem]
        ok = _sat_tri_box(v0, v1, v2, half)
        idx = np.where(rem)[0]
        hit[idx[ok]] = True
    return hit


def _sat_tri_box(v0, v1, v2, h) -> np.ndarray:
    """SAT for one triangle vs many boxes centered at origin, half-size h."""
    alive = np.ones(len(v0), dtype=bool)

    # box face normals
    for ax in range(3):
        lo = np.minimum(np.minimum(v0[:, ax], v1[:, ax]), v2[:, ax])
        hi = np.maximum(np.maximum(v0[:, ax], v1[:, ax]), v2[:, ax])
        alive &= (hi >= -h[ax]) & (lo <= h[ax])

    # triangle plane
    e0 = v1 - v0
    e1 = v2 - v1
    n = np.cross(e0[0], e1[0])  # same triangle across rows
    r = h[0] * abs(n[0]) + h[1] * abs(n[1]) + h[2] * abs(n[2])
    s = v0 @ n
    alive &= np.abs(s) <= r + 1e-12

    # 9 edge cross products
    e2 = v0 - v2
    edges = (e0[0], e1[0], e2[0])
    verts = (v0, v1, v2)
    axes_unit = np.eye(3)
    for e in edges:
        for u in axes_unit:
            axis = np.cross(u, e)
            if np.dot(axis, axis) < 1e-24:
                continue
            p = np.stack([v @ axis for v in verts], axis=1)
            rad = h[0] * abs(axis[0]) + h[1] * abs(axis[1]) + h[2] * abs(axis[2])
            alive &= (p.max(axis=1) >= -rad - 1e-12) & (p.min(axis=1) <= rad + 1e-12)
    return alive

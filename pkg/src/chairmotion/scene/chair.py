"""Chair models: transform handling, precomputed voxel data, registry files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..kinematics.rotations import yaw_matrix
from .mesh import TriangleMesh, triangles_intersect_boxes

CHAIR_GRID = 8  # cells per axis of the coarse occupancy grid
GRID_PADDING = 0.10  # bounding box padded by 10% per axis
FINE_CELL = 0.04  # target resolution of the sampling grid, meters


@dataclass
class ChairTransform:
    position: np.ndarray  # (3,) world, usually on the ground (y = 0)
    yaw: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)

    @property
    def rotation(self) -> np.ndarray:
        return yaw_matrix(self.yaw)

    def to_world(self, p: np.ndarray) -> np.ndarray:
        return (np.asarray(p) * self.scale) @ self.rotation.T + self.position

    def to_local(self, p: np.ndarray) -> np.ndarray:
        return ((np.asarray(p) - self.position) @ self.rotation) / self.scale

    def direction_to_world(self, d: np.ndarray) -> np.ndarray:
        return np.asarray(d) @ self.rotation.T

    def to_json(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "yaw": float(self.yaw),
            "scale": float(self.scale),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ChairTransform":
        return cls(
            np.array(d.get("position", [0, 0, 0]), dtype=np.float64),
            float(d.get("yaw", 0.0)),
            float(d.get("scale", 1.0)),
        )

    def copy(self) -> "ChairTransform":
        return ChairTransform(self.position.copy(), self.yaw, self.scale)


class ChairModel:
    """A chair mesh with its world transform and precomputed voxel data.

    The mesh lives in the chair's local frame (origin at the ground under the
    seat, facing +z). Precomputation happens once; instances are then shared
    read-only.
    """

    def __init__(
        self,
        chair_id: str,
        mesh: TriangleMesh,
        transform: ChairTransform | None = None,
        seat: dict | None = None,
    ):
        if mesh.is_empty:
            raise ValueError("chair mesh is empty")
        self.id = chair_id
        self.mesh = mesh
        self.transform = transform or ChairTransform(np.zeros(3))
        lo, hi = mesh.bounds()
        if np.any(hi - lo <= 0):
            raise ValueError("chair bounding box must have positive volume")
        self.bounds_local = (lo, hi)
        self.seat = seat or estimate_seat(mesh)

        self._build_coarse_grid()
        self._build_fine_points()
        if not self.grid_occupancy.any():
            raise ValueError("chair occupancy grid has no occupied cells")
        self._world_mesh: TriangleMesh | None = None

    # -------------------------------------------------------- precomputation

    def _build_coarse_grid(self) -> None:
        lo, hi = self.bounds_local
        extent = hi - lo
        pad = GRID_PADDING * extent / 2.0
        glo, ghi = lo - pad, hi + pad
        n = CHAIR_GRID
        cell = (ghi - glo) / n
        axes = [glo[k] + cell[k] * (np.arange(n) + 0.5) for k in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        a, b, c = self.mesh.triangles()
        occ = triangles_intersect_boxes(a, b, c, centers, cell / 2.0)
        self.grid_origin = glo
        self.grid_cell = cell
        self.grid_centers_local = centers  # (512, 3)
        self.grid_occupancy = occ.astype(np.float64)  # (512,)

    def _build_fine_points(self) -> None:
        """Occupied fine-cell centers (local frame), used by the ego encoding."""
        lo, hi = self.bounds_local
        extent = hi - lo
        n = np.clip(np.ceil(extent / FINE_CELL).astype(int), 4, 48)
        cell = extent / n
        axes = [lo[k] + cell[k] * (np.arange(n[k]) + 0.5) for k in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        a, b, c = self.mesh.triangles()
        occ = triangles_intersect_boxes(a, b, c, centers, cell / 2.0)
        self.fine_points_local = centers[occ]

    # --------------------------------------------------------------- queries

    def world_mesh(self) -> TriangleMesh:
        if self._world_mesh is None:
            t = self.transform
            self._world_mesh = TriangleMesh(
                t.to_world(self.mesh.vertices), self.mesh.faces
            )
        return self._world_mesh

    def closest_point_world(self, point: np.ndarray) -> tuple[np.ndarray, float]:
        cp, d, _ = self.world_mesh().closest_point(np.asarray(point, dtype=np.float64))
        return cp, d

    def distance_world(self, point: np.ndarray) -> float:
        return self.closest_point_world(point)[1]

    def fine_points_world(self) -> np.ndarray:
        return self.transform.to_world(self.fine_points_local)

    @property
    def seat_center_world(self) -> np.ndarray:
        return self.transform.to_world(np.asarray(self.seat["center"]))

    @property
    def seat_height_world(self) -> float:
        return float(self.seat["center"][1]) * self.transform.scale + float(
            self.transform.position[1]
        )

    @property
    def facing_yaw_world(self) -> float:
        return float(self.transform.yaw)

    def with_transform(self, transform: ChairTransform) -> "ChairModel":
        """Same geometry/precomputation under a different placement."""
        clone = ChairModel.__new__(ChairModel)
        clone.__dict__.update(self.__dict__)
        clone.transform = transform
        clone._world_mesh = None
        return clone

    def scaled(self, scale: float, chair_id: str | None = None) -> "ChairModel":
        """A new chair with the local mesh scaled about the ground origin."""
        mesh = TriangleMesh(self.mesh.vertices * scale, self.mesh.faces)
        seat = {
            "center": [v * scale for v in self.seat["center"]],
            "size": [v * scale for v in self.seat.get("size", [0.45, 0.45])],
        }
        return ChairModel(
            chair_id or f"{self.id}_x{scale:g}", mesh, self.transform.copy(), seat
        )


def estimate_seat(mesh: TriangleMesh) -> dict:
    """Heuristic seat location for meshes without metadata.

    Looks for upward-facing surface area in the 25-65% height band.
    """
    lo, hi = mesh.bounds()
    a, b, c = mesh.triangles()
    n = np.cross(b - a, c - a)
    area = 0.5 * np.linalg.norm(n, axis=1)
    up = np.zeros(len(a))
    nz = area > 1e-12
    up[nz] = n[nz, 1] / (2.0 * area[nz])
    centroid = (a + b + c) / 3.0
    band = (
        (np.abs(up) > 0.7)
        & (centroid[:, 1] > lo[1] + 0.25 * (hi[1] - lo[1]))
        & (centroid[:, 1] < lo[1] + 0.65 * (hi[1] - lo[1]))
    )
    if band.any():
        w = area[band]
        center = (centroid[band] * w[:, None]).sum(axis=0) / w.sum()
    else:
        center = (lo + hi) / 2.0
        center[1] = lo[1] + 0.45 * (hi[1] - lo[1])
    return {
        "center": [float(v) for v in center],
        "size": [float(hi[0] - lo[0]), float(hi[2] - lo[2])],
    }


@dataclass
class ChairRegistry:
    """id -> ChairModel mapping with a JSON manifest + OBJ files on disk."""

    chairs: dict[str, ChairModel] = field(default_factory=dict)

    def add(self, chair: ChairModel) -> None:
        self.chairs[chair.id] = chair

    def get(self, chair_id: str) -> ChairModel:
        if chair_id not in self.chairs:
            raise KeyError(f"unknown chair id: {chair_id}")
        return self.chairs[chair_id]

    def ids(self) -> list[str]:
        return sorted(self.chairs)

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for cid in self.ids():
            chair = self.chairs[cid]
            obj_path = directory / f"{cid}.obj"
            obj_path.write_text(chair.mesh.to_obj_text(cid))
            entries.append(
                {
                    "id": cid,
                    "path": obj_path.name,
                    "transform": chair.transform.to_json(),
                    "seat": chair.seat,
                }
            )
        manifest = directory / "chairs.json"
        manifest.write_text(json.dumps({"version": 1, "chairs": entries}, indent=2))
        return manifest

    @classmethod
    def load(cls, manifest_path: str | Path) -> "ChairRegistry":
        manifest_path = Path(manifest_path)
        if manifest_path.is_dir():
            manifest_path = manifest_path / "chairs.json"
        data = json.loads(manifest_path.read_text())
        if data.get("version") != 1:
            raise ValueError(f"unsupported chair manifest version: {data.get('version')}")
        reg = cls()
        for entry in data["chairs"]:
            mesh = TriangleMesh.from_obj_text(
                (manifest_path.parent / entry["path"]).read_text()
            )
            reg.add(
                ChairModel(
                    entry["id"],
                    mesh,
                    ChairTransform.from_json(entry.get("transform", {})),
                    entry.get("seat"),
                )
            )
        return reg

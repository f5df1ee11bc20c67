"""Contact specifications, detection against chair surfaces, projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chair import ChairModel

PROJECTION_MAX_DISTANCE = 0.10  # beyond this a requested contact is neglected
DETECT_THRESHOLD_CM = 5.0

HANDS = ("left", "right")


@dataclass
class ContactSpec:
    """Optional world-space target contact per hand; None means no contact."""

    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self):
        if self.left is not None:
            self.left = np.asarray(self.left, dtype=np.float64).reshape(3)
        if self.right is not None:
            self.right = np.asarray(self.right, dtype=np.float64).reshape(3)

    def hand(self, side: str) -> np.ndarray | None:
        return self.left if side == "left" else self.right

    def with_hand(self, side: str, point: np.ndarray | None) -> "ContactSpec":
        if side == "left":
            return ContactSpec(point, self.right)
        return ContactSpec(self.left, point)

    @property
    def any_active(self) -> bool:
        return self.left is not None or self.right is not None

    def to_json(self) -> dict:
        return {
            "left": None if self.left is None else [float(v) for v in self.left],
            "right": None if self.right is None else [float(v) for v in self.right],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ContactSpec":
        return cls(
            None if d.get("left") is None else np.array(d["left"], dtype=np.float64),
            None if d.get("right") is None else np.array(d["right"], dtype=np.float64),
        )

    def projected(self, chair: ChairModel) -> "ContactSpec":
        """Both hands passed through the projection rule."""
        return ContactSpec(
            project_contact(self.left, chair) if self.left is not None else None,
            project_contact(self.right, chair) if self.right is not None else None,
        )


@dataclass
class ContactHit:
    joint: int
    in_contact: bool
    closest_point: np.ndarray
    distance: float


def detect_contacts(
    world_positions: np.ndarray,
    key_joint_indices: list[int],
    chair: ChairModel,
    threshold_cm: float = DETECT_THRESHOLD_CM,
) -> list[ContactHit]:
    """Which key joints touch the chair (distance below threshold)."""
    hits = []
    thr = threshold_cm / 100.0
    for j in key_joint_indices:
        cp, d = chair.closest_point_world(world_positions[j])
        hits.append(ContactHit(j, bool(d < thr), cp, d))
    return hits


def project_contact(
    point: np.ndarray, chair: ChairModel, max_distance: float = PROJECTION_MAX_DISTANCE
) -> np.ndarray | None:
    """Snap a point to the nearest chair surface, or drop it when too far."""
    cp, d = chair.closest_point_world(np.asarray(point, dtype=np.float64))
    if d < max_distance:
        return cp
    return None

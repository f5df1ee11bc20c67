"""22-joint stick skeleton: topology, bone offsets, JSON definition files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

JOINT_COUNT = 22

# Canonical layout: pelvis, spine x3, neck, head, clavicle/shoulder/elbow/wrist
# per side, hip/knee/ankle/toe per side. Parents precede children.
_CANONICAL = [
    # (name, parent, offset)
    ("pelvis", -1, (0.0, 0.0, 0.0)),
    ("spine1", 0, (0.0, 0.12, 0.0)),
    ("spine2", 1, (0.0, 0.13, 0.0)),
    ("spine3", 2, (0.0, 0.13, 0.0)),
    ("neck", 3, (0.0, 0.12, 0.0)),
    ("head", 4, (0.0, 0.13, 0.0)),
    ("left_clavicle", 3, (0.055, 0.09, 0.0)),
    ("left_shoulder", 6, (0.125, 0.0, 0.0)),
    ("left_elbow", 7, (0.27, 0.0, 0.0)),
    ("left_wrist", 8, (0.25, 0.0, 0.0)),
    ("right_clavicle", 3, (-0.055, 0.09, 0.0)),
    ("right_shoulder", 10, (-0.125, 0.0, 0.0)),
    ("right_elbow", 11, (-0.27, 0.0, 0.0)),
    ("right_wrist", 12, (-0.25, 0.0, 0.0)),
    ("left_hip", 0, (0.09, -0.06, 0.0)),
    ("left_knee", 14, (0.0, -0.42, 0.0)),
    ("left_ankle", 15, (0.0, -0.40, 0.0)),
    ("left_toe", 16, (0.0, -0.07, 0.13)),
    ("right_hip", 0, (-0.09, -0.06, 0.0)),
    ("right_knee", 18, (0.0, -0.42, 0.0)),
    ("right_ankle", 19, (0.0, -0.40, 0.0)),
    ("right_toe", 20, (0.0, -0.07, 0.13)),
]

KEY_JOINT_NAMES = ("pelvis", "left_wrist", "right_wrist", "left_ankle", "right_ankle")

# Ankles + toes, used by the foot-slide cleanup.
FOOT_JOINT_NAMES = ("left_ankle", "left_toe", "right_ankle", "right_toe")


@dataclass
class Skeleton:
    """Fixed-topology skeleton: joint names, parents, local bone offsets (meters)."""

    names: list[str]
    parents: np.ndarray  # (J,) int, -1 for the root
    offsets: np.ndarray  # (J, 3) float
    key_joints: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        self.validate()
        if not self.key_joints:
            idx = {n: i for i, n in enumerate(self.names)}
            self.key_joints = {k: idx[k] for k in KEY_JOINT_NAMES if k in idx}

    @property
    def joint_count(self) -> int:
        return len(self.names)

    def validate(self) -> None:
        j = len(self.names)
        if j != JOINT_COUNT:
            raise ValueError(f"skeleton must have {JOINT_COUNT} joints, got {j}")
        if self.parents.shape != (j,) or self.offsets.shape != (j, 3):
            raise ValueError("parents/offsets shape mismatch")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be the root")
        for i in range(1, j):
            p = self.parents[i]
            if not (0 <= p < i):
                raise ValueError(f"joint {i}: parent {p} must precede it")
            if np.linalg.norm(self.offsets[i]) <= 0.0:
                raise ValueError(f"joint {i}: bone offset must have positive length")

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def key_joint_indices(self) -> list[int]:
        return [self.key_joints[n] for n in KEY_JOINT_NAMES]

    @property
    def foot_joint_indices(self) -> list[int]:
        idx = {n: i for i, n in enumerate(self.names)}
        return [idx[n] for n in FOOT_JOINT_NAMES]

    def children(self, joint: int) -> list[int]:
        return [i for i in range(self.joint_count) if self.parents[i] == joint]

    def ancestors(self, joint: int) -> list[int]:
        """Chain from the root down to and including `joint`."""
        chain = []
        j = joint
        while j != -1:
            chain.append(j)
            j = int(self.parents[j])
        return chain[::-1]

    def to_json(self) -> dict:
        return {
            "version": 1,
            "joints": [
                {"name": n, "parent": int(p), "offset": [float(v) for v in o]}
                for n, p, o in zip(self.names, self.parents, self.offsets)
            ],
            "key_joints": {k: int(v) for k, v in self.key_joints.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Skeleton":
        if data.get("version") != 1:
            raise ValueError(f"unsupported skeleton file version: {data.get('version')}")
        joints = data["joints"]
        return cls(
            names=[j["name"] for j in joints],
            parents=np.array([j["parent"] for j in joints]),
            offsets=np.array([j["offset"] for j in joints]),
            key_joints={k: int(v) for k, v in data.get("key_joints", {}).items()},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "Skeleton":
        return cls.from_json(json.loads(Path(path).read_text()))


def default_skeleton() -> Skeleton:
    """The canonical 22-joint skeleton with default bone lengths (meters)."""
    return Skeleton(
        names=[n for n, _, _ in _CANONICAL],
        parents=np.array([p for _, p, _ in _CANONICAL]),
        offsets=np.array([o for _, _, o in _CANONICAL]),
    )

"""Motion sequence files: a JSON header line followed by one JSON frame per line.

The header carries metadata (fps, subject, chair, interaction type, target
contacts, goal); each frame line carries the full skeletal state plus
per-frame annotations (5 key-joint contact flags, per-hand local phases).
Writes are atomic (temp file + rename) and round-trips are byte-exact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..kinematics.frames import MotionFrame, RootTransform
from ..posenet import GoalSpec
from ..scene.chair import ChairTransform
from ..scene.contacts import ContactSpec

FORMAT_VERSION = 1
REQUIRED_FPS = 30.0

INTERACTION_TYPES = (
    "right_hand",
    "left_hand",
    "both_hands",
    "no_contact",
    "free",
    "locomotion",
)


class SequenceFormatError(ValueError):
    pass


@dataclass
class SequenceFile:
    subject: str
    chair_id: str | None
    interaction_type: str
    frames: list[MotionFrame]
    contact_flags: np.ndarray  # (T, 5) 0/1 for (pelvis, lhand, rhand, lfoot, rfoot)
    local_phases: np.ndarray  # (T, 2) per hand
    global_phase: np.ndarray  # (T,)
    contacts: ContactSpec = field(default_factory=ContactSpec)
    goal: GoalSpec | None = None
    fps: float = REQUIRED_FPS
    chair_transform: ChairTransform | None = None

    def __post_init__(self):
        self.contact_flags = np.asarray(self.contact_flags, dtype=np.float64)
        self.local_phases = np.asarray(self.local_phases, dtype=np.float64)
        t = len(self.frames)
        if self.contact_flags.shape != (t, 5):
            raise ValueError(f"contact_flags shape {self.contact_flags.shape}")
        if self.local_phases.shape != (t, 2):
            raise ValueError(f"local_phases shape {self.local_phases.shape}")
        self.global_phase = np.asarray(self.global_phase, dtype=np.float64)
        if self.global_phase.shape != (t,):
            raise ValueError(f"global_phase shape {self.global_phase.shape}")
        if self.interaction_type not in INTERACTION_TYPES:
            raise ValueError(f"unknown interaction type {self.interaction_type!r}")

    def __len__(self) -> int:
        return len(self.frames)


def _frame_to_json(fr: MotionFrame, flags, phases, phi) -> dict:
    return {
        "p": fr.joint_positions.ravel().tolist(),
        "r": fr.joint_rotations.ravel().tolist(),
        "v": fr.joint_velocities.ravel().tolist(),
        "root": [fr.root.x, fr.root.z, fr.root.yaw, fr.root.height],
        "a": fr.action_labels.tolist(),
        "c": [int(v) for v in flags],
        "ph": [float(v) for v in phases],
        "phi": float(phi),
    }


def _frame_from_json(d: dict):
    root = RootTransform(*d["root"])
    fr = MotionFrame(
        joint_positions=np.array(d["p"]).reshape(22, 3),
        joint_rotations=np.array(d["r"]).reshape(22, 6),
        joint_velocities=np.array(d["v"]).reshape(22, 3),
        root=root,
        action_labels=np.array(d["a"]),
    )
    return (
        fr,
        np.array(d["c"], dtype=np.float64),
        np.array(d["ph"], dtype=np.float64),
        float(d["phi"]),
    )


def save_sequence(seq: SequenceFile, path: str | Path) -> None:
    path = Path(path)
    header = {
        "version": FORMAT_VERSION,
        "fps": seq.fps,
        "subject": seq.subject,
        "chair_id": seq.chair_id,
        "interaction_type": seq.interaction_type,
        "frame_count": len(seq.frames),
        "contacts": seq.contacts.to_json(),
        "goal": None
        if seq.goal is None
        else {
            "position": seq.goal.position.tolist(),
            "yaw": float(seq.goal.yaw),
            "action": seq.goal.action.tolist(),
        },
        "chair_transform": None
        if seq.chair_transform is None
        else seq.chair_transform.to_json(),
    }
    lines = [json.dumps(header, sort_keys=True)]
    for fr, flags, phases, phi in zip(
        seq.frames, seq.contact_flags, seq.local_phases, seq.global_phase
    ):
        lines.append(json.dumps(_frame_to_json(fr, flags, phases, phi), sort_keys=True))
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_sequence(path: str | Path) -> SequenceFile:
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        raise SequenceFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise SequenceFormatError(f"{path}: bad header line: {e}") from None
    if header.get("version") != FORMAT_VERSION:
        raise SequenceFormatError(
            f"{path}: unsupported version {header.get('version')}"
        )
    if float(header.get("fps", 0)) != REQUIRED_FPS:
        raise SequenceFormatError(
            f"{path}: fps must be {REQUIRED_FPS:g}, got {header.get('fps')}"
        )
    n = int(header["frame_count"])
    if len(lines) - 1 != n:
        raise SequenceFormatError(
            f"{path}: truncated file, expected {n} frames, found {len(lines) - 1}"
        )
    frames = []
    flags = np.zeros((n, 5))
    phases = np.zeros((n, 2))
    phis = np.zeros(n)
    for i, line in enumerate(lines[1:], start=2):
        try:
            fr, fl, ph, phi = _frame_from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise SequenceFormatError(f"{path}: corrupt frame at line {i}: {e}") from None
        frames.append(fr)
        flags[i - 2] = fl
        phases[i - 2] = ph
        phis[i - 2] = phi
    goal = None
    if header.get("goal"):
        g = header["goal"]
        goal = GoalSpec(np.array(g["position"]), g["yaw"], np.array(g["action"]))
    chair_transform = None
    if header.get("chair_transform"):
        chair_transform = ChairTransform.from_json(header["chair_transform"])
    return SequenceFile(
        subject=header["subject"],
        chair_id=header.get("chair_id"),
        interaction_type=header["interaction_type"],
        frames=frames,
        contact_flags=flags,
        local_phases=phases,
        global_phase=phis,
        contacts=ContactSpec.from_json(header.get("contacts", {})),
        goal=goal,
        fps=float(header["fps"]),
        chair_transform=chair_transform,
    )

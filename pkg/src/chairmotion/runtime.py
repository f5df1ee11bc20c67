"""Autoregressive episode synthesis with approach/sit gating and serial contacts.

Per frame: once the character is near the goal with a sit intent, the
planner runs (for hands that have contact targets) and its signal feeds the
pose predictor; otherwise the control block is zeroed. The predictor's
first future-trajectory sample drives the root update, and its outputs
become the next frame's state. Contact goals can be chained mid-episode.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controlnet import (
    ControlNetModel,
    ControlSignal,
    LocalPhaseWindow,
    TAU,
    TAU_PLUS,
    make_guidance,
)
from .kinematics.frames import MotionFrame, RootTransform, TrajectoryWindow
from .kinematics.rotations import (
    DegenerateRotationError,
    matrix_to_rot6d,
    rot6d_to_matrix,
    yaw_matrix,
)
from .kinematics.skeleton import Skeleton, default_skeleton
from .posenet import GoalSpec, PoseNetModel, assemble_input
from .posing import relaxed_stand_locals
from .scene.chair import ChairModel
from .scene.contacts import ContactSpec

ACTIVATION_RADIUS = 1.2  # meters from the goal before the sitting activity starts
ACTIVATION_YAW = np.radians(75.0)  # hand planning additionally waits for the turn
REACH_THRESHOLD = 0.05  # a contact counts as reached within this distance
SETTLE_SIT_LABEL = 0.9
SETTLE_SPEED = 0.02  # m/s root speed
SETTLE_FRAMES = 30

ACTIVITIES = ("approaching", "sitting", "seated")


class ChainError(RuntimeError):
    """Raised when a new contact goal arrives before the current one is reached."""


class NonFiniteOutputError(RuntimeError):
    def __init__(self, frame_index: int, dump: dict):
        self.frame_index = frame_index
        self.dump = dump
        super().__init__(f"non-finite network output at frame {frame_index}")


@dataclass
class EpisodeConfig:
    chair_id: str
    start: RootTransform
    contacts: ContactSpec = field(default_factory=ContactSpec)
    goal: GoalSpec | None = None  # default: chair seat with a sit action
    duration: float = 16.0
    mode: str = "interactive"  # "interactive" | "generative"
    contact_count: int = 1  # generative mode: samples drawn
    contact_seed: int | None = None
    stop_on_settle: bool = False
    fit_hand_trajectories: bool = False  # optional post-fit of hands to the plan
    fps: float = 30.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.mode not in ("interactive", "generative"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ContactGoalReport:
    start_frame: int
    end_frame: int
    targets: dict  # side -> target list or None
    min_distance: dict  # side -> meters (None when unconstrained)
    closest_frame: dict
    reached: dict

    def to_json(self) -> dict:
        cm = {
            k: (None if v is None else float(v * 100.0))
            for k, v in self.min_distance.items()
        }
        return {
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "targets": {
                k: (None if v is None else [float(x) for x in v])
                for k, v in self.targets.items()
            },
            "min_distance_cm": cm,
            "closest_frame": self.closest_frame,
            "reached": self.reached,
        }


@dataclass
class EpisodeState:
    frame: MotionFrame
    phase: float = 0.0
    activity: str = "approaching"
    contacts: ContactSpec = field(default_factory=ContactSpec)
    queue: deque = field(default_factory=deque)
    cn_state: list | None = None
    frame_index: int = 0
    # trajectory bookkeeping
    history: deque = field(default_factory=lambda: deque(maxlen=31))
    future_positions: np.ndarray | None = None  # (7, 3) world
    future_dir6: np.ndarray | None = None  # (7, 6) world
    future_actions: np.ndarray | None = None
    # per-hand phase timeline: past ring + latest future prediction
    phase_hist: deque = field(default_factory=lambda: deque(maxlen=31))
    phase_future: np.ndarray = field(default_factory=lambda: np.zeros((2, TAU_PLUS)))
    # per active goal segment: running min distance / closest frame per hand
    segment_start: int = 0
    seg_min_dist: dict = field(default_factory=dict)
    seg_closest: dict = field(default_factory=dict)
    settle_count: int = 0
    settled_frame: int | None = None
    reports: list = field(default_factory=list)
    last_control_flat: np.ndarray = field(default_factory=lambda: np.zeros(56))
    last_activity: str = "approaching"
    plan_run: int = 0
    plan_latched: bool = False

    def hand_world(self, skeleton: Skeleton) -> dict:
        world = self.frame.world_positions()
        return {
            "left": world[skeleton.index("left_wrist")],
            "right": world[skeleton.index("right_wrist")],
        }


@dataclass
class EngineContext:
    posenet: PoseNetModel
    controlnet: ControlNetModel
    chair: ChairModel
    goal: GoalSpec
    skeleton: Skeleton
    config: EpisodeConfig


def initial_state(ctx: EngineContext) -> EpisodeState:
    skel = ctx.skeleton
    frame = _standing_frame(skel, ctx.config.start)
    st = EpisodeState(frame=frame, contacts=ctx.config.contacts)
    st.cn_state = ctx.controlnet.initial_state(1)
    st.history.append(_window_sample(frame))
    st.phase_hist.append(np.zeros(2))
    _reset_segment(st)
    return st


def _standing_frame(skeleton: Skeleton, root: RootTransform) -> MotionFrame:
    from .kinematics.fk import make_frame

    return make_frame(skeleton, relaxed_stand_locals(skeleton), root)


def _window_sample(frame: MotionFrame) -> dict:
    return {
        "position": frame.root.position,
        "dir6": matrix_to_rot6d(frame.root.rotation),
        "actions": frame.action_labels,
    }


def _reset_segment(st: EpisodeState) -> None:
    st.seg_min_dist = {"left": None, "right": None}
    st.seg_closest = {"left": None, "right": None}


def _segment_report(st: EpisodeState, end_frame: int) -> ContactGoalReport:
    targets = {}
    reached = {}
    for side in ("left", "right"):
        t = st.contacts.hand(side)
        targets[side] = None if t is None else t.tolist()
        d = st.seg_min_dist[side]
        reached[side] = bool(d is not None and d < REACH_THRESHOLD)
    return ContactGoalReport(
        start_frame=st.segment_start,
        end_frame=end_frame,
        targets=targets,
        min_distance=dict(st.seg_min_dist),
        closest_frame=dict(st.seg_closest),
        reached=reached,
    )


def contacts_reached(st: EpisodeState) -> bool:
    for side in ("left", "right"):
        if st.contacts.hand(side) is None:
            continue
        d = st.seg_min_dist.get(side)
        if d is None or d >= REACH_THRESHOLD:
            return False
    return True


def chain_contacts(
    st: EpisodeState, new_contacts: ContactSpec, override: bool = False
) -> EpisodeState:
    """Replace the active contact goal; errors if the current one is unreached."""
    if st.contacts.any_active and not contacts_reached(st) and not override:
        raise ChainError("current contact goal not reached; pass override to force")
    st.reports.append(_segment_report(st, st.frame_index))
    st.contacts = new_contacts
    st.segment_start = st.frame_index
    _reset_segment(st)
    # affected hands start a fresh reach: local phase timeline restarts
    for h, side in enumerate(("left", "right")):
        if new_contacts.hand(side) is not None:
            for entry in st.phase_hist:
                entry[h] = 0.0
            st.phase_future[h] = 0.0
    return st


GOAL_BIAS_APPROACH = 0.8
GOAL_BIAS_NEAR = 0.5
NOMINAL_WALK_SPEED = 1.1
PREGOAL_STANDOFF = 0.45


def _goal_bias_targets(st: EpisodeState, goal: GoalSpec) -> np.ndarray:
    """Future samples steering to the goal: (x, z, yaw, height) per sample."""
    root = st.frame.root
    fwd = yaw_matrix(goal.yaw)[:, 2]
    goal_xz = goal.position[[0, 2]]
    pre_goal = goal_xz + PREGOAL_STANDOFF * fwd[[0, 2]]
    here = np.array([root.x, root.z])
    d_pre = float(np.linalg.norm(pre_goal - here))
    target = pre_goal if d_pre > 0.5 else goal_xz
    to_t = target - here
    dist = float(np.linalg.norm(to_t))
    direction = to_t / dist if dist > 1e-9 else fwd[[0, 2]]
    times = np.arange(1, 7) / 6.0
    speed = NOMINAL_WALK_SPEED if st.activity == "approaching" else 0.4
    reach = np.minimum(dist, speed * times)
    xz = here[None, :] + direction[None, :] * reach[:, None]
    # facing: travel direction while far, turning into the goal yaw over the
    # last meter (the data turns in place at the stand-off point)
    travel_yaw = float(np.arctan2(direction[0], direction[1]))
    turn = float(np.clip(1.0 - (d_pre - 0.1) / 0.9, 0.0, 1.0))
    delta = np.arctan2(np.sin(goal.yaw - travel_yaw), np.cos(goal.yaw - travel_yaw))
    yaw = travel_yaw + turn * delta
    # height: standing while walking in, settling to the goal height when close
    height = 0.95 if d_pre > 0.5 else goal.position[1]
    out = np.zeros((6, 4))
    out[:, :2] = xz
    out[:, 2] = yaw
    out[:, 3] = height
    return out


def _build_window(st: EpisodeState, goal: GoalSpec) -> TrajectoryWindow:
    hist = list(st.history)
    positions = np.zeros((13, 3))
    dir6 = np.zeros((13, 6))
    actions = np.zeros((13, 3))
    # past samples at -30, -25, ..., -5 frames; clamp to the oldest entry
    for k in range(6):
        back = 30 - 5 * k
        idx = max(len(hist) - 1 - back, 0)
        positions[k] = hist[idx]["position"]
        dir6[k] = hist[idx]["dir6"]
        actions[k] = hist[idx]["actions"]
    positions[6] = hist[-1]["position"]
    dir6[6] = hist[-1]["dir6"]
    actions[6] = hist[-1]["actions"]
    if st.future_positions is None:
        pred_pos = np.tile(positions[6], (6, 1))
        pred_dir = np.tile(dir6[6], (6, 1))
        pred_act = np.tile(actions[6], (6, 1))
        w = 1.0
    else:
        pred_pos = st.future_positions[1:7].copy()
        pred_dir = st.future_dir6[1:7].copy()
        pred_act = st.future_actions[1:7].copy()
        w = GOAL_BIAS_APPROACH if st.activity == "approaching" else GOAL_BIAS_NEAR

    # bias the future toward the goal so the rollout cannot stall in place;
    # the weight ramps along the horizon so near-future keeps the predicted
    # inertia while the far end commits to the goal
    bias = _goal_bias_targets(st, goal)
    for k in range(6):
        wk = w * (k + 1) / 6.0
        pred_pos[k, 0] = (1 - wk) * pred_pos[k, 0] + wk * bias[k, 0]
        pred_pos[k, 2] = (1 - wk) * pred_pos[k, 2] + wk * bias[k, 1]
        pred_pos[k, 1] = (1 - wk) * pred_pos[k, 1] + wk * bias[k, 3]
        try:
            m = rot6d_to_matrix(pred_dir[k])
            pred_yaw = float(np.arctan2(m[0, 2], m[2, 2]))
        except DegenerateRotationError:
            pred_yaw = float(np.arctan2(
                rot6d_to_matrix(dir6[6])[0, 2], rot6d_to_matrix(dir6[6])[2, 2]
            ))
        target_yaw = bias[k, 2]
        mixed = pred_yaw + wk * float(
            np.arctan2(np.sin(target_yaw - pred_yaw), np.cos(target_yaw - pred_yaw))
        )
        pred_dir[k] = matrix_to_rot6d(yaw_matrix(mixed))
        positions[7 + k] = pred_pos[k]
        dir6[7 + k] = pred_dir[k]
        actions[7 + k] = pred_act[k]
    return TrajectoryWindow(positions, dir6, actions)


def _phase_window(st: EpisodeState) -> LocalPhaseWindow:
    hist = list(st.phase_hist)
    values = np.zeros((2, TAU))
    for k in range(6):
        back = 30 - 5 * k
        idx = max(len(hist) - 1 - back, 0)
        values[:, k] = hist[idx]
    values[:, 6] = hist[-1]
    values[:, 7:] = st.phase_future[:, 1:]
    return LocalPhaseWindow(values)


def _active_hands(st: EpisodeState) -> list[str]:
    return [s for s in ("left", "right") if st.contacts.hand(s) is not None]


def synthesis_step(st: EpisodeState, ctx: EngineContext) -> tuple[EpisodeState, MotionFrame]:
    cfg = ctx.config
    root = st.frame.root
    goal = ctx.goal

    # activity transitions (forward only within a contact goal)
    if st.activity == "approaching":
        d = np.hypot(root.x - goal.position[0], root.z - goal.position[2])
        if d <= ACTIVATION_RADIUS and goal.action[2] > 0.5:
            st.activity = "sitting"
    st.last_activity = st.activity

    # ---- control signal
    from .dataio.training import ACTIVATION_DEBOUNCE, planning_active

    control = ControlSignal.zeros()
    if not st.plan_latched:
        hist = list(st.history)
        spd = 0.0
        if len(hist) >= 2:
            delta = hist[-1]["position"][[0, 2]] - hist[-2]["position"][[0, 2]]
            spd = float(np.linalg.norm(delta) * cfg.fps)
        fires = bool(
            planning_active(
                np.array([root.x, root.z]), root.yaw, goal.position[[0, 2]],
                goal.yaw, spd,
            )
        )
        st.plan_run = st.plan_run + 1 if fires else 0
        if st.plan_run >= ACTIVATION_DEBOUNCE:
            st.plan_latched = True
    if st.activity != "approaching" and st.contacts.any_active and st.plan_latched:
        hands = st.hand_world(ctx.skeleton)
        hand_root = np.stack(
            [root.to_local(hands["left"]), root.to_local(hands["right"])]
        )
        contact_root = [
            None if st.contacts.hand(s) is None else root.to_local(st.contacts.hand(s))
            for s in ("left", "right")
        ]
        guidance = make_guidance(hand_root, contact_root)
        pose_vec = np.concatenate(
            [
                st.frame.joint_positions.ravel(),
                st.frame.joint_rotations.ravel(),
                st.frame.joint_velocities.ravel(),
            ]
        )
        signal, st.cn_state = ctx.controlnet.forward_signal(
            pose_vec, guidance, _phase_window(st), st.cn_state
        )
        for h, side in enumerate(("left", "right")):
            if st.contacts.hand(side) is None:
                signal = signal.zero_hand(h)
        control = signal
        # advance the per-hand phase timeline with the plan's next sample
        st.phase_future = control.local_phases.copy()
        st.phase_hist.append(control.local_phases[:, 0].copy())
    else:
        st.phase_hist.append(st.phase_hist[-1].copy() if st.phase_hist else np.zeros(2))

    # ---- pose prediction
    st.last_control_flat = control.flatten()
    window = _build_window(st, goal)
    x = assemble_input(st.frame, window, goal, ctx.chair, st.last_control_flat, st.phase)
    out = ctx.posenet.predict(x)

    raw = np.concatenate([out.joint_positions.ravel(), out.future_positions.ravel()])
    if not np.all(np.isfinite(raw)):
        dump = {
            "frame_index": st.frame_index,
            "root": [root.x, root.z, root.yaw, root.height],
            "phase": st.phase,
            "activity": st.activity,
        }
        raise NonFiniteOutputError(st.frame_index, dump)

    # ---- root update from the first future-trajectory sample
    new_pos = root.to_world(out.future_positions[0])
    try:
        dir_local = rot6d_to_matrix(out.future_directions[0])
        dir_world = root.rotation @ dir_local
        new_yaw = float(np.arctan2(dir_world[0, 2], dir_world[2, 2]))
    except DegenerateRotationError:
        new_yaw = root.yaw  # keep heading when the prediction collapses
    new_root = RootTransform(new_pos[0], new_pos[2], new_yaw, new_pos[1])

    frame = MotionFrame(
        joint_positions=out.joint_positions,
        joint_rotations=out.joint_rotations,
        joint_velocities=out.joint_velocities,
        root=new_root,
        action_labels=out.future_actions[0],
    )
    # ground the velocity channel in actual frame-to-frame motion (training
    # velocities are exact finite differences; feeding back predictions drifts)
    world_prev = st.frame.world_positions()
    frame.joint_velocities = new_root.direction_to_local(
        frame.world_positions() - world_prev
    )

    if cfg.fit_hand_trajectories and st.activity != "approaching":
        frame = _fit_hands(frame, control, st, ctx)

    # ---- bookkeeping
    st.frame = frame
    st.frame_index += 1
    st.phase = out.phase
    st.history.append(_window_sample(frame))
    st.future_positions = np.array([root.to_world(p) for p in out.future_positions])
    fut_dirs = []
    for d in out.future_directions:
        try:
            fut_dirs.append(matrix_to_rot6d(root.rotation @ rot6d_to_matrix(d)))
        except DegenerateRotationError:
            fut_dirs.append(matrix_to_rot6d(new_root.rotation))
    st.future_dir6 = np.array(fut_dirs)
    st.future_actions = out.future_actions.copy()

    hands = st.hand_world(ctx.skeleton)
    for side in ("left", "right"):
        target = st.contacts.hand(side)
        if target is None:
            continue
        d = float(np.linalg.norm(hands[side] - target))
        if st.seg_min_dist[side] is None or d < st.seg_min_dist[side]:
            st.seg_min_dist[side] = d
            st.seg_closest[side] = st.frame_index
    if st.activity == "sitting":
        sit_label = frame.action_labels[2]
        speed = float(
            np.linalg.norm(
                new_root.position[[0, 2]] - np.array([root.x, root.z])
            )
            * cfg.fps
        )
        if sit_label > SETTLE_SIT_LABEL and speed < SETTLE_SPEED:
            st.settle_count += 1
            if st.settle_count >= SETTLE_FRAMES and st.settled_frame is None:
                st.settled_frame = st.frame_index
                st.activity = "seated"
        else:
            st.settle_count = 0

    # auto-advance the contact queue once the current goal is reached
    if st.queue and st.contacts.any_active and contacts_reached(st):
        nxt = st.queue.popleft()
        chain_contacts(st, nxt)

    return st, frame


def _fit_hands(frame: MotionFrame, control: ControlSignal, st, ctx) -> MotionFrame:
    """Optional post-process: pull hands onto the planned next positions."""
    from .kinematics.fk import character_to_local, make_frame
    from .kinematics.ik import two_bone_ik

    local = character_to_local(ctx.skeleton, frame.joint_rotations)
    applied = False
    for h, side in enumerate(("left", "right")):
        target_contact = st.contacts.hand(side)
        if target_contact is None:
            continue
        planned = target_contact + frame.root.direction_to_world(
            control.hand_trajectories[h, :, 0]
        )
        local = two_bone_ik(ctx.skeleton, local, frame.root, side, planned)
        applied = True
    if not applied:
        return frame
    fitted = make_frame(ctx.skeleton, local, frame.root, frame.action_labels)
    fitted.joint_velocities = frame.joint_velocities
    return fitted


@dataclass
class EpisodeResult:
    frames: list[MotionFrame]
    activities: list[str]
    phases: list[float]
    controls: list[np.ndarray]  # flattened control per frame
    reports: list[ContactGoalReport]
    settled_frame: int | None
    step_times: list[float]
    config: EpisodeConfig

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def mean_step_ms(self) -> float:
        return float(np.mean(self.step_times) * 1000.0) if self.step_times else 0.0

    def summary_json(self) -> dict:
        return {
            "type": "summary",
            "frames": self.frame_count,
            "settled_frame": self.settled_frame,
            "contact_goals": [r.to_json() for r in self.reports],
            "mean_step_ms": self.mean_step_ms(),
        }

    def frame_json(self, i: int) -> dict:
        fr = self.frames[i]
        return {
            "type": "frame",
            "index": i,
            "time": i / self.config.fps,
            "activity": self.activities[i],
            "phase": self.phases[i],
            "root": {
                "x": fr.root.x,
                "z": fr.root.z,
                "yaw": fr.root.yaw,
                "height": fr.root.height,
            },
            "positions": fr.world_positions().tolist(),
            "rotations": fr.joint_rotations.tolist(),
            "actions": fr.action_labels.tolist(),
            "control": self.controls[i].tolist(),
        }


def run_episode(
    posenet: PoseNetModel,
    controlnet: ControlNetModel,
    chair: ChairModel,
    config: EpisodeConfig,
    contactnet=None,
    skeleton: Skeleton | None = None,
    contact_queue: list[ContactSpec] | None = None,
    on_frame=None,
) -> EpisodeResult:
    skeleton = skeleton or default_skeleton()
    goal = config.goal or GoalSpec(
        chair.seat_center_world + np.array([0.0, 0.03, 0.0]),
        chair.facing_yaw_world,
        np.array([0.0, 0.0, 1.0]),
    )
    contacts = config.contacts
    if config.mode == "generative":
        if contactnet is None:
            raise ValueError("generative mode needs a trained contact sampler")
        from .contactnet import sample_contacts

        specs = sample_contacts(contactnet, chair, 1, seed=config.contact_seed)
        contacts = specs[0]
    cfg = EpisodeConfig(**{**config.__dict__, "contacts": contacts, "goal": goal})
    ctx = EngineContext(posenet, controlnet, chair, goal, skeleton, cfg)
    st = initial_state(ctx)
    if contact_queue:
        st.queue.extend(contact_queue)

    total_frames = int(round(cfg.duration * cfg.fps))
    frames, activities, phases, controls, times = [], [], [], [], []
    for _ in range(total_frames):
        t0 = time.perf_counter()
        st, frame = synthesis_step(st, ctx)
        times.append(time.perf_counter() - t0)
        frames.append(frame)
        activities.append(st.last_activity)
        phases.append(st.phase)
        controls.append(st.last_control_flat.copy())
        if on_frame is not None:
            on_frame(len(frames) - 1, frame, st)
        if cfg.stop_on_settle and st.settled_frame is not None:
            break
    st.reports.append(_segment_report(st, st.frame_index))
    return EpisodeResult(
        frames=frames,
        activities=activities,
        phases=phases,
        controls=[np.asarray(c, dtype=np.float64) for c in controls],
        reports=st.reports,
        settled_frame=st.settled_frame,
        step_times=times,
        config=cfg,
    )


def write_episode_jsonl(result: EpisodeResult, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for i in range(result.frame_count):
            f.write(json.dumps(result.frame_json(i)) + "\n")
        f.write(json.dumps(result.summary_json()) + "\n")


def load_episode_jsonl(path: str | Path, fps: float = 30.0) -> EpisodeResult:
    """Rebuild an episode from its JSON-lines dump (velocities re-derived)."""
    frames: list[MotionFrame] = []
    activities: list[str] = []
    phases: list[float] = []
    controls: list[np.ndarray] = []
    summary = None
    prev_world = None
    for line in Path(path).read_text().splitlines():
        msg = json.loads(line)
        if msg["type"] == "summary":
            summary = msg
            continue
        if msg["type"] != "frame":
            continue
        root = RootTransform(
            msg["root"]["x"], msg["root"]["z"], msg["root"]["yaw"], msg["root"]["height"]
        )
        world = np.array(msg["positions"])
        vel = np.zeros((22, 3))
        if prev_world is not None:
            vel = root.direction_to_local(world - prev_world)
        prev_world = world
        frames.append(
            MotionFrame(
                joint_positions=root.to_local(world),
                joint_rotations=np.array(msg["rotations"]),
                joint_velocities=vel,
                root=root,
                action_labels=np.array(msg["actions"]),
            )
        )
        activities.append(msg["activity"])
        phases.append(float(msg["phase"]))
        controls.append(np.array(msg["control"]))
    reports = []
    settled = None
    if summary:
        settled = summary.get("settled_frame")
        for g in summary.get("contact_goals", []):
            reports.append(
                ContactGoalReport(
                    start_frame=g["start_frame"],
                    end_frame=g["end_frame"],
                    targets={
                        k: (None if v is None else np.array(v))
                        for k, v in g["targets"].items()
                    },
                    min_distance={
                        k: (None if v is None else v / 100.0)
                        for k, v in g["min_distance_cm"].items()
                    },
                    closest_frame=g["closest_frame"],
                    reached=g["reached"],
                )
            )
    cfg = EpisodeConfig(chair_id="", start=frames[0].root if frames else RootTransform())
    return EpisodeResult(
        frames=frames,
        activities=activities,
        phases=phases,
        controls=controls,
        reports=reports,
        settled_frame=settled,
        step_times=[],
        config=cfg,
    )

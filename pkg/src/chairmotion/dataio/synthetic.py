"""Procedural oracle dataset: walk-approach-reach-sit sequences with exact labels.

Each sequence is built analytically (root path + gait + sit spline) with
closed-form arm IK driving hand reaches onto sampled chair contacts, so
contacts, local phases, and the global phase are known by construction.
Styles mirror the six interaction categories (right/left/both hands,
no contact, free interaction, locomotion).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kinematics.fk import fk_full, make_frame
from ..kinematics.frames import MotionFrame, RootTransform
from ..kinematics.ik import two_bone_ik
from ..kinematics.skeleton import Skeleton, default_skeleton
from ..posenet import GoalSpec
from ..posing import (
    STAND_PELVIS_HEIGHT,
    ease_cos,
    relaxed_stand_locals,
    sit_blend_locals,
    walk_bob,
    walk_cycle_locals,
)
from ..scene.chair import ChairModel, ChairTransform
from ..scene.contacts import ContactSpec
from ..scene.parametric import ChairParams, contact_regions
from .sequence import INTERACTION_TYPES, SequenceFile

FPS = 30.0
DT = 1.0 / FPS
STRIDE_LENGTH = 1.3  # meters per gait cycle
SEATED_PELVIS_CLEARANCE = 0.03


@dataclass
class SyntheticConfig:
    sequences: int = 200
    ring_radius: tuple[float, float] = (1.5, 3.0)
    # (right_hand, left_hand, both_hands, no_contact, free, locomotion)
    style_mix: tuple[float, ...] = (0.173, 0.140, 0.289, 0.174, 0.152, 0.072)
    seed: int = 0
    settle_seconds: float = 1.2
    subjects: int = 4

    def normalized_mix(self) -> np.ndarray:
        mix = np.asarray(self.style_mix, dtype=np.float64)
        if mix.min() < 0 or mix.sum() <= 0:
            raise ValueError("style mix must be nonnegative with positive sum")
        return mix / mix.sum()


def _smooth_polyline(waypoints: np.ndarray, step: float = 0.02, passes: int = 3) -> np.ndarray:
    """Densify a 2D polyline and round its corners with moving averages."""
    pts = [waypoints[0]]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        seg = b - a
        n = max(1, int(np.ceil(np.linalg.norm(seg) / step)))
        for k in range(1, n + 1):
            pts.append(a + seg * (k / n))
    dense = np.array(pts)
    w = 25
    for _ in range(passes):
        if len(dense) <= 2 * w:
            break
        kernel = np.ones(w) / w
        sm = np.copy(dense)
        for d in range(2):
            sm[:, d] = np.convolve(np.pad(dense[:, d], w // 2, mode="edge"), kernel, "valid")[: len(dense)]
        sm[0] = dense[0]
        sm[-1] = dense[-1]
        dense = sm
    return dense


class _Path:
    """Arc-length parameterized smoothed 2D path."""

    def __init__(self, waypoints_xz: np.ndarray):
        self.points = _smooth_polyline(np.asarray(waypoints_xz, dtype=np.float64))
        deltas = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(deltas)])
        self.length = float(self.cum[-1])

    def point(self, s: float) -> np.ndarray:
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(i, len(self.points) - 2)
        seg = self.cum[i + 1] - self.cum[i]
        u = 0.0 if seg <= 1e-12 else (s - self.cum[i]) / seg
        return self.points[i] * (1 - u) + self.points[i + 1] * u

    def tangent(self, s: float) -> np.ndarray:
        a = self.point(max(0.0, s - 0.05))
        b = self.point(min(self.length, s + 0.05))
        d = b - a
        n = np.linalg.norm(d)
        return d / n if n > 1e-9 else np.array([0.0, 1.0])


def _yaw_lerp(a: float, b: float, t: float) -> float:
    """Interpolate yaw angles along the short way."""
    d = np.arctan2(np.sin(b - a), np.cos(b - a))
    return a + d * t


@dataclass
class _ReachSegment:
    hand: str  # "left" | "right"
    start_frame: int
    contact_frame: int
    release_frame: int
    target: np.ndarray  # world


def _sample_hand_contact(
    chair: ChairModel, params: ChairParams, side: str, sit_x: float, rng
) -> np.ndarray:
    """Contact in chair-local coords; wide seats fall back to the cushion."""
    regions = contact_regions(params)
    center, half = regions[side]
    arm_reach = 0.47
    if abs(center[0] - sit_x) * chair.transform.scale > arm_reach:
        sx = 1.0 if side == "left" else -1.0
        center = np.array(
            [sit_x + sx * 0.30, params.seat_height, rng.uniform(-0.05, 0.15)]
        )
        half = np.array([0.04, 0.0, 0.05])
    u = rng.uniform(-1.0, 1.0, 3)
    return center + u * half


def generate_synthetic_dataset(
    chairs: list[tuple[ChairModel, ChairParams]],
    config: SyntheticConfig | None = None,
) -> list[SequenceFile]:
    cfg = config or SyntheticConfig()
    if not chairs:
        raise ValueError("no chairs to generate against")
    mix = cfg.normalized_mix()
    master = np.random.default_rng(cfg.seed)
    seeds = master.integers(0, 2**62, size=cfg.sequences)
    skel = default_skeleton()
    out = []
    for i in range(cfg.sequences):
        rng = np.random.default_rng(int(seeds[i]))
        chair_model, params = chairs[i % len(chairs)]
        style = INTERACTION_TYPES[int(rng.choice(len(mix), p=mix))]
        transform = ChairTransform(
            np.array([rng.uniform(-0.5, 0.5), 0.0, rng.uniform(-0.5, 0.5)]),
            yaw=rng.uniform(-np.pi, np.pi),
        )
        chair = chair_model.with_transform(transform)
        seq = _generate_one(
            skel, chair, params, style, rng, cfg, subject=f"synth{i % cfg.subjects}"
        )
        out.append(seq)
    return out


def _generate_one(
    skel: Skeleton,
    chair: ChairModel,
    params: ChairParams,
    style: str,
    rng: np.random.Generator,
    cfg: SyntheticConfig,
    subject: str,
) -> SequenceFile:
    d2 = params.seat_depth / 2.0
    scale = chair.transform.scale
    sit_yaw = chair.transform.yaw

    if params.seat_width > 0.8 and style != "locomotion":
        sit_x = rng.uniform(-(params.seat_width / 2 - 0.3), params.seat_width / 2 - 0.3)
    else:
        sit_x = 0.0

    # contacts per style
    hands_with_contact = {
        "right_hand": ("right",),
        "left_hand": ("left",),
        "both_hands": ("left", "right"),
        "free": ("left", "right"),
        "no_contact": (),
        "locomotion": (),
    }[style]
    contact_world: dict[str, np.ndarray] = {}
    for side in hands_with_contact:
        local = _sample_hand_contact(chair, params, side, sit_x, rng)
        contact_world[side] = chair.transform.to_world(local)

    # ----------------------------------------------------------- root path
    # oversample short approaches: the final meter is where precision lives
    if rng.random() < 0.4:
        r = rng.uniform(0.9, max(cfg.ring_radius[0], 1.0))
    else:
        r = rng.uniform(*cfg.ring_radius)
    theta = rng.uniform(-np.pi, np.pi)
    chair_xz = chair.transform.position[[0, 2]]
    start_xz = chair_xz + r * np.array([np.cos(theta), np.sin(theta)])

    if style == "locomotion":
        waypoints = [start_xz]
        for _ in range(rng.integers(2, 4)):
            ang = rng.uniform(-np.pi, np.pi)
            rad = rng.uniform(1.2, cfg.ring_radius[1])
            waypoints.append(chair_xz + rad * np.array([np.cos(ang), np.sin(ang)]))
        path = _Path(np.array(waypoints))
        goal_xz = waypoints[-1]
        goal = GoalSpec(
            np.array([goal_xz[0], STAND_PELVIS_HEIGHT, goal_xz[1]]),
            0.0,
            np.array([0.0, 1.0, 0.0]),
        )
        contacts = ContactSpec()
        seated_h = STAND_PELVIS_HEIGHT
        pre_sit_xz = goal_xz
        seat_xz = goal_xz
    else:
        pre_sit_local = np.array([sit_x, 0.0, d2 + 0.18])
        staging_local = np.array([sit_x, 0.0, d2 + 1.0])
        pre_sit_xz = chair.transform.to_world(pre_sit_local)[[0, 2]]
        staging_xz = chair.transform.to_world(staging_local)[[0, 2]]
        start_local = chair.transform.to_local(
            np.array([start_xz[0], 0.0, start_xz[1]])
        )
        waypoints = [start_xz]
        if start_local[2] < 0.4:  # beside or behind the chair: swing around
            sx = 1.0 if start_local[0] >= 0 else -1.0
            side_local = np.array([sx * (params.seat_width / 2 + 0.8), 0.0, 0.5])
            waypoints.append(chair.transform.to_world(side_local)[[0, 2]])
        if np.linalg.norm(start_xz - staging_xz) > 0.4:
            waypoints.append(staging_xz)
        waypoints.append(pre_sit_xz)
        path = _Path(np.array(waypoints))
        seat_local = np.array([sit_x, 0.0, 0.0])
        seat_xz = chair.transform.to_world(seat_local)[[0, 2]]
        seated_h = chair.seat_height_world + SEATED_PELVIS_CLEARANCE
        goal = GoalSpec(
            np.array([seat_xz[0], seated_h, seat_xz[1]]),
            sit_yaw,
            np.array([0.0, 0.0, 1.0]),
        )
        contacts = ContactSpec(
            contact_world.get("left"), contact_world.get("right")
        )

    # ------------------------------------------------------------ timeline
    v_max = rng.uniform(1.0, 1.25)
    ramp = 0.4
    n_idle = int(round(rng.uniform(0.15, 0.3) * FPS))
    # start facing anywhere; an in-place turn aligns with the path first
    yaw_offset = rng.uniform(-np.pi, np.pi)
    n_turn0 = int(round((0.15 + 0.55 * abs(yaw_offset) / np.pi) * FPS))
    # per-frame walk speeds: trapezoidal, normalized to cover the path
    t_flat = max(path.length / v_max - ramp, 0.2)
    n_walk = int(round((t_flat + 2 * ramp) * FPS))
    tt = np.arange(n_walk) * DT
    speeds = v_max * np.minimum(
        1.0, np.minimum(tt / ramp, np.maximum((tt[-1] + DT - tt) / ramp, 1e-3))
    )
    s_cum = np.cumsum(speeds) * DT
    if s_cum[-1] > 0:
        s_cum *= path.length / s_cum[-1]
    speeds_eff = np.diff(np.concatenate([[0.0], s_cum])) / DT

    if style == "locomotion":
        n_turn = n_sit = 0
        n_settle = int(round(0.5 * FPS))
    else:
        n_turn = int(round(0.8 * FPS))
        n_sit = int(round(1.15 * FPS))
        n_settle = int(round(cfg.settle_seconds * FPS))
    free_extra = style == "free"
    n_free = int(round(2.4 * FPS)) if free_extra else 0
    total = n_idle + n_turn0 + n_walk + n_turn + n_sit + n_settle + n_free

    walk_start = n_idle + n_turn0
    sit_start = walk_start + n_walk + n_turn
    settle_start = sit_start + n_sit

    roots: list[RootTransform] = []
    locals_seq: list[np.ndarray] = []
    phis = np.zeros(total)
    actions = np.zeros((total, 3))
    intensity_scale = rng.uniform(0.85, 1.1)

    walk_phase = rng.uniform(0.0, 1.0)
    stand = relaxed_stand_locals(skel)
    start_tangent = path.tangent(0.0)
    tangent_yaw = float(np.arctan2(start_tangent[0], start_tangent[1]))
    idle_yaw = tangent_yaw + yaw_offset

    for t in range(total):
        if t < n_idle:
            xz = path.point(0.0)
            root = RootTransform(xz[0], xz[1], idle_yaw, STAND_PELVIS_HEIGHT)
            locals_t = stand
            phi = 0.0
            act = np.array([1.0, 0.0, 0.0])
        elif t < walk_start:
            k = t - n_idle
            u = ease_cos(k / max(n_turn0 - 1, 1))
            yaw = _yaw_lerp(idle_yaw, tangent_yaw, u)
            walk_phase += 0.5 * DT / STRIDE_LENGTH
            inten = 0.35 * intensity_scale * np.sin(np.pi * min(u, 1.0))
            locals_t = walk_cycle_locals(skel, walk_phase % 1.0, inten)
            xz = path.point(0.0)
            root = RootTransform(xz[0], xz[1], yaw, STAND_PELVIS_HEIGHT)
            phi = walk_phase % 1.0
            w = ease_cos(k / max(n_turn0 - 1, 1))
            act = np.array([1.0 - 0.5 * w, 0.5 * w, 0.0])
        elif t < walk_start + n_walk:
            k = t - walk_start
            s = float(s_cum[k])
            xz = path.point(s)
            tan = path.tangent(s)
            yaw = float(np.arctan2(tan[0], tan[1]))
            # ease facing into the sitting yaw near the end of the path
            if style != "locomotion" and path.length - s < 0.45:
                blend = 1.0 - (path.length - s) / 0.45
                yaw = _yaw_lerp(yaw, sit_yaw, ease_cos(blend))
            inten = float(np.clip(speeds_eff[k] / 1.15, 0.0, 1.0)) * intensity_scale
            walk_phase += speeds_eff[k] * DT / STRIDE_LENGTH
            locals_t = walk_cycle_locals(skel, walk_phase % 1.0, inten)
            root = RootTransform(
                xz[0], xz[1], yaw, STAND_PELVIS_HEIGHT + walk_bob(walk_phase % 1.0, inten)
            )
            phi = walk_phase % 1.0
            # idle->walk crossfade over 0.3 s
            w = ease_cos(k / (0.3 * FPS))
            act = np.array([1.0 - w, w, 0.0])
        elif t < sit_start:
            k = t - walk_start - n_walk
            u = ease_cos(k / max(n_turn - 1, 1))
            yaw = _yaw_lerp(
                roots[-1].yaw if k == 0 else roots[walk_start + n_walk - 1].yaw,
                sit_yaw,
                u,
            )
            walk_phase += 0.4 * DT / STRIDE_LENGTH
            inten = (1.0 - u) * 0.4 * intensity_scale
            locals_t = walk_cycle_locals(skel, walk_phase % 1.0, inten)
            root = RootTransform(pre_sit_xz[0], pre_sit_xz[1], yaw, STAND_PELVIS_HEIGHT)
            phi = walk_phase % 1.0
            act = np.array([0.0, 1.0, 0.0])
        elif t < settle_start:
            k = t - sit_start
            s = ease_cos(k / max(n_sit - 1, 1))
            xz = pre_sit_xz * (1 - s) + seat_xz * s
            h = STAND_PELVIS_HEIGHT * (1 - s) + seated_h * s
            locals_t = sit_blend_locals(skel, stand, s)
            root = RootTransform(xz[0], xz[1], sit_yaw, h)
            phi = s
            w = ease_cos(k / (0.3 * FPS))
            act = np.array([0.0, 1.0 - w, w])
        else:
            k = t - settle_start
            locals_t = sit_blend_locals(skel, stand, 1.0)
            if free_extra and t >= settle_start + n_settle:
                kk = t - settle_start - n_settle
                lean = np.radians(10.0) * np.sin(2 * np.pi * kk / max(n_free, 1))
                from ..kinematics.rotations import axis_angle_matrix

                locals_t = locals_t.copy()
                locals_t[skel.index("spine1")] = (
                    axis_angle_matrix(np.array([1.0, 0, 0]), lean)
                    @ locals_t[skel.index("spine1")]
                )
            root = RootTransform(seat_xz[0], seat_xz[1], sit_yaw, seated_h)
            phi = 1.0
            act = np.array([0.0, 0.0, 1.0])
            if style == "locomotion":
                xz = path.point(path.length)
                root = RootTransform(xz[0], xz[1], roots[-1].yaw, STAND_PELVIS_HEIGHT)
                locals_t = stand
                phi = phis[t - 1] if t > 0 else 0.0
                act = np.array([1.0, 0.0, 0.0])
        roots.append(root)
        locals_seq.append(np.asarray(locals_t))
        phis[t] = phi
        actions[t] = act / act.sum()

    # ------------------------------------------------------------- reaches
    # the reach begins right when the planner's activation rule fires (close
    # to the goal and mostly turned), so onset is predictable from state
    side_index = {"left": 0, "right": 1}
    reaches: list[_ReachSegment] = []
    if style != "locomotion":
        reach_frames = int(round(0.9 * FPS))
        from .training import ACTIVATION_DEBOUNCE, planning_active

        goal_xz_arr = np.array([goal.position[0], goal.position[2]])
        t0_default = max(sit_start - int(round(0.35 * FPS)), n_idle)
        t0 = t0_default
        scan_from = max(walk_start + n_walk - int(round(0.25 * FPS)), 0)
        run = 0
        for t in range(scan_from, total):
            prev_r = roots[max(t - 1, 0)]
            spd = float(np.hypot(roots[t].x - prev_r.x, roots[t].z - prev_r.z) * FPS)
            fires = planning_active(
                np.array([roots[t].x, roots[t].z]), roots[t].yaw, goal_xz_arr,
                sit_yaw, spd,
            )
            run = run + 1 if fires else 0
            if run >= ACTIVATION_DEBOUNCE:
                start_at = t - ACTIVATION_DEBOUNCE + 1
                t0 = min(start_at + 3, t0_default + int(round(0.5 * FPS)))
                break
        for side in hands_with_contact:
            reaches.append(
                _ReachSegment(
                    hand=side,
                    start_frame=t0,
                    contact_frame=t0 + reach_frames,
                    release_frame=total - 1,
                    target=contact_world[side],
                )
            )
        if free_extra and "right" in contact_world:
            # serial contact: lift the right hand to a new point mid-sit
            t_release = settle_start + int(round(0.6 * FPS))
            for seg in reaches:
                if seg.hand == "right":
                    seg.release_frame = t_release
            local2 = _sample_hand_contact(chair, params, "right", sit_x, rng)
            target2 = chair.transform.to_world(local2)
            t2 = t_release + int(round(0.2 * FPS))
            reaches.append(
                _ReachSegment(
                    hand="right",
                    start_frame=t2,
                    contact_frame=t2 + int(round(0.8 * FPS)),
                    release_frame=total - 1,
                    target=target2,
                )
            )

    # base hand positions before IK (for reach starting points)
    wrist_ids = {"left": skel.index("left_wrist"), "right": skel.index("right_wrist")}
    base_hand = np.zeros((total, 2, 3))
    for t in range(total):
        pos, _ = fk_full(skel, locals_seq[t], roots[t])
        base_hand[t, 0] = pos[wrist_ids["left"]]
        base_hand[t, 1] = pos[wrist_ids["right"]]

    local_phases = np.zeros((total, 2))
    for seg in reaches:
        h = side_index[seg.hand]
        start_pos = base_hand[seg.start_frame, h]
        for t in range(seg.start_frame, min(seg.release_frame, total - 1) + 1):
            if t < seg.contact_frame:
                u = (t - seg.start_frame) / max(seg.contact_frame - seg.start_frame, 1)
                e = ease_cos(u)
                target = start_pos + (seg.target - start_pos) * e
                local_phases[t, h] = max(local_phases[t, h], e)
            else:
                target = seg.target
                local_phases[t, h] = 1.0
            locals_seq[t] = two_bone_ik(
                skel, locals_seq[t], roots[t], seg.hand, target
            )
        # start point for a later segment of the same hand is wherever we left off
        for later in reaches:
            if later.hand == seg.hand and later.start_frame > seg.contact_frame:
                base_hand[later.start_frame, h] = seg.target

    # ------------------------------------------------- frames + annotations
    frames: list[MotionFrame] = []
    prev = None
    for t in range(total):
        fr = make_frame(skel, locals_seq[t], roots[t], actions[t], prev)
        frames.append(fr)
        prev = fr

    flags = np.zeros((total, 5))
    key = skel.key_joint_indices  # pelvis, lwrist, rwrist, lankle, rankle
    for t in range(total):
        world = frames[t].world_positions()
        if style != "locomotion" and t >= sit_start:
            s = ease_cos((t - sit_start) / max(n_sit - 1, 1)) if t < settle_start else 1.0
            if s > 0.97:
                flags[t, 0] = 1.0
        for h, side in enumerate(("left", "right")):
            if local_phases[t, h] >= 1.0:
                d = chair.distance_world(world[wrist_ids[side]])
                if d < 0.02:
                    flags[t, 1 + h] = 1.0
    # feet: planted when low and slow
    foot_ids = [key[3], key[4]]
    foot_pos = np.array([[frames[t].world_positions()[j] for j in foot_ids] for t in range(total)])
    for fi in range(2):
        heights = foot_pos[:, fi, 1]
        speeds = np.zeros(total)
        speeds[1:] = np.linalg.norm(np.diff(foot_pos[:, fi], axis=0), axis=1) * FPS
        flags[:, 3 + fi] = ((heights < 0.12) & (speeds < 0.35)).astype(float)

    return SequenceFile(
        subject=subject,
        chair_id=chair.id,
        interaction_type=style,
        frames=frames,
        contact_flags=flags,
        local_phases=local_phases,
        global_phase=phis,
        contacts=contacts,
        goal=goal,
        fps=FPS,
        chair_transform=chair.transform.copy(),
    )

"""Builders turning motion sequences into network training sets.

The pose-prediction set is frame pairs (state at i -> state at i+1 plus
future windows); the planner set is fixed-length windows over the frames
where hand control is active; the contact set is one (chair encoding,
contact pair) example per seated sequence.
"""

from __future__ import annotations

import numpy as np

from ..contactnet import ContactDataset, contact_pair_local
from ..controlnet import (
    ControlWindow,
    PHASE_WINDOW_SIZE,
    SIGNAL_SIZE,
    TAU,
    TAU_PLUS,
    TRAJ_SIZE,
)
from ..kinematics.frames import (
    FUTURE_SAMPLES,
    RootTransform,
    TRAJECTORY_SAMPLES,
    future_frame_offsets,
    window_frame_offsets,
)
from ..kinematics.rotations import (
    matrix_to_rot6d,
    matrix_to_rot6d_batch,
    rot6d_to_matrix_batch,
    yaw_matrix,
)
from ..posenet import INPUT_DIM, OUTPUT_DIM, PoseDataset
from ..scene.chair import ChairModel
from ..scene.encodings import encode_chair_centered, encode_chair_centric, encode_ego_cylinder
from .sequence import SequenceFile

# hand planning activates in the pre-sit state: close to the goal, mostly
# turned to the sitting yaw, goal behind the pelvis, and nearly stopped
# (walking toward or past the chair never satisfies all four)
ACTIVATION_RADIUS = 0.65
ACTIVATION_YAW = np.radians(75.0)
ACTIVATION_SPEED = 0.5  # m/s
ACTIVATION_DEBOUNCE = 5  # rule must hold this many consecutive frames
HAND_SLOTS = ("left", "right")


def planning_active(root_xz, root_yaw, goal_xz, goal_yaw, speed) -> np.ndarray:
    d = np.linalg.norm(root_xz - goal_xz, axis=-1)
    dyaw = np.abs(np.arctan2(np.sin(root_yaw - goal_yaw), np.cos(root_yaw - goal_yaw)))
    # goal position in the root frame: z is the forward component
    rel = goal_xz - root_xz
    forward_z = rel[..., 0] * np.sin(root_yaw) + rel[..., 1] * np.cos(root_yaw)
    return (
        (d <= ACTIVATION_RADIUS)
        & (dyaw <= ACTIVATION_YAW)
        & (forward_z < 0.05)
        & (np.asarray(speed) <= ACTIVATION_SPEED)
    )


def resolve_chair(chairs: dict[str, ChairModel], seq: SequenceFile) -> ChairModel:
    chair = chairs[seq.chair_id]
    if seq.chair_transform is not None:
        chair = chair.with_transform(seq.chair_transform)
    return chair


class SequenceFeatures:
    """Vectorized per-sequence arrays shared by the dataset builders."""

    def __init__(self, seq: SequenceFile, chair: ChairModel, skeleton):
        self.seq = seq
        self.chair = chair
        t = len(seq)
        self.t = t
        self.root_pos = np.array([fr.root.position for fr in seq.frames])  # (T, 3)
        self.root_rot = np.array([fr.root.rotation for fr in seq.frames])  # (T, 3, 3)
        self.root_dir6 = matrix_to_rot6d_batch(self.root_rot)
        self.actions = np.array([fr.action_labels for fr in seq.frames])
        self.joints = np.array(
            [
                np.concatenate(
                    [
                        fr.joint_positions.ravel(),
                        fr.joint_rotations.ravel(),
                        fr.joint_velocities.ravel(),
                    ]
                )
                for fr in seq.frames
            ]
        )  # (T, 264)
        wrists = [skeleton.index("left_wrist"), skeleton.index("right_wrist")]
        self.hand_world = np.array(
            [fr.world_positions()[wrists] for fr in seq.frames]
        )  # (T, 2, 3)
        self.world_joints = np.array([fr.world_positions() for fr in seq.frames])

        # active contact target per frame/hand (world), nan when none
        self.active_contact = np.full((t, 2, 3), np.nan)
        for h in range(2):
            flags = seq.contact_flags[:, 1 + h] > 0.5
            if not flags.any():
                continue
            idx = np.where(flags)[0]
            groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
            seg_start = 0
            for g in groups:
                g0, g1 = int(g[0]), int(g[-1])
                point = self.hand_world[g0, h]
                self.active_contact[seg_start : g1 + 1, h] = point
                seg_start = g1 + 1

        # first frame where hand planning activates: the rule must hold for
        # a run of frames so brief walk-past transients don't trigger it
        self.activation_frame = t
        if seq.goal is not None and seq.goal.action[2] > 0.5:
            yaws = np.array([fr.root.yaw for fr in seq.frames])
            speeds = np.zeros(t)
            if t > 1:
                speeds[1:] = (
                    np.linalg.norm(np.diff(self.root_pos[:, [0, 2]], axis=0), axis=1)
                    * seq.fps
                )
                speeds[0] = speeds[1]
            on = planning_active(
                self.root_pos[:, [0, 2]], yaws, seq.goal.position[[0, 2]],
                seq.goal.yaw, speeds,
            )
            run = 0
            for i, flag in enumerate(on):
                run = run + 1 if flag else 0
                if run >= ACTIVATION_DEBOUNCE:
                    self.activation_frame = i - ACTIVATION_DEBOUNCE + 1
                    break

    def clamp(self, idx: np.ndarray) -> np.ndarray:
        return np.clip(idx, 0, self.t - 1)

    def control_active(self, t: int, h: int) -> bool:
        return t >= self.activation_frame and np.isfinite(self.active_contact[t, h, 0])

    def control_signal(self, i: int) -> np.ndarray:
        """Ground-truth planner output covering [i+1, i+1+1s], root frame of i."""
        out = np.zeros(SIGNAL_SIZE)
        future = self.clamp(i + 1 + 5 * np.arange(TAU_PLUS))
        rot = self.root_rot[i]
        traj = out[:TRAJ_SIZE].reshape(2, 3, TAU_PLUS)
        phases = out[TRAJ_SIZE:].reshape(2, TAU_PLUS)
        for h in range(2):
            if not self.control_active(i, h):
                continue
            rel = (self.hand_world[future, h] - self.active_contact[i, h]) @ rot
            traj[h] = rel.T
            phases[h] = self.seq.local_phases[future, h]
        return out

    def window_features(self, i: int) -> np.ndarray:
        """Root trajectory window of frame i, in frame i's root space."""
        idx = self.clamp(i + window_frame_offsets(self.seq.fps))
        rot = self.root_rot[i]
        pos = (self.root_pos[idx] - self.root_pos[i]) @ rot
        dirs = matrix_to_rot6d_batch(
            np.einsum("ij,tjk->tik", rot.T, self.root_rot[idx])
        )
        return np.concatenate([pos.ravel(), dirs.ravel(), self.actions[idx].ravel()])

    def goal_features(self, i: int) -> np.ndarray:
        goal = self.seq.goal
        if goal is None:
            goal_pos = self.root_pos[i]
            goal_yaw = self.seq.frames[i].root.yaw
            action = self.actions[i]
        else:
            goal_pos, goal_yaw, action = goal.position, goal.yaw, goal.action
        rot = self.root_rot[i]
        rel = (goal_pos - self.root_pos[i]) @ rot
        d6 = matrix_to_rot6d(rot.T @ yaw_matrix(goal_yaw))
        pos = np.tile(rel, (TRAJECTORY_SAMPLES, 1))
        dirs = np.tile(d6, (TRAJECTORY_SAMPLES, 1))
        acts = np.tile(action, (TRAJECTORY_SAMPLES, 1))
        return np.concatenate([pos.ravel(), dirs.ravel(), acts.ravel()])

    def input_vector(self, i: int) -> np.ndarray:
        fr = self.seq.frames[i]
        chair_enc = encode_chair_centric(self.chair, self.root_pos[i])
        ego_enc = encode_ego_cylinder(self.chair, fr.root)
        return np.concatenate(
            [
                self.control_signal(i),
                self.joints[i],
                self.window_features(i),
                self.goal_features(i),
                chair_enc,
                ego_enc,
                [self.seq.global_phase[i]],
            ]
        )

    def target_vector(self, i: int) -> np.ndarray:
        """Targets for the transition i -> i+1, in frame i's root space."""
        j = i + 1
        rot = self.root_rot[i]
        future = self.clamp(j + future_frame_offsets(self.seq.fps))

        fpos = (self.root_pos[future] - self.root_pos[i]) @ rot
        fdirs = matrix_to_rot6d_batch(
            np.einsum("ij,tjk->tik", rot.T, self.root_rot[future])
        )
        facts = self.actions[future]
        future_traj = np.concatenate([fpos.ravel(), fdirs.ravel(), facts.ravel()])

        goal = self.seq.goal
        if goal is None:
            goal_pos = self.root_pos[j]
            goal_yaw = self.seq.frames[j].root.yaw
            action = self.actions[j]
        else:
            goal_pos, goal_yaw, action = goal.position, goal.yaw, goal.action
        g_rel = (goal_pos - self.root_pos[i]) @ rot
        g_d6 = matrix_to_rot6d(rot.T @ yaw_matrix(goal_yaw))
        future_goal = np.concatenate(
            [
                np.tile(g_rel, (FUTURE_SAMPLES, 1)).ravel(),
                np.tile(g_d6, (FUTURE_SAMPLES, 1)).ravel(),
                np.tile(action, (FUTURE_SAMPLES, 1)).ravel(),
            ]
        )

        # joints of frame j relative to the root one second ahead
        ahead = int(self.clamp(np.array([j + int(self.seq.fps)]))[0])
        ahead_root = self.seq.frames[ahead].root
        future_root_joints = ahead_root.to_local(self.world_joints[j])

        goal_frame = RootTransform(goal_pos[0], goal_pos[2], goal_yaw, goal_pos[1])
        grel_pos = goal_frame.to_local(self.root_pos[future])
        grel_dirs = matrix_to_rot6d_batch(
            np.einsum("ij,tjk->tik", goal_frame.rotation.T, self.root_rot[future])
        )
        goal_rel = np.concatenate([grel_pos, grel_dirs], axis=1)  # (7, 9)

        return np.concatenate(
            [
                self.joints[j],
                future_traj,
                future_goal,
                [self.seq.global_phase[j]],
                future_root_joints.ravel(),
                goal_rel.ravel(),
                self.seq.contact_flags[j],
            ]
        )


def build_pose_dataset(
    sequences: list[SequenceFile],
    chairs: dict[str, ChairModel],
    skeleton=None,
    stride: int = 1,
) -> PoseDataset:
    from ..kinematics.skeleton import default_skeleton

    skeleton = skeleton or default_skeleton()
    xs, ys = [], []
    for seq in sequences:
        feats = SequenceFeatures(seq, resolve_chair(chairs, seq), skeleton)
        for i in range(0, len(seq) - 1, stride):
            xs.append(feats.input_vector(i))
            ys.append(feats.target_vector(i))
    x = np.array(xs)
    y = np.array(ys)
    assert x.shape[1] == INPUT_DIM and y.shape[1] == OUTPUT_DIM
    return PoseDataset(x, y)


def build_control_windows(
    sequences: list[SequenceFile],
    chairs: dict[str, ChairModel],
    skeleton=None,
    window: int = 60,
    windows_per_sequence: int = 2,
) -> list[ControlWindow]:
    from ..kinematics.skeleton import default_skeleton

    skeleton = skeleton or default_skeleton()
    out = []
    phase_offsets = window_frame_offsets(30.0)
    for seq in sequences:
        if not (seq.contact_flags[:, 1:3] > 0.5).any():
            continue
        feats = SequenceFeatures(seq, resolve_chair(chairs, seq), skeleton)
        t_total = len(seq)
        starts = []
        base = min(feats.activation_frame, max(t_total - window, 0))
        for k in range(windows_per_sequence):
            s = base + k * (window // 2)
            if s + window <= t_total:
                starts.append(s)
        if not starts and t_total >= window:
            starts = [t_total - window]
        for s in starts:
            idx = np.arange(s, s + window)
            pose = feats.joints[idx]
            hand_root = np.zeros((window, 2, 3))
            contact_root = np.zeros((window, 2, 3))
            has_contact = np.zeros((window, 2), dtype=bool)
            phase_win = np.zeros((window, PHASE_WINDOW_SIZE))
            target = np.zeros((window, SIGNAL_SIZE))
            for k, i in enumerate(idx):
                fr = seq.frames[i]
                hand_root[k] = fr.root.to_local(feats.hand_world[i])
                for h in range(2):
                    if feats.control_active(i, h):
                        has_contact[k, h] = True
                        contact_root[k, h] = fr.root.to_local(
                            feats.active_contact[i, h]
                        )
                widx = feats.clamp(i + phase_offsets)
                phase_win[k, :TAU] = seq.local_phases[widx, 0]
                phase_win[k, TAU:] = seq.local_phases[widx, 1]
                target[k] = feats.control_signal(i)
            out.append(
                ControlWindow(
                    pose=pose,
                    hand_root=hand_root,
                    contact_root=contact_root,
                    phase_window=phase_win,
                    target=target,
                    has_contact=has_contact,
                )
            )
    return out


def build_contact_dataset(
    sequences: list[SequenceFile], chairs: dict[str, ChairModel]
) -> ContactDataset:
    scenes, pairs = [], []
    for seq in sequences:
        if seq.interaction_type == "locomotion":
            continue
        chair = resolve_chair(chairs, seq)
        scenes.append(encode_chair_centered(chair))
        pairs.append(contact_pair_local(seq.contacts, chair))
    return ContactDataset(np.array(scenes), np.array(pairs))

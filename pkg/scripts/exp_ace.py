"""Desk-scale end-to-end experiment: train planner+pose nets, measure ACE."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from chairmotion.controlnet import ControlNetConfig, train_controlnet
from chairmotion.dataio import SyntheticConfig, generate_synthetic_dataset
from chairmotion.dataio.training import build_control_windows, build_pose_dataset
from chairmotion.kinematics import RootTransform, default_skeleton
from chairmotion.posenet import PoseNetConfig, train_posenet
from chairmotion.runtime import EpisodeConfig, run_episode
from chairmotion.scene import make_chair_set
from chairmotion.scene.parametric import sample_contact_point
from chairmotion.scene.contacts import ContactSpec

t_start = time.time()


def log(msg):
    print(f"[{time.time() - t_start:7.1f}s] {msg}", flush=True)


N_SEQ = int(sys.argv[1]) if len(sys.argv) > 1 else 120
PN_EPOCHS = int(sys.argv[2]) if len(sys.argv) > 2 else 30
CN_EPOCHS = int(sys.argv[3]) if len(sys.argv) > 3 else 40
STRIDE = 2

chairs = make_chair_set(8, seed=1)
registry = {c.id: c for c, _ in chairs}
params_by_id = {c.id: p for c, p in chairs}
skel = default_skeleton()

log(f"generating {N_SEQ} sequences")
seqs = generate_synthetic_dataset(chairs, SyntheticConfig(sequences=N_SEQ, seed=7))
log(f"frames total {sum(len(s) for s in seqs)}")

log("building pose dataset")
pose_data = build_pose_dataset(seqs, registry, stride=STRIDE)
log(f"pose pairs {pose_data.inputs.shape}")
log("building control windows")
cw = build_control_windows(seqs, registry)
log(f"windows {len(cw)}")

pn_cfg = PoseNetConfig(
    encoder_control=(24, 24), encoder_body=(64, 64), encoder_goal=(24, 24),
    encoder_chair=(64, 64), encoder_ego=(32, 32), experts=4, expert_hidden=96,
    gate_hidden=16, epochs=PN_EPOCHS, batch_size=256, lr0=1e-3, lr_min=1e-5,
    val_fraction=0.05, seed=3,
)
cn_cfg = ControlNetConfig(
    encoder_width=48, hidden=96, epochs=CN_EPOCHS, batch_size=16,
    lr0=3e-3, lr_min=1e-5, seed=3, sampling_ramp=(0.4, 0.95), sampling_max=0.5,
)

log("training controlnet")
cn, cn_hist = train_controlnet(cw, cn_cfg)
log(f"cn train {cn_hist['train'][0]:.4f} -> {cn_hist['train'][-1]:.4f} val {cn_hist['val'][-1]:.4f}")

log("training posenet")
pn, pn_hist = train_posenet(pose_data, pn_cfg)
log(f"pn train {pn_hist['train'][0]:.4f} -> {pn_hist['train'][-1]:.4f} val {pn_hist['val'][-1]:.4f}")

log("rollouts")
rng = np.random.default_rng(99)
dists_all = []
per_episode = []
for ep in range(12):
    chair, params = chairs[ep % len(chairs)]
    theta = rng.uniform(-np.pi, np.pi)
    r = rng.uniform(1.6, 2.8)
    start = RootTransform(
        chair.transform.position[0] + r * np.cos(theta),
        chair.transform.position[2] + r * np.sin(theta),
        rng.uniform(-np.pi, np.pi),
        0.95,
    )
    side = ["left", "right", "both"][ep % 3]
    left = right = None
    if side in ("left", "both"):
        left = chair.transform.to_world(sample_contact_point(params, "left", rng))
    if side in ("right", "both"):
        right = chair.transform.to_world(sample_contact_point(params, "right", rng))
    cfg = EpisodeConfig(
        chair_id=chair.id, start=start, contacts=ContactSpec(left, right), duration=16.0
    )
    res = run_episode(pn, cn, chair, cfg)
    rep = res.reports[-1]
    ds = [d for d in rep.min_distance.values() if d is not None]
    dists_all.extend(ds)
    final_root = res.frames[-1].root.position
    goal_d = np.linalg.norm(final_root - (res.config.goal.position if res.config.goal else final_root)) if res.config.goal else -1
    per_episode.append((ep, side, [f"{d*100:.1f}" for d in ds], res.settled_frame, f"{res.mean_step_ms():.1f}ms"))
    log(f"ep {ep} {side}: dists {[f'{d*100:.1f}cm' for d in ds]} settle {res.settled_frame} step {res.mean_step_ms():.1f}ms")

dists = np.array(dists_all)
log(f"ACE {dists.mean()*100:.2f} cm | AP@5 {(dists<0.05).mean():.2f} AP@9 {(dists<0.09).mean():.2f}")

# ablation: zeroed control
log("ablation rollouts (zeroed control)")
import chairmotion.runtime as rt


class ZeroCN:
    def initial_state(self, b=1):
        return cn.initial_state(b)

    def forward_signal(self, pose_vec, guidance, phases, state):
        from chairmotion.controlnet import ControlSignal

        return ControlSignal.zeros(), state


zdists = []
rng = np.random.default_rng(99)
for ep in range(12):
    chair, params = chairs[ep % len(chairs)]
    theta = rng.uniform(-np.pi, np.pi)
    r = rng.uniform(1.6, 2.8)
    start = RootTransform(
        chair.transform.position[0] + r * np.cos(theta),
        chair.transform.position[2] + r * np.sin(theta),
        rng.uniform(-np.pi, np.pi),
        0.95,
    )
    side = ["left", "right", "both"][ep % 3]
    left = right = None
    if side in ("left", "both"):
        left = chair.transform.to_world(sample_contact_point(params, "left", rng))
    if side in ("right", "both"):
        right = chair.transform.to_world(sample_contact_point(params, "right", rng))
    cfg = EpisodeConfig(
        chair_id=chair.id, start=start, contacts=ContactSpec(left, right), duration=16.0
    )
    res = run_episode(pn, ZeroCN(), chair, cfg)
    rep = res.reports[-1]
    zdists.extend([d for d in rep.min_distance.values() if d is not None])
zd = np.array(zdists)
log(f"ablation ACE {zd.mean()*100:.2f} cm (ratio {zd.mean()/dists.mean():.2f}x)")

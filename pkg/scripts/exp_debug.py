"""Single-episode closed-loop debugging with a detailed trace."""

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
from chairmotion.scene.contacts import ContactSpec
from chairmotion.scene.parametric import sample_contact_point

t_start = time.time()


def log(msg):
    print(f"[{time.time() - t_start:7.1f}s] {msg}", flush=True)


N_SEQ = int(sys.argv[1]) if len(sys.argv) > 1 else 120
PN_EPOCHS = int(sys.argv[2]) if len(sys.argv) > 2 else 30
CN_EPOCHS = int(sys.argv[3]) if len(sys.argv) > 3 else 40

chairs = make_chair_set(8, seed=1)
registry = {c.id: c for c, _ in chairs}
skel = default_skeleton()

seqs = generate_synthetic_dataset(chairs, SyntheticConfig(sequences=N_SEQ, seed=7))
pose_data = build_pose_dataset(seqs, registry, stride=2)
cw = build_control_windows(seqs, registry)
log(f"data ready: {pose_data.inputs.shape}, {len(cw)} windows")

pn_cfg = PoseNetConfig(
    encoder_control=(16, 16), encoder_body=(48, 48), encoder_goal=(16, 16),
    encoder_chair=(48, 48), encoder_ego=(24, 24), experts=4, expert_hidden=64,
    gate_hidden=16, epochs=PN_EPOCHS, batch_size=256, lr0=1e-3, lr_min=1e-5,
    val_fraction=0.05, seed=3,
)
cn_cfg = ControlNetConfig(
    encoder_width=32, hidden=64, epochs=CN_EPOCHS, batch_size=16,
    lr0=3e-3, lr_min=1e-5, seed=3,
)
cn, _ = train_controlnet(cw, cn_cfg)
pn, hist = train_posenet(pose_data, pn_cfg)
log(f"trained pn val {hist['val'][-1]:.4f}")

import pickle
with open("/tmp/models.pkl", "wb") as f:
    pickle.dump({"pn": pn, "cn": cn, "chairs": chairs}, f)
log("saved models to /tmp/models.pkl")

rng = np.random.default_rng(99)
chair, params = chairs[0]
theta = rng.uniform(-np.pi, np.pi)
r = 2.0
start = RootTransform(
    chair.transform.position[0] + r * np.cos(theta),
    chair.transform.position[2] + r * np.sin(theta),
    rng.uniform(-np.pi, np.pi),
    0.95,
)
left = chair.transform.to_world(sample_contact_point(params, "left", rng))
cfg = EpisodeConfig(chair_id=chair.id, start=start, contacts=ContactSpec(left, None), duration=16.0)
res = run_episode(pn, cn, chair, cfg)

goal = res.config.goal
lw = skel.index("left_wrist")
print("goal:", None if goal is None else goal.position)
print(f"{'fr':>4} {'dist_goal':>9} {'height':>7} {'phi':>5} {'act':>22} {'activity':>11} {'handd':>7} {'speed':>6}")
prev = None
for i in range(0, res.frame_count, 20):
    fr = res.frames[i]
    d = np.hypot(fr.root.x - goal.position[0], fr.root.z - goal.position[2])
    hd = np.linalg.norm(fr.world_positions()[lw] - left)
    speed = 0.0
    if prev is not None:
        speed = np.hypot(fr.root.x - prev.root.x, fr.root.z - prev.root.z) * 30 / 20
    prev_i = max(i - 20, 0)
    prev = res.frames[prev_i]
    acts = np.round(fr.action_labels, 2)
    print(f"{i:4d} {d:9.3f} {fr.root.height:7.3f} {res.phases[i]:5.2f} {str(acts):>22} {res.activities[i]:>11} {hd:7.3f} {speed*20/30:6.3f}")
rep = res.reports[-1]
print("report:", {k: (None if v is None else round(v * 100, 1)) for k, v in rep.min_distance.items()})

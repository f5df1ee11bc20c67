"""Command line entry points: data generation, training, synthesis, evaluation, serving."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _cmd_make_chairs(args):
    from .scene import ChairRegistry, make_chair_set

    reg = ChairRegistry()
    params = {}
    for chair, p in make_chair_set(args.count, seed=args.seed):
        reg.add(chair)
        params[chair.id] = p.to_json()
    manifest = reg.save(args.out)
    (Path(args.out) / "params.json").write_text(json.dumps(params, indent=2))
    print(f"wrote {args.count} chairs to {manifest}")


def _cmd_generate_data(args):
    from .dataio import SyntheticConfig, generate_synthetic_dataset, save_sequence
    from .scene import ChairRegistry

    reg = ChairRegistry.load(args.chairs)
    params_path = Path(args.chairs) / "params.json"
    from .scene.parametric import ChairParams

    params = {}
    if params_path.exists():
        raw = json.loads(params_path.read_text())
        params = {k: ChairParams(**v) for k, v in raw.items()}
    chairs = [(reg.get(cid), params.get(cid, ChairParams())) for cid in reg.ids()]
    cfg = SyntheticConfig(sequences=args.sequences, seed=args.seed)
    seqs = generate_synthetic_dataset(chairs, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    listing = []
    for i, seq in enumerate(seqs):
        name = f"seq_{i:04d}.jsonl"
        save_sequence(seq, out / name)
        listing.append(
            {"file": name, "type": seq.interaction_type, "chair": seq.chair_id,
             "frames": len(seq)}
        )
    (out / "manifest.json").write_text(
        json.dumps({"version": 1, "sequences": listing}, indent=2)
    )
    print(f"wrote {len(seqs)} sequences to {out}")


def _load_dataset(data_dir, chairs_dir):
    from .dataio import load_sequence
    from .scene import ChairRegistry

    reg = ChairRegistry.load(chairs_dir)
    data_dir = Path(data_dir)
    manifest = json.loads((data_dir / "manifest.json").read_text())
    seqs = [load_sequence(data_dir / e["file"]) for e in manifest["sequences"]]
    return seqs, {cid: reg.get(cid) for cid in reg.ids()}


def _cmd_train(args):
    from .contactnet import ContactNetConfig, train_contactnet
    from .controlnet import ControlNetConfig, train_controlnet
    from .dataio.training import (
        build_contact_dataset,
        build_control_windows,
        build_pose_dataset,
    )
    from .posenet import PoseNetConfig, train_posenet
    from .service import save_models

    seqs, registry = _load_dataset(args.data, args.chairs)
    print(f"loaded {len(seqs)} sequences")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    log = print if args.verbose else None
    if args.scale == "paper":
        pn_cfg = PoseNetConfig()
        cn_cfg = ControlNetConfig()
        ct_cfg = ContactNetConfig()
    else:
        pn_cfg = PoseNetConfig(
            encoder_control=(24, 24), encoder_body=(64, 64), encoder_goal=(24, 24),
            encoder_chair=(64, 64), encoder_ego=(32, 32), experts=4,
            expert_hidden=96, gate_hidden=16, epochs=args.epochs or 80,
            batch_size=256, lr0=1e-3, lr_min=1e-5, val_fraction=0.05,
        )
        cn_cfg = ControlNetConfig(
            encoder_width=48, hidden=96, epochs=args.epochs or 60,
            batch_size=16, lr0=3e-3, lr_min=1e-5,
        )
        ct_cfg = ContactNetConfig(
            scene_encoder=(64, 64, 16), contact_encoder=(16, 16), decoder=(64, 64),
            epochs=120, batch_size=32, lr=1e-3,
        )

    cn = pn = ct = None
    if args.model in ("all", "controlnet"):
        windows = build_control_windows(seqs, registry)
        print(f"controlnet: {len(windows)} windows")
        cn, hist = train_controlnet(windows, cn_cfg, log=log)
        print(f"controlnet loss {hist['train'][0]:.4f} -> {hist['train'][-1]:.4f}")
    if args.model in ("all", "posenet"):
        data = build_pose_dataset(seqs, registry, stride=args.stride)
        print(f"posenet: {len(data.inputs)} pairs")
        pn, hist = train_posenet(data, pn_cfg, log=log)
        print(f"posenet loss {hist['train'][0]:.4f} -> {hist['train'][-1]:.4f}")
    if args.model in ("all", "contactnet"):
        data = build_contact_dataset(seqs, registry)
        print(f"contactnet: {len(data.scene)} examples")
        ct, hist = train_contactnet(data, ct_cfg, log=log)
        print(f"contactnet loss {hist['loss'][0]:.4f} -> {hist['loss'][-1]:.4f}")
    save_models(out, posenet=pn, controlnet=cn, contactnet=ct)
    print(f"checkpoints in {out}")


def _cmd_run_episode(args):
    from .runtime import EpisodeConfig, run_episode, write_episode_jsonl
    from .kinematics.frames import RootTransform
    from .scene import ChairRegistry, ContactSpec
    from .service import EngineState, load_models

    state = EngineState()
    state.registry = ChairRegistry.load(args.chairs)
    load_models(state, args.checkpoints)
    if not state.models_ready():
        sys.exit("missing posenet/controlnet checkpoints")
    chair = state.registry.get(args.chair_id)
    contacts = ContactSpec()
    if args.contact_left:
        contacts = contacts.with_hand("left", np.array(args.contact_left))
    if args.contact_right:
        contacts = contacts.with_hand("right", np.array(args.contact_right))
    cfg = EpisodeConfig(
        chair_id=args.chair_id,
        start=RootTransform(args.start[0], args.start[1], args.start[2], 0.95),
        contacts=contacts,
        duration=args.duration,
        mode="generative" if args.generative else "interactive",
        contact_seed=args.seed,
    )
    result = run_episode(
        state.posenet, state.controlnet, chair, cfg, contactnet=state.contactnet
    )
    write_episode_jsonl(result, args.out)
    print(json.dumps(result.summary_json(), indent=2))


def _cmd_evaluate(args):
    from .kinematics.skeleton import default_skeleton
    from .metrics import evaluate_episodes
    from .runtime import load_episode_jsonl

    paths = sorted(Path(args.episodes).glob("*.jsonl"))
    if not paths:
        sys.exit(f"no .jsonl episodes under {args.episodes}")
    episodes = [load_episode_jsonl(p) for p in paths]
    report = evaluate_episodes(episodes, default_skeleton())
    wanted = set(args.metrics.split(","))
    if "ace" not in wanted:
        report.pop("ace_cm", None)
    if "ap" not in wanted:
        report.pop("ap_at_k", None)
    if "apd" not in wanted:
        report.pop("apd_approach", None)
        report.pop("apd_sit", None)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)


def _cmd_serve(args):
    from .service import serve

    serve(args.host, args.port, checkpoints=args.checkpoints, chairs=args.chairs)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="chairmotion",
        description="Contact-controllable human-chair interaction synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-chairs", help="generate a procedural chair set")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_chairs)

    p = sub.add_parser("generate-data", help="generate the synthetic dataset")
    p.add_argument("--chairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sequences", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_generate_data)

    p = sub.add_parser("train", help="train networks on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--chairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=("all", "controlnet", "posenet", "contactnet"), default="all")
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("run-episode", help="synthesize one episode to JSON lines")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--chairs", required=True)
    p.add_argument("--chair-id", required=True)
    p.add_argument("--start", type=float, nargs=3, metavar=("X", "Z", "YAW"), required=True)
    p.add_argument("--contact-left", type=float, nargs=3)
    p.add_argument("--contact-right", type=float, nargs=3)
    p.add_argument("--duration", type=float, default=16.0)
    p.add_argument("--generative", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="episode.jsonl")
    p.set_defaults(func=_cmd_run_episode)

    p = sub.add_parser("evaluate", help="compute metrics over episode dumps")
    p.add_argument("--episodes", required=True)
    p.add_argument("--metrics", default="ace,ap,apd")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--checkpoints", default=None)
    p.add_argument("--chairs", default=None)
    p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()

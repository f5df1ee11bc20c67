"""HTTP/WebSocket API: chair registry, contact sampling, streamed episodes.

Endpoints:
  GET  /chairs                      registry listing
  POST /chairs                      register an OBJ mesh (JSON {"name", "obj"})
  GET  /chairs/{id}/mesh            OBJ text for the viewer
  POST /contacts/sample             {"chair_id", "n", "seed"} -> contact specs
  GET  /sessions                    live episode-session introspection
  WS   /episodes/stream             EpisodeConfig in, frame stream out

The stream accepts mid-episode messages: {"type": "contact", "contacts":
{...}, "override": bool} chains a new contact goal. Each frame goes out as
one JSON message; the stream ends with a summary. A bounded worker pool caps
concurrent episodes; frames are produced step-by-step in the socket loop, so
the client's consumption rate is the backpressure.
"""

from __future__ import annotations

import asyncio
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel
from starlette.websockets import WebSocket, WebSocketDisconnect

from .contactnet import ContactVAE, sample_contacts
from .controlnet import ControlNetModel
from .kinematics.frames import RootTransform
from .kinematics.skeleton import default_skeleton
from .neural.checkpoint import load_checkpoint, restore_module_params
from .posenet import GoalSpec, PoseNetModel
from .runtime import (
    ChainError,
    EngineContext,
    EpisodeConfig,
    EpisodeResult,
    chain_contacts,
    contacts_reached,
    initial_state,
    synthesis_step,
)
from .scene.chair import ChairModel, ChairRegistry
from .scene.contacts import ContactSpec
from .scene.mesh import ObjParseError, TriangleMesh

MAX_CONCURRENT_EPISODES = 4


@dataclass
class EngineState:
    registry: ChairRegistry = field(default_factory=ChairRegistry)
    posenet: PoseNetModel | None = None
    controlnet: ControlNetModel | None = None
    contactnet: ContactVAE | None = None
    sessions: dict = field(default_factory=dict)
    session_counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def models_ready(self) -> bool:
        return self.posenet is not None and self.controlnet is not None


class ChairUpload(BaseModel):
    name: str
    obj: str
    yaw: float = 0.0
    scale: float = 1.0


class SampleRequest(BaseModel):
    chair_id: str
    n: int = 10
    seed: int | None = None


def load_models(state: EngineState, checkpoint_dir: str | Path) -> None:
    directory = Path(checkpoint_dir)
    pn_path = directory / "posenet.npz"
    cn_path = directory / "controlnet.npz"
    ct_path = directory / "contactnet.npz"
    if pn_path.exists():
        meta, params, norms = load_checkpoint(pn_path)
        model = PoseNetModel.from_meta(meta)
        restore_module_params(model, params)
        model.input_norm = norms["input"]
        model.output_norm = norms["output"]
        state.posenet = model
    if cn_path.exists():
        meta, params, norms = load_checkpoint(cn_path)
        model = ControlNetModel(meta["encoder_width"], meta["hidden"])
        restore_module_params(model, params)
        model.input_norm = norms["input"]
        model.output_norm = norms["output"]
        state.controlnet = model
    if ct_path.exists():
        meta, params, norms = load_checkpoint(ct_path)
        model = ContactVAE.from_meta(meta)
        restore_module_params(model, params)
        model.scene_norm = norms["scene"]
        model.contact_norm = norms["contact"]
        state.contactnet = model


def save_models(
    directory: str | Path,
    posenet: PoseNetModel | None = None,
    controlnet: ControlNetModel | None = None,
    contactnet: ContactVAE | None = None,
) -> None:
    from .neural.checkpoint import save_checkpoint

    directory = Path(directory)
    if posenet is not None:
        save_checkpoint(
            directory / "posenet.npz", posenet.meta(), dict(posenet.parameters()),
            {"input": posenet.input_norm, "output": posenet.output_norm},
        )
    if controlnet is not None:
        save_checkpoint(
            directory / "controlnet.npz", controlnet.meta(), dict(controlnet.parameters()),
            {"input": controlnet.input_norm, "output": controlnet.output_norm},
        )
    if contactnet is not None:
        save_checkpoint(
            directory / "contactnet.npz", contactnet.meta(), dict(contactnet.parameters()),
            {"scene": contactnet.scene_norm, "contact": contactnet.contact_norm},
        )


def _chair_entry(chair: ChairModel) -> dict:
    lo, hi = chair.bounds_local
    return {
        "id": chair.id,
        "transform": chair.transform.to_json(),
        "seat": chair.seat,
        "bounds": [[float(v) for v in lo], [float(v) for v in hi]],
        "triangles": int(len(chair.mesh.faces)),
    }


def _parse_episode_config(msg: dict, state: EngineState) -> tuple[EpisodeConfig, list]:
    chair_id = msg.get("chair_id")
    if chair_id not in state.registry.chairs:
        raise ValueError(f"unknown chair id {chair_id!r}")
    start = msg.get("start", {})
    root = RootTransform(
        float(start.get("x", 0.0)),
        float(start.get("z", 2.0)),
        float(start.get("yaw", 0.0)),
        float(start.get("height", 0.95)),
    )
    contacts = ContactSpec.from_json(msg.get("contacts") or {})
    goal = None
    if msg.get("goal"):
        g = msg["goal"]
        goal = GoalSpec(np.array(g["position"]), float(g["yaw"]), np.array(g["action"]))
    queue = [ContactSpec.from_json(c) for c in msg.get("contact_queue", [])]
    cfg = EpisodeConfig(
        chair_id=chair_id,
        start=root,
        contacts=contacts,
        goal=goal,
        duration=float(msg.get("duration", 16.0)),
        mode=msg.get("mode", "interactive"),
        contact_seed=msg.get("seed"),
        stop_on_settle=bool(msg.get("stop_on_settle", False)),
        fit_hand_trajectories=bool(msg.get("fit_hand_trajectories", False)),
    )
    return cfg, queue


def create_app(state: EngineState | None = None) -> FastAPI:
    state = state or EngineState()
    app = FastAPI(title="chairmotion", version="0.1.0")
    app.state.engine = state
    episode_slots = asyncio.Semaphore(MAX_CONCURRENT_EPISODES)

    @app.get("/chairs")
    def list_chairs():
        return {"chairs": [_chair_entry(state.registry.get(cid)) for cid in state.registry.ids()]}

    @app.post("/chairs", status_code=201)
    def add_chair(upload: ChairUpload):
        try:
            mesh = TriangleMesh.from_obj_text(upload.obj)
        except ObjParseError as e:
            raise HTTPException(
                status_code=422,
                detail={"error": str(e), "line": e.line_number},
            ) from None
        from .scene.chair import ChairTransform

        cid = upload.name
        if cid in state.registry.chairs:
            raise HTTPException(status_code=409, detail=f"chair {cid!r} already exists")
        try:
            chair = ChairModel(
                cid, mesh, ChairTransform(np.zeros(3), upload.yaw, upload.scale)
            )
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None
        with state.lock:
            state.registry.add(chair)
        return _chair_entry(chair)

    @app.get("/chairs/{chair_id}/mesh", response_class=PlainTextResponse)
    def chair_mesh(chair_id: str):
        try:
            chair = state.registry.get(chair_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown chair {chair_id!r}")
        return chair.mesh.to_obj_text(chair_id)

    @app.post("/contacts/sample")
    def contacts_sample(req: SampleRequest):
        if state.contactnet is None:
            raise HTTPException(status_code=503, detail="contact sampler not loaded")
        try:
            chair = state.registry.get(req.chair_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown chair {req.chair_id!r}")
        specs = sample_contacts(state.contactnet, chair, req.n, seed=req.seed)
        return {"contacts": [s.to_json() for s in specs]}

    @app.get("/sessions")
    def sessions():
        with state.lock:
            return {
                "active": len(state.sessions),
                "sessions": [
                    {"id": sid, "frame": info["frame"], "chair_id": info["chair_id"]}
                    for sid, info in state.sessions.items()
                ],
            }

    @app.websocket("/episodes/stream")
    async def episodes_stream(ws: WebSocket):
        await ws.accept()
        if not state.models_ready():
            await ws.send_json({"type": "error", "error": "checkpoints not loaded"})
            await ws.close()
            return
        try:
            first = await ws.receive_json()
            cfg, queue = _parse_episode_config(first, state)
            realtime = bool(first.get("realtime", False))
        except (ValueError, KeyError) as e:
            await ws.send_json({"type": "error", "error": str(e)})
            await ws.close()
            return
        except WebSocketDisconnect:
            return

        chair = state.registry.get(cfg.chair_id)
        contacts = cfg.contacts
        if cfg.mode == "generative":
            if state.contactnet is None:
                await ws.send_json({"type": "error", "error": "contact sampler not loaded"})
                await ws.close()
                return
            specs = sample_contacts(state.contactnet, chair, 1, seed=cfg.contact_seed)
            contacts = specs[0]
        goal = cfg.goal or GoalSpec(
            chair.seat_center_world + np.array([0.0, 0.03, 0.0]),
            chair.facing_yaw_world,
            np.array([0.0, 0.0, 1.0]),
        )
        cfg = EpisodeConfig(**{**cfg.__dict__, "contacts": contacts, "goal": goal})
        ctx = EngineContext(
            state.posenet, state.controlnet, chair, goal, default_skeleton(), cfg
        )

        with state.lock:
            state.session_counter += 1
            sid = state.session_counter
            state.sessions[sid] = {"frame": 0, "chair_id": cfg.chair_id}

        loop = asyncio.get_event_loop()
        try:
            async with episode_slots:
                st = initial_state(ctx)
                st.queue.extend(queue)
                total = int(round(cfg.duration * cfg.fps))
                result = EpisodeResult(
                    frames=[], activities=[], phases=[], controls=[],
                    reports=[], settled_frame=None, step_times=[], config=cfg,
                )
                import time as _time

                t_begin = _time.perf_counter()
                for i in range(total):
                    # poll for chained-contact messages without blocking
                    while True:
                        try:
                            incoming = await asyncio.wait_for(ws.receive_json(), timeout=0.0005)
                        except asyncio.TimeoutError:
                            break
                        if incoming.get("type") == "contact":
                            spec = ContactSpec.from_json(incoming.get("contacts") or {})
                            try:
                                chain_contacts(st, spec, bool(incoming.get("override")))
                                await ws.send_json(
                                    {"type": "contact_accepted", "at_frame": i}
                                )
                            except ChainError as e:
                                await ws.send_json({"type": "error", "error": str(e)})
                        elif incoming.get("type") == "abort":
                            raise WebSocketDisconnect(1000)

                    st, frame = await loop.run_in_executor(None, synthesis_step, st, ctx)
                    result.frames.append(frame)
                    result.activities.append(st.last_activity)
                    result.phases.append(st.phase)
                    result.controls.append(st.last_control_flat.copy())
                    await ws.send_json(result.frame_json(i))
                    with state.lock:
                        state.sessions[sid]["frame"] = i + 1
                    if realtime:
                        lag = t_begin + (i + 1) / cfg.fps - _time.perf_counter()
                        if lag > 0:
                            await asyncio.sleep(lag)
                    if cfg.stop_on_settle and st.settled_frame is not None:
                        break
                from .runtime import _segment_report

                st.reports.append(_segment_report(st, st.frame_index))
                result.reports = st.reports
                result.settled_frame = st.settled_frame
                await ws.send_json(result.summary_json())
                await ws.close()
        except WebSocketDisconnect:
            pass
        finally:
            with state.lock:
                state.sessions.pop(sid, None)

    return app


def serve(
    host: str = "127.0.0.1",
    port: int = 8080,
    checkpoints: str | None = None,
    chairs: str | None = None,
) -> None:
    import uvicorn

    state = EngineState()
    if chairs:
        state.registry = ChairRegistry.load(chairs)
    if checkpoints:
        load_models(state, checkpoints)
    app = create_app(state)
    uvicorn.run(app, host=host, port=port)

import numpy as np
import pytest
from fastapi.testclient import TestClient

from chairmotion.contactnet import ContactDataset, ContactNetConfig, train_contactnet
from chairmotion.controlnet import ControlNetModel, SIGNAL_SIZE
from chairmotion.neural import Normalizer
from chairmotion.posenet import INPUT_DIM, OUTPUT_DIM, PoseNetConfig, PoseNetModel
from chairmotion.scene import ChairRegistry, encode_chair_centered, make_chair_set
from chairmotion.scene.parametric import box_mesh
from chairmotion.service import EngineState, create_app

TOY_PN = PoseNetConfig(
    encoder_control=(8, 8), encoder_body=(12, 12), encoder_goal=(8, 8),
    encoder_chair=(12, 12), encoder_ego=(8, 8), experts=2, expert_hidden=16,
    gate_hidden=8,
)


def untrained_engine(with_contactnet=True):
    """Random-weight models with identity normalizers: protocol-level tests."""
    state = EngineState()
    for chair, _ in make_chair_set(2, seed=3):
        state.registry.add(chair)
    rng = np.random.default_rng(0)
    pn = PoseNetModel(TOY_PN, rng)
    pn.input_norm = Normalizer(np.zeros(INPUT_DIM), np.ones(INPUT_DIM))
    pn.output_norm = Normalizer(np.zeros(OUTPUT_DIM), np.ones(OUTPUT_DIM))
    # keep outputs tiny so rollouts stay finite
    for _, p in pn.parameters():
        p *= 0.01
    cn = ControlNetModel(encoder_width=8, hidden=12, rng=rng)
    cn.input_norm = Normalizer(np.zeros(332), np.ones(332))
    cn.output_norm = Normalizer(np.zeros(SIGNAL_SIZE), np.ones(SIGNAL_SIZE))
    state.posenet = pn
    state.controlnet = cn
    if with_contactnet:
        chair = state.registry.get(state.registry.ids()[0])
        enc = encode_chair_centered(chair)
        rngc = np.random.default_rng(1)
        scenes = np.tile(enc, (12, 1))
        contacts = rngc.normal(scale=0.2, size=(12, 6)) + np.array(
            [0.3, 0.6, 0.0, -0.3, 0.6, 0.0]
        )
        ct, _ = train_contactnet(
            ContactDataset(scenes, contacts),
            ContactNetConfig(
                scene_encoder=(16, 16, 8), contact_encoder=(8, 8), decoder=(16, 16),
                epochs=5, batch_size=6, lr=1e-3,
            ),
        )
        state.contactnet = ct
    return state


@pytest.fixture(scope="module")
def client():
    state = untrained_engine()
    app = create_app(state)
    with TestClient(app) as c:
        yield c


VALID_OBJ = box_mesh([-0.3, 0, -0.3], [0.3, 0.5, 0.3]).to_obj_text("box")


def test_chairs_listing(client):
    r = client.get("/chairs")
    assert r.status_code == 200
    ids = [c["id"] for c in r.json()["chairs"]]
    assert "chair_000" in ids


def test_chair_upload_and_list(client):
    r = client.post("/chairs", json={"name": "uploaded", "obj": VALID_OBJ})
    assert r.status_code == 201
    assert r.json()["id"] == "uploaded"
    ids = [c["id"] for c in client.get("/chairs").json()["chairs"]]
    assert "uploaded" in ids
    # mesh retrievable
    m = client.get("/chairs/uploaded/mesh")
    assert m.status_code == 200
    assert m.text.startswith("o uploaded")


def test_chair_upload_malformed_rejected(client):
    bad = "v 0 0 0\nv 1 0 0\nf 1 2 zzz\n"
    r = client.post("/chairs", json={"name": "bad", "obj": bad})
    assert r.status_code == 422
    assert r.json()["detail"]["line"] == 3


def test_chair_upload_empty_rejected(client):
    r = client.post("/chairs", json={"name": "empty", "obj": "# nothing\n"})
    assert r.status_code == 422


def test_contacts_sample_deterministic(client):
    req = {"chair_id": "chair_000", "n": 5, "seed": 42}
    a = client.post("/contacts/sample", json=req)
    b = client.post("/contacts/sample", json=req)
    assert a.status_code == 200
    assert a.content == b.content
    assert len(a.json()["contacts"]) == 5


def test_contacts_sample_on_surface(client):
    state = client.app.state.engine
    chair = state.registry.get("chair_000")
    r = client.post("/contacts/sample", json={"chair_id": "chair_000", "n": 10, "seed": 1})
    for spec in r.json()["contacts"]:
        for side in ("left", "right"):
            p = spec[side]
            if p is not None:
                assert chair.distance_world(np.array(p)) < 1e-6


def test_contacts_sample_missing_checkpoint_503():
    state = untrained_engine(with_contactnet=False)
    app = create_app(state)
    with TestClient(app) as c:
        r = c.post("/contacts/sample", json={"chair_id": "chair_000", "n": 3})
        assert r.status_code == 503


def test_episode_stream_short(client):
    cfg = {
        "chair_id": "chair_000",
        "start": {"x": 1.5, "z": 1.5, "yaw": 0.0},
        "contacts": {"left": None, "right": None},
        "duration": 1.0,
    }
    with client.websocket_connect("/episodes/stream") as ws:
        ws.send_json(cfg)
        frames = []
        while True:
            msg = ws.receive_json()
            if msg["type"] == "frame":
                frames.append(msg)
            elif msg["type"] == "summary":
                summary = msg
                break
        assert len(frames) == 30  # 1 s at 30 fps
        assert summary["frames"] == 30
        # monotone frame indices with no gaps
        assert [f["index"] for f in frames] == list(range(30))
        # unconstrained hands in the report
        goals = summary["contact_goals"]
        assert goals[-1]["targets"]["left"] is None
        assert goals[-1]["targets"]["right"] is None


def test_episode_unknown_chair_errors(client):
    with client.websocket_connect("/episodes/stream") as ws:
        ws.send_json({"chair_id": "nope"})
        msg = ws.receive_json()
        assert msg["type"] == "error"


def test_episode_chained_contact(client):
    state = client.app.state.engine
    chair = state.registry.get("chair_000")
    v = chair.world_mesh().vertices
    cfg = {
        "chair_id": "chair_000",
        "start": {"x": 0.2, "z": 1.0, "yaw": 0.0},
        "contacts": {"left": [float(x) for x in v[0]], "right": None},
        "duration": 1.0,
        "realtime": True,
    }
    with client.websocket_connect("/episodes/stream") as ws:
        ws.send_json(cfg)
        got_first = False
        chained = False
        summary = None
        while True:
            msg = ws.receive_json()
            if msg["type"] == "frame" and not got_first:
                got_first = True
                ws.send_json(
                    {
                        "type": "contact",
                        "contacts": {"left": [float(x) for x in v[1]], "right": None},
                        "override": True,
                    }
                )
            elif msg["type"] == "contact_accepted":
                chained = True
            elif msg["type"] == "summary":
                summary = msg
                break
        assert chained
        assert len(summary["contact_goals"]) == 2


def test_episode_chain_without_override_errors(client):
    state = client.app.state.engine
    chair = state.registry.get("chair_000")
    v = chair.world_mesh().vertices
    far = [10.0, 0.5, 10.0]  # unreachable: never "reached"
    cfg = {
        "chair_id": "chair_000",
        "start": {"x": 0.2, "z": 1.0, "yaw": 0.0},
        "contacts": {"left": far, "right": None},
        "duration": 0.5,
        "realtime": True,
    }
    with client.websocket_connect("/episodes/stream") as ws:
        ws.send_json(cfg)
        saw_error = False
        frames = 0
        while True:
            msg = ws.receive_json()
            if msg["type"] == "frame":
                frames += 1
                if frames == 1:
                    ws.send_json(
                        {
                            "type": "contact",
                            "contacts": {"left": [float(x) for x in v[2]], "right": None},
                        }
                    )
            elif msg["type"] == "error":
                saw_error = True
            elif msg["type"] == "summary":
                break
        assert saw_error
        assert frames == 15  # episode continued despite the rejected chain


def test_disconnect_frees_session(client):
    cfg = {
        "chair_id": "chair_000",
        "start": {"x": 1.0, "z": 1.0, "yaw": 0.0},
        "duration": 30.0,
    }
    with client.websocket_connect("/episodes/stream") as ws:
        ws.send_json(cfg)
        ws.receive_json()  # one frame
        assert client.get("/sessions").json()["active"] >= 1
        ws.send_json({"type": "abort"})
    import time

    deadline = time.time() + 5.0
    while time.time() < deadline:
        if client.get("/sessions").json()["active"] == 0:
            break
        time.sleep(0.05)
    assert client.get("/sessions").json()["active"] == 0

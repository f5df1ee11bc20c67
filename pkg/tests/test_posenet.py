import numpy as np
import pytest

from chairmotion.controlnet import SIGNAL_SIZE
from chairmotion.kinematics import (
    RootTransform,
    default_skeleton,
    make_frame,
    sample_trajectory_window,
)
from chairmotion.neural import Normalizer, finite_difference_check
from chairmotion.posenet import (
    GoalSpec,
    INPUT_DIM,
    OUTPUT_DIM,
    PoseDataset,
    PoseNetConfig,
    PoseNetModel,
    PoseNetOutput,
    assemble_input,
    gating_feature_indices,
    input_slice,
    layout_checksum,
    posenet_loss,
    renormalize_actions,
    train_posenet,
)
from chairmotion.posing import relaxed_stand_locals
from chairmotion.scene import ChairModel, ChairTransform
from chairmotion.scene.parametric import ChairParams, build_chair_mesh, seat_metadata

TOY = PoseNetConfig(
    encoder_control=(16, 16),
    encoder_body=(32, 32),
    encoder_goal=(16, 16),
    encoder_chair=(32, 32),
    encoder_ego=(16, 16),
    experts=4,
    expert_hidden=32,
    gate_hidden=12,
)


def toy_scene(chair_offset=(0.0, 0.0, 1.5)):
    skel = default_skeleton()
    frame = make_frame(skel, relaxed_stand_locals(skel), RootTransform())
    p = ChairParams()
    chair = ChairModel(
        "c", build_chair_mesh(p), ChairTransform(np.array(chair_offset)), seat_metadata(p)
    )
    window = sample_trajectory_window([frame] * 3, 1)
    goal = GoalSpec(chair.seat_center_world, 0.0, np.array([0.0, 0.0, 1.0]))
    return skel, frame, chair, window, goal


def test_assemble_deterministic():
    _, frame, chair, window, goal = toy_scene()
    c = np.zeros(SIGNAL_SIZE)
    x1 = assemble_input(frame, window, goal, chair, c, 0.3)
    x2 = assemble_input(frame, window, goal, chair, c, 0.3)
    assert np.array_equal(x1, x2)
    assert x1.shape == (INPUT_DIM,)


def test_assemble_control_block_zeroed():
    _, frame, chair, window, goal = toy_scene()
    x = assemble_input(frame, window, goal, chair, np.zeros(SIGNAL_SIZE), 0.0)
    assert np.all(x[input_slice("control")] == 0)


def test_assemble_far_chair_ego_zero_chair_nonzero():
    _, frame, chair, window, goal = toy_scene(chair_offset=(12.0, 0.0, 0.0))
    x = assemble_input(frame, window, goal, chair, np.zeros(SIGNAL_SIZE), 0.0)
    assert np.all(x[input_slice("ego")] == 0)
    occ = x[input_slice("chair")].reshape(-1, 4)[:, 0]
    assert occ.sum() > 0


def test_layout_checksum_stable():
    assert layout_checksum() == layout_checksum()
    model = PoseNetModel(TOY)
    assert model.meta()["layout_checksum"] == layout_checksum()
    with pytest.raises(ValueError):
        PoseNetModel.from_meta({"layout_checksum": "bogus", "config": {}})


def test_gating_indices_pick_phase_goal_velocities():
    idx = gating_feature_indices()
    assert len(idx) == 19
    assert idx[0] == INPUT_DIM - 1  # the global phase is the last input


# -------------------------------------------------------------------- model


def test_forward_shapes_and_gate_distribution():
    rng = np.random.default_rng(0)
    model = PoseNetModel(TOY, rng)
    x = rng.normal(size=(5, INPUT_DIM))
    y = model.forward_norm(x)
    assert y.shape == (5, OUTPUT_DIM)
    w = model.moe.last_gate_weights
    assert np.max(np.abs(w.sum(axis=1) - 1.0)) < 1e-6
    assert np.all(w >= 0)


def test_forward_deterministic():
    rng = np.random.default_rng(1)
    model = PoseNetModel(TOY, rng)
    x = rng.normal(size=(2, INPUT_DIM))
    assert np.array_equal(model.forward_norm(x), model.forward_norm(x))


def test_single_expert_equals_plain_feedforward():
    cfg = PoseNetConfig(
        encoder_control=(8, 8), encoder_body=(8, 8), encoder_goal=(8, 8),
        encoder_chair=(8, 8), encoder_ego=(8, 8), experts=1, expert_hidden=16,
        gate_hidden=8,
    )
    rng = np.random.default_rng(2)
    model = PoseNetModel(cfg, rng)
    x = rng.normal(size=(3, INPUT_DIM))
    y = model.forward_norm(x)
    feats = model._encode(x)
    assert np.max(np.abs(y - model.moe.expert_forward(0, feats))) < 1e-6


def test_model_gradcheck():
    rng = np.random.default_rng(3)
    model = PoseNetModel(TOY, rng)
    x = rng.normal(size=(2, INPUT_DIM))
    t = rng.normal(size=(2, OUTPUT_DIM))

    def loss():
        yp = model.forward_norm(x)
        return posenet_loss(yp, t)[0]

    model.zero_grads()
    y = model.forward_norm(x)
    _, dy = posenet_loss(y, t)
    model.backward_norm(dy)
    err = finite_difference_check(loss, model, model.grad_vector(), probes=100, rng=rng)
    assert err < 1e-4


def test_zero_raw_output_decodes_to_valid_ranges():
    out = PoseNetOutput.decode(np.zeros(OUTPUT_DIM))
    assert out.phase == 0.0
    assert np.all(out.contact_labels == 0.0)
    assert np.allclose(out.future_actions.sum(axis=1), 1.0)


def test_action_renormalization():
    a = renormalize_actions(np.array([[0.2, -0.5, 0.6], [0.0, 0.0, 0.0]]))
    assert np.allclose(a[0], [0.25, 0.0, 0.75])
    assert np.allclose(a[1], [1 / 3, 1 / 3, 1 / 3])
    assert np.all(a >= 0)


# -------------------------------------------------------------------- loss


def test_posenet_loss_values():
    rng = np.random.default_rng(4)
    t = rng.normal(size=(3, OUTPUT_DIM))
    assert posenet_loss(t, t)[0] == 0.0
    loss, _ = posenet_loss(t + 1.0, t)
    assert loss == pytest.approx(1.0, abs=1e-12)
    p = rng.normal(size=(3, OUTPUT_DIM))
    loss, _ = posenet_loss(p, t)
    assert loss == pytest.approx(float(np.mean((p - t) ** 2)), abs=1e-9)


def test_posenet_loss_shape_mismatch():
    with pytest.raises(ValueError):
        posenet_loss(np.zeros((2, OUTPUT_DIM)), np.zeros((3, OUTPUT_DIM)))


# ----------------------------------------------------------------- training


def toy_pose_dataset(n=32, seed=5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, INPUT_DIM))
    w = rng.normal(size=(INPUT_DIM, OUTPUT_DIM)) * 0.05
    y = np.tanh(x @ w)
    return PoseDataset(x, y)


def test_training_memorizes_toy_dataset():
    data = toy_pose_dataset()
    cfg = PoseNetConfig(
        encoder_control=(16, 16), encoder_body=(24, 24), encoder_goal=(16, 16),
        encoder_chair=(24, 24), encoder_ego=(16, 16), experts=2, expert_hidden=32,
        gate_hidden=8, epochs=300, batch_size=8, lr0=5e-3, lr_min=1e-5,
        val_fraction=0.0, seed=6,
    )
    model, history = train_posenet(data, cfg)
    assert history["train"][-1] < 0.05 * history["train"][0]


def test_training_empty_dataset_errors():
    with pytest.raises(ValueError):
        train_posenet(PoseDataset(np.zeros((0, INPUT_DIM)), np.zeros((0, OUTPUT_DIM))))


def test_checkpoint_roundtrip_bit_identical(tmp_path):
    from chairmotion.neural import load_checkpoint, save_checkpoint
    from chairmotion.neural.checkpoint import restore_module_params

    data = toy_pose_dataset(n=16)
    cfg = PoseNetConfig(
        encoder_control=(8, 8), encoder_body=(8, 8), encoder_goal=(8, 8),
        encoder_chair=(8, 8), encoder_ego=(8, 8), experts=2, expert_hidden=16,
        gate_hidden=8, epochs=3, batch_size=8, val_fraction=0.0, seed=7,
    )
    model, _ = train_posenet(data, cfg)
    path = tmp_path / "posenet.npz"
    save_checkpoint(
        path, model.meta(), dict(model.parameters()),
        {"input": model.input_norm, "output": model.output_norm},
    )
    meta, params, norms = load_checkpoint(path)
    model2 = PoseNetModel.from_meta(meta)
    restore_module_params(model2, params)
    model2.input_norm = norms["input"]
    model2.output_norm = norms["output"]
    x = data.inputs[:4]
    assert np.array_equal(model.forward_raw(x), model2.forward_raw(x))


def test_gate_ablation_hurts_on_gated_data():
    # Targets switch between two linear maps based on the global phase,
    # which reaches the model only through the gating input: zeroing the
    # gating features must hurt held-out loss.
    rng = np.random.default_rng(8)
    n = 256
    x = rng.normal(size=(n, INPUT_DIM))
    mode = (x[:, INPUT_DIM - 1] > 0).astype(float)[:, None]
    a = rng.normal(size=(8, OUTPUT_DIM)) * 0.5
    b = rng.normal(size=(8, OUTPUT_DIM)) * 0.5
    base = x[:, :8]
    y = mode * (base @ a) + (1.0 - mode) * (base @ b)
    data = PoseDataset(x, y)
    cfg = PoseNetConfig(
        encoder_control=(8, 8), encoder_body=(12, 12), encoder_goal=(8, 8),
        encoder_chair=(12, 12), encoder_ego=(8, 8), experts=2, expert_hidden=24,
        gate_hidden=8, epochs=60, batch_size=32, lr0=2e-3, lr_min=1e-5,
        val_fraction=0.2, seed=9,
    )
    _, hist_full = train_posenet(data, cfg)
    _, hist_ablate = train_posenet(data, cfg, gate_ablation=True)
    assert hist_ablate["val"][-1] > hist_full["val"][-1]

import numpy as np
import pytest

from chairmotion.neural import (
    Adam,
    DenseNet,
    LSTMCell,
    MixtureOfExperts,
    NonFiniteGradientError,
    Normalizer,
    RecurrentStack,
    cosine_lr,
    finite_difference_check,
    load_checkpoint,
    save_checkpoint,
)
from chairmotion.neural.checkpoint import restore_module_params


# ------------------------------------------------------------ dense network


def test_dense_zero_weights_outputs_bias():
    rng = np.random.default_rng(0)
    net = DenseNet([4, 3], rng)
    net.layers[0].w[...] = 0.0
    net.layers[0].b[...] = np.array([1.0, -2.0, 0.5])
    y = net.forward(rng.normal(size=(5, 4)))
    assert np.allclose(y, np.array([1.0, -2.0, 0.5]))


def test_dense_dim_mismatch_raises():
    net = DenseNet([4, 3], np.random.default_rng(0))
    with pytest.raises(ValueError):
        net.forward(np.zeros((2, 5)))


def test_dense_gradcheck():
    rng = np.random.default_rng(1)
    net = DenseNet([6, 8, 8, 3], rng)
    x = rng.normal(size=(4, 6))

    def loss():
        y = net.forward(x)
        return 0.5 * float(np.sum(y * y))

    net.zero_grads()
    y = net.forward(x)
    net.backward(y)
    err = finite_difference_check(loss, net, net.grad_vector(), probes=100, rng=rng)
    assert err < 1e-4


def test_dense_softmax_gradcheck():
    rng = np.random.default_rng(2)
    net = DenseNet([5, 8, 4], rng, softmax_output=True)
    x = rng.normal(size=(3, 5))
    t = rng.normal(size=(3, 4))

    def loss():
        y = net.forward(x)
        return 0.5 * float(np.sum((y - t) ** 2))

    net.zero_grads()
    y = net.forward(x)
    net.backward(y - t)
    err = finite_difference_check(loss, net, net.grad_vector(), probes=100, rng=rng)
    assert err < 1e-4


def test_dense_input_gradient():
    rng = np.random.default_rng(3)
    net = DenseNet([6, 8, 3], rng)
    x = rng.normal(size=(2, 6))
    net.zero_grads()
    y = net.forward(x)
    dx = net.backward(y)
    # numeric input gradient
    h = 1e-6
    num = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp.flat[i] += h
        up = 0.5 * np.sum(net.forward(xp) ** 2)
        xm = x.copy()
        xm.flat[i] -= h
        dn = 0.5 * np.sum(net.forward(xm) ** 2)
        num.flat[i] = (up - dn) / (2 * h)
    assert np.max(np.abs(num - dx)) < 1e-4


# -------------------------------------------------------------------- LSTM


def test_lstm_gradcheck():
    rng = np.random.default_rng(4)
    cell = LSTMCell(5, 7, rng)
    xs = [rng.normal(size=(3, 5)) for _ in range(4)]

    def run():
        cell.reset_cache()
        state = cell.initial_state(3)
        total = 0.0
        outs = []
        for x in xs:
            h, state = cell.step(x, state, record=True)
            outs.append(h)
            total += 0.5 * float(np.sum(h * h))
        return total, outs

    def loss():
        return run()[0]

    cell.zero_grads()
    _, outs = run()
    cell.backward_sequence(outs)
    err = finite_difference_check(loss, cell, cell.grad_vector(), probes=100, rng=rng)
    assert err < 1e-4


def test_stack_gradcheck():
    rng = np.random.default_rng(5)
    stack = RecurrentStack(4, hidden=6, layers=2, rng=rng)
    xs = [rng.normal(size=(2, 4)) for _ in range(3)]

    def run():
        outs, _ = stack.forward_sequence(xs)
        return sum(0.5 * float(np.sum(h * h)) for h in outs), outs

    def loss():
        return run()[0]

    stack.zero_grads()
    _, outs = run()
    stack.backward_sequence(list(outs))
    err = finite_difference_check(loss, stack, stack.grad_vector(), probes=100, rng=rng)
    assert err < 1e-4


def test_stack_length_one_equals_single_step():
    rng = np.random.default_rng(6)
    stack = RecurrentStack(4, hidden=6, layers=2, rng=rng)
    x = rng.normal(size=(2, 4))
    outs, _ = stack.forward_sequence([x])
    h_step, _ = stack.step(x, stack.initial_state(2))
    assert np.allclose(outs[0], h_step)


def test_stack_state_reset_between_sequences():
    rng = np.random.default_rng(7)
    stack = RecurrentStack(3, hidden=5, layers=2, rng=rng)
    xs = [rng.normal(size=(1, 3)) for _ in range(3)]
    outs1, _ = stack.forward_sequence(xs)
    outs2, _ = stack.forward_sequence(xs)
    assert np.allclose(outs1[-1], outs2[-1])


# --------------------------------------------------------------------- MoE


def make_moe(rng, k=4):
    return MixtureOfExperts(
        gate_in=3, in_dim=5, out_dim=4, experts=k, hidden=8, gate_hidden=6, rng=rng
    )


def test_moe_gate_weights_form_distribution():
    rng = np.random.default_rng(8)
    moe = make_moe(rng)
    moe.forward(rng.normal(size=(6, 3)), rng.normal(size=(6, 5)))
    w = moe.last_gate_weights
    assert np.all(w >= 0)
    assert np.max(np.abs(w.sum(axis=1) - 1.0)) < 1e-6


def test_moe_single_expert_equals_plain_network():
    rng = np.random.default_rng(9)
    moe = make_moe(rng, k=1)
    gx = rng.normal(size=(4, 3))
    x = rng.normal(size=(4, 5))
    y = moe.forward(gx, x)
    assert np.allclose(y, moe.expert_forward(0, x))


def test_moe_one_hot_gating_selects_expert():
    rng = np.random.default_rng(10)
    moe = make_moe(rng, k=4)
    x = rng.normal(size=(3, 5))
    # force the gating output one-hot on expert 2 via biases
    moe.gating.layers[-1].w[...] = 0.0
    moe.gating.layers[-1].b[...] = np.array([-1e3, -1e3, 1e3, -1e3])
    y = moe.forward(rng.normal(size=(3, 3)), x)
    assert np.allclose(y, moe.expert_forward(2, x), atol=1e-9)


def test_moe_blend_parameters_is_convex_combination():
    rng = np.random.default_rng(11)
    moe = make_moe(rng, k=3)
    w = np.array([0.2, 0.5, 0.3])
    blended = moe.blend_parameters(w)
    manual = []
    for li in range(3):
        manual.append(sum(w[k] * moe.w[li][k] for k in range(3)).ravel())
        manual.append(sum(w[k] * moe.b[li][k] for k in range(3)).ravel())
    assert np.allclose(blended, np.concatenate(manual), atol=1e-12)


def test_moe_gradcheck():
    rng = np.random.default_rng(12)
    moe = make_moe(rng)
    gx = rng.normal(size=(4, 3))
    x = rng.normal(size=(4, 5))

    def loss():
        y = moe.forward(gx, x)
        return 0.5 * float(np.sum(y * y))

    moe.zero_grads()
    y = moe.forward(gx, x)
    moe.backward(y)
    err = finite_difference_check(loss, moe, moe.grad_vector(), probes=120, rng=rng)
    assert err < 1e-4


# -------------------------------------------------------------------- optim


def test_adam_zero_gradient_keeps_params():
    rng = np.random.default_rng(13)
    net = DenseNet([3, 3], rng)
    before = net.param_vector()
    net.zero_grads()
    Adam(net).step(1e-2)
    assert np.array_equal(net.param_vector(), before)


def test_adam_constant_gradient_matches_reference_trace():
    # scalar reference implementation of Adam, run side by side
    rng = np.random.default_rng(14)
    net = DenseNet([1, 1], rng)
    g = 0.37
    lr = 1e-2
    m = v = 0.0
    ref_w = float(net.layers[0].w[0, 0])
    opt = Adam(net)
    for t in range(1, 51):
        net.zero_grads()
        net.layers[0].dw[...] = g
        net.layers[0].db[...] = 0.0
        opt.step(lr)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref_w -= lr * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert abs(float(net.layers[0].w[0, 0]) - ref_w) < 1e-12


def test_adam_quadratic_bowl_converges():
    rng = np.random.default_rng(15)
    net = DenseNet([1, 2], rng)
    target = np.array([3.0, -1.5])
    opt = Adam(net)
    x = np.ones((1, 1))

    def loss_val():
        return float(np.sum((net.forward(x) - target) ** 2))

    first = loss_val()
    for _ in range(500):
        net.zero_grads()
        y = net.forward(x)
        net.backward(2.0 * (y - target))
        opt.step(1e-2)
    assert loss_val() < 0.01 * first


def test_adam_rejects_nonfinite_gradient():
    net = DenseNet([2, 2], np.random.default_rng(16))
    net.zero_grads()
    net.layers[0].dw[0, 0] = np.nan
    with pytest.raises(NonFiniteGradientError) as e:
        Adam(net).step(1e-3)
    assert "net.l0.w" in str(e.value)


def test_cosine_lr_endpoints_and_midpoint():
    assert cosine_lr(0, 150, 1e-3, 5e-6) == pytest.approx(1e-3, abs=1e-12)
    assert cosine_lr(150, 150, 1e-3, 5e-6) == pytest.approx(5e-6, abs=1e-9)
    assert cosine_lr(75, 150, 1e-3, 5e-6) == pytest.approx((1e-3 + 5e-6) / 2, abs=1e-12)
    lrs = [cosine_lr(e, 150, 1e-3, 5e-6) for e in range(151)]
    assert all(b <= a + 1e-15 for a, b in zip(lrs, lrs[1:]))


def test_memorization_small_dataset():
    # 16 samples, 300 epochs: loss collapses below 1% of the start
    rng = np.random.default_rng(17)
    net = DenseNet([4, 32, 32, 2], rng)
    x = rng.normal(size=(16, 4))
    t = rng.normal(size=(16, 2))
    opt = Adam(net)
    first = None
    for epoch in range(300):
        net.zero_grads()
        y = net.forward(x)
        loss = float(np.mean((y - t) ** 2))
        if first is None:
            first = loss
        net.backward(2.0 * (y - t) / y.size)
        opt.step(cosine_lr(epoch, 300, 1e-2, 1e-4))
    y = net.forward(x)
    assert float(np.mean((y - t) ** 2)) < 0.01 * first


# -------------------------------------------------------- checkpoint / norm


def test_checkpoint_bit_exact_roundtrip(tmp_path):
    rng = np.random.default_rng(18)
    net = DenseNet([5, 7, 3], rng)
    norm = Normalizer.fit(rng.normal(size=(50, 5)))
    path = tmp_path / "model.npz"
    save_checkpoint(
        path,
        {"kind": "test", "dims": [5, 7, 3]},
        dict(net.parameters()),
        {"input": norm},
    )
    meta, params, norms = load_checkpoint(path)
    assert meta["kind"] == "test"
    net2 = DenseNet([5, 7, 3], np.random.default_rng(99))
    restore_module_params(net2, params)
    x = rng.normal(size=(4, 5))
    assert np.array_equal(net.forward(x), net2.forward(x))
    assert np.array_equal(norms["input"].mean, norm.mean)


def test_checkpoint_missing_file(tmp_path):
    from chairmotion.neural import CheckpointError

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.npz")


def test_normalizer_roundtrip():
    rng = np.random.default_rng(19)
    data = rng.normal(size=(100, 6)) * np.array([1, 2, 3, 4, 5, 0.0]) + 1.0
    norm = Normalizer.fit(data)
    assert norm.std[5] == 1.0  # zero-variance guard
    x = rng.normal(size=(10, 6))
    assert np.max(np.abs(norm.invert(norm.apply(x)) - x)) < 1e-12

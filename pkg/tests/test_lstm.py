import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metamorph import faults
from metamorph.errors import ShapeMismatch
from metamorph.lstm import (backprop, backward, forward, init_params, max_relative_error, mse,
                            numeric_gradients)


def reference_step(x, h, c, p):
    """Straight-line single-sample LSTM step written gate by gate."""
    sig = lambda z: 1 / (1 + np.exp(-z))
    out = {}
    for name in ("input", "forget", "cell", "output"):
        W, b = p.gate(name)
        out[name] = x * W[0] + h @ W[1:] + b
    i, f, o = sig(out["input"]), sig(out["forget"]), sig(out["output"])
    g = np.tanh(out["cell"])
    c = f * c + i * g
    return o * np.tanh(c), c


def test_forward_matches_gate_by_gate_reference():
    rng = np.random.default_rng(0)
    p = init_params(5, 3, rng)
    window = rng.uniform(size=7)
    h = c = np.zeros(5)
    for x in window:
        h, c = reference_step(x, h, c, p)
    want = h @ p.W_out + p.b_out
    got, _ = forward(p, window)
    assert np.allclose(got, want, atol=1e-14)


@given(st.integers(1, 6), st.integers(1, 9), st.integers(1, 4), st.integers(1, 3))
def test_shapes(H, T, B, h):
    p = init_params(H, h, 0)
    assert p.W.shape == (1 + H, 4 * H) and p.W_out.shape == (H, h)
    pred, cache = forward(p, np.zeros((B, T)))
    assert pred.shape == (B, h)
    grads, dX = backprop(p, cache, np.ones_like(pred))
    assert dX.shape == (B, T)
    assert all(g.shape == a.shape for g, a in zip(grads.arrays(), p.arrays()))
    single, _ = forward(p, np.zeros(T))
    assert single.shape == (h,)


def test_batch_rows_are_independent():
    rng = np.random.default_rng(1)
    p = init_params(4, 2, rng)
    X = rng.uniform(size=(3, 6))
    batch, _ = forward(p, X)
    for row, pred in zip(X, batch):
        assert np.allclose(forward(p, row)[0], pred, atol=1e-15)


def test_window_length_checked():
    with pytest.raises(ShapeMismatch):
        forward(init_params(2, 1, 0), np.zeros(4), time_steps=5)
    with pytest.raises(ShapeMismatch):
        forward(init_params(2, 1, 0), np.zeros((2, 2, 2)))


def test_init_is_seeded_and_forget_bias_is_one():
    a, b = init_params(3, 2, 7), init_params(3, 2, 7)
    assert a.bit_equal(b)
    assert not a.bit_equal(init_params(3, 2, 8))
    assert np.all(a.gate("forget")[1] == 1.0)
    with faults.injected("forget-bias-zero"):
        assert np.all(init_params(3, 2, 7).gate("forget")[1] == 0.0)


@pytest.mark.parametrize("case", range(8))
def test_parameter_gradients_match_finite_differences(case):
    rng = np.random.default_rng(case)
    p = init_params(int(rng.integers(1, 5)), int(rng.integers(1, 3)), rng)
    p.b += rng.normal(0, 0.5, p.b.shape)
    X = rng.uniform(size=(int(rng.integers(1, 4)), int(rng.integers(1, 6))))
    Y = rng.uniform(size=(X.shape[0], p.horizon))
    _, cache = forward(p, X)
    assert max_relative_error(backward(p, cache, Y), numeric_gradients(p, X, Y)) < 1e-4


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    p = init_params(4, 2, rng)
    x = rng.uniform(size=6)
    pred, cache = forward(p, x)
    d = np.array([1.0, 0.0])
    _, dx = backprop(p, cache, d)
    eps = 1e-6
    for t in range(6):
        e = np.zeros(6)
        e[t] = eps
        num = (forward(p, x + e)[0][0] - forward(p, x - e)[0][0]) / (2 * eps)
        assert dx[t] == pytest.approx(num, rel=1e-6, abs=1e-10)


def test_loss_scale_is_linear():
    rng = np.random.default_rng(4)
    p = init_params(3, 1, rng)
    X, Y = rng.uniform(size=(2, 4)), rng.uniform(size=(2, 1))
    _, cache = forward(p, X)
    g1, g3 = backward(p, cache, Y), backward(p, cache, Y, loss_scale=3.0)
    assert all(np.allclose(3 * a, b) for a, b in zip(g1.arrays(), g3.arrays()))


def test_mse():
    assert mse([1.0, 3.0], [1.0, 1.0]) == 2.0


def test_params_helpers():
    p = init_params(2, 1, 0)
    q = p.copy()
    q.W[0, 0] += 1
    assert not p.bit_equal(q)
    assert p.scaled(2.0).norm() == pytest.approx(2 * p.norm())
    assert p.all_finite()

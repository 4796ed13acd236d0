"""Single-layer LSTM with a linear head, forward pass and hand-written BPTT.

Gate blocks in ``W``/``b`` are ordered input, forget, cell candidate, output.
Row 0 of ``W`` holds the input weights, rows 1..H the recurrent weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import faults
from .errors import ShapeMismatch

GATES = ("input", "forget", "cell", "output")


@dataclass
class LstmParams:
    W: np.ndarray  # (1 + H, 4H)
    b: np.ndarray  # (4H,)
    W_out: np.ndarray  # (H, horizon)
    b_out: np.ndarray  # (horizon,)

    @property
    def hidden_size(self) -> int:
        return self.W_out.shape[0]

    @property
    def horizon(self) -> int:
        return self.W_out.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(weights over [input; hidden], bias) for one gate."""
        H = self.hidden_size
        k = GATES.index(name)
        return self.W[:, k * H:(k + 1) * H], self.b[k * H:(k + 1) * H]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.W, self.b, self.W_out, self.b_out)

    def copy(self) -> "LstmParams":
        return LstmParams(*(a.copy() for a in self.arrays()))

    def scaled(self, s: float) -> "LstmParams":
        return LstmParams(*(a * s for a in self.arrays()))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(a * a) for a in self.arrays())))

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())

    def bit_equal(self, other: "LstmParams") -> bool:
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )


def init_params(hidden_size: int, horizon: int, seed: int | np.random.Generator) -> LstmParams:
    """Uniform init in +-1/sqrt(fan_in); forget-gate bias starts at 1."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    H = hidden_size
    a = 1.0 / np.sqrt(1 + H)
    W = rng.uniform(-a, a, size=(1 + H, 4 * H))
    b = np.zeros(4 * H)
    if not faults.active("forget-bias-zero"):
        b[H:2 * H] = 1.0
    a_out = 1.0 / np.sqrt(H)
    W_out = rng.uniform(-a_out, a_out, size=(H, horizon))
    b_out = np.zeros(horizon)
    return LstmParams(W, b, W_out, b_out)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class Cache:
    X: np.ndarray  # (B, T)
    h_prev: np.ndarray  # (T, B, H)
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray
    h_last: np.ndarray  # (B, H)
    pred: np.ndarray  # (B, horizon)
    squeeze: bool


def forward(params: LstmParams, windows, time_steps: int | None = None):
    """Run the recurrence over each window and project the last hidden state.

    ``windows`` is (T,) or (B, T). Returns (forecast, cache); the forecast has
    shape (horizon,) or (B, horizon) to match.
    """
    X = np.asarray(windows, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[None, :]
    if X.ndim != 2 or (time_steps is not None and X.shape[1] != time_steps):
        raise ShapeMismatch(f"expected window length {time_steps}, got shape {np.shape(windows)}")
    B, T = X.shape
    H = params.hidden_size
    Wx, Wh = params.W[0], params.W[1:]
    shape = (T, B, H)
    hp, cp = np.empty(shape), np.empty(shape)
    ig, fg, gg, og, tc = (np.empty(shape) for _ in range(5))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        hp[t], cp[t] = h, c
        z = np.outer(X[:, t], Wx) + h @ Wh + params.b
        i = ig[t] = _sigmoid(z[:, :H])
        f = fg[t] = _sigmoid(z[:, H:2 * H])
        g = gg[t] = np.tanh(z[:, 2 * H:3 * H])
        o = og[t] = _sigmoid(z[:, 3 * H:])
        c = f * c + i * g
        tc[t] = np.tanh(c)
        h = o * tc[t]
    pred = h @ params.W_out + params.b_out
    cache = Cache(X, hp, cp, ig, fg, gg, og, tc, h, pred, squeeze)
    return (pred[0] if squeeze else pred), cache


def backprop(params: LstmParams, cache: Cache, d_pred) -> tuple[LstmParams, np.ndarray]:
    """Backpropagate an output gradient through time.

    Returns (parameter gradients, gradient with respect to the input windows).
    """
    d_pred = np.asarray(d_pred, dtype=np.float64).reshape(cache.pred.shape)
    X = cache.X
    T = X.shape[1]
    H = params.hidden_size
    Wx, Wh = params.W[0], params.W[1:]

    dW_out = cache.h_last.T @ d_pred
    db_out = d_pred.sum(axis=0)
    dWx = np.zeros(4 * H)
    dWh = np.zeros((H, 4 * H))
    db = np.zeros(4 * H)
    dX = np.empty_like(X)
    dh = d_pred @ params.W_out.T
    dc = np.zeros_like(dh)
    dz = np.empty((X.shape[0], 4 * H))
    for t in reversed(range(T)):
        i, f, g, o, tc = cache.i[t], cache.f[t], cache.g[t], cache.o[t], cache.tanh_c[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cache.c_prev[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dWx += X[:, t] @ dz
        dWh += cache.h_prev[t].T @ dz
        db += dz.sum(axis=0)
        dX[:, t] = dz @ Wx
        dh = dz @ Wh.T
        dc = dc * f
    if faults.active("input-grad-sign"):
        dX = -dX
    dW = np.vstack([dWx[None, :], dWh])
    grads = LstmParams(dW, db, dW_out, db_out)
    return grads, (dX[0] if cache.squeeze else dX)


def mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    return float(np.mean((pred - np.asarray(target, dtype=np.float64)) ** 2))


def backward(params: LstmParams, cache: Cache, target, loss_scale: float = 1.0) -> LstmParams:
    """Gradients of ``loss_scale * mse(forecast, target)`` with respect to all parameters."""
    pred = cache.pred
    target = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    d_pred = loss_scale * 2.0 * (pred - target) / pred.size
    grads, _ = backprop(params, cache, d_pred)
    return grads


def numeric_gradients(params: LstmParams, windows, target, eps: float = 1e-5) -> LstmParams:
    """Central finite differences of mse(forward(params, windows), target), one coordinate at a time."""
    out = []
    for a in params.arrays():
        g = np.empty_like(a)
        for idx in np.ndindex(a.shape):
            keep = a[idx]
            a[idx] = keep + eps
            up = mse(forward(params, windows)[0], target)
            a[idx] = keep - eps
            down = mse(forward(params, windows)[0], target)
            a[idx] = keep
            g[idx] = (up - down) / (2 * eps)
        out.append(g)
    return LstmParams(*out)


def max_relative_error(analytic: LstmParams, numeric: LstmParams, floor: float = 1e-8) -> float:
    """max |a - n| / max(|a|, |n|, floor) over every coordinate."""
    worst = 0.0
    for a, n in zip(analytic.arrays(), numeric.arrays()):
        worst = max(worst, float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor))))
    return worst

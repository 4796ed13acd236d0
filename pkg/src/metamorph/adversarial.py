"""Gradient search for nearby input windows whose forecast doubles.

The perturbed window is parameterised as the square of an auxiliary variable so
it stays non-negative; the auxiliary starts at sqrt(source) so the search
begins exactly at the source window. Total loss is the squared input distance
plus the squared gap between the forecast and twice the source forecast,
minimised with Adam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveWindow
from .forecaster import TrainConfig, TrainedModel, train
from .lstm import LstmParams, backprop, forward
from .series import TimeSeries

DEFAULT_STEPS = 200
MAX_RELATIVE_DISTANCE = 0.1
RATIO_BAND = (1.8, 2.2)


@dataclass(frozen=True)
class AdversarialResult:
    source: np.ndarray
    perturbed: np.ndarray
    y_s: float
    y_p: float
    distance: float  # squared L2 distance between source and perturbed window
    loss_trace: tuple[float, ...]
    success: bool

    @property
    def relative_distance(self) -> float:
        norm = float(np.linalg.norm(self.source))
        return float(np.sqrt(self.distance)) / norm if norm > 0 else float("inf")

    @property
    def ratio(self) -> float:
        return self.y_p / self.y_s if self.y_s != 0 else float("nan")

    def to_dict(self) -> dict:
        return {
            "source": self.source.tolist(),
            "perturbed": self.perturbed.tolist(),
            "y_s": self.y_s,
            "y_p": self.y_p,
            "distance": self.distance,
            "relative_distance": self.relative_distance,
            "loss_trace": list(self.loss_trace),
            "success": self.success,
        }


def _perturbed(aux, offset):
    return np.maximum(aux * aux + offset, 0.0)


def _loss_and_grad(params: LstmParams, x_s, aux, offset, target, forecast_weight):
    x_p = _perturbed(aux, offset)
    pred, cache = forward(params, x_p)
    y_p = float(pred[0])
    gap = target - y_p
    loss = float(np.sum((x_s - x_p) ** 2) + forecast_weight * gap * gap)
    d_pred = np.zeros_like(pred)
    d_pred[0] = -2.0 * forecast_weight * gap
    _, d_xp = backprop(params, cache, d_pred)
    d_xp = d_xp - 2.0 * (x_s - x_p)
    return loss, y_p, x_p, d_xp * 2.0 * aux


def search(
    params: LstmParams,
    window,
    steps: int = DEFAULT_STEPS,
    learning_rate: float = 0.01,
    forecast_weight: float = 1.0,
    ratio: float = 2.0,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> AdversarialResult:
    """Run the search from one scaled (non-negative) window for ``steps`` Adam steps."""
    x_s = np.asarray(window, dtype=np.float64)
    if (x_s < 0).any() or not np.isfinite(x_s).all():
        raise NonPositiveWindow("source window must be finite and non-negative")
    y_s = float(forward(params, x_s)[0][0])
    target = ratio * y_s
    aux = np.sqrt(x_s)
    # sqrt(x)**2 can miss x by an ulp; this fixed offset makes the start exactly x_s
    offset = x_s - aux * aux
    m = np.zeros_like(aux)
    v = np.zeros_like(aux)
    b1, b2 = betas
    trace = []
    for t in range(1, steps + 1):
        loss, _, _, g = _loss_and_grad(params, x_s, aux, offset, target, forecast_weight)
        trace.append(loss)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        aux = aux - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    loss, y_p, x_p, _ = _loss_and_grad(params, x_s, aux, offset, target, forecast_weight)
    trace.append(loss)
    distance = float(np.sum((x_s - x_p) ** 2))
    res = AdversarialResult(x_s, x_p, y_s, y_p, distance, tuple(trace), False)
    lo, hi = RATIO_BAND
    ok = res.relative_distance < MAX_RELATIVE_DISTANCE and y_s != 0 and lo <= res.ratio <= hi
    return AdversarialResult(x_s, x_p, y_s, y_p, distance, tuple(trace), bool(ok))


def validation_windows(model: TrainedModel, val, count: int = 10) -> np.ndarray:
    """Up to ``count`` evenly spaced scaled validation windows with no negative entries."""
    t = model.config.time_steps
    scaled = model.normalizer.normalize(np.asarray(getattr(val, "values", val), dtype=np.float64))
    n = len(scaled) - t + 1
    if n < 1:
        raise NonPositiveWindow("validation series shorter than one window")
    starts = np.unique(np.linspace(0, n - 1, num=min(count, n)).astype(int))
    windows = np.array([scaled[s:s + t] for s in starts])
    keep = (windows >= 0).all(axis=1)
    if not keep.any():
        raise NonPositiveWindow("every validation window has values below the training minimum")
    return windows[keep]


def input_gain(params: LstmParams, window) -> float:
    """L2 norm of the gradient of the first forecast step with respect to the window."""
    pred, cache = forward(params, np.asarray(window, dtype=np.float64))
    d_pred = np.zeros_like(pred)
    d_pred[0] = 1.0
    return float(np.linalg.norm(backprop(params, cache, d_pred)[1]))


@dataclass(frozen=True)
class FragileFixture:
    model: TrainedModel
    series: TimeSeries  # the flat series the windows are cut from
    windows: np.ndarray
    gain: float


def fragile_fixture(train_series, seed: int = 0, gain: float = 5.0, hidden_size: int = 64,
                    level: float = 110.0, noise: float = 0.5, n_windows: int = 10) -> FragileFixture:
    """A deliberately over-sensitive forecaster together with quiet input windows.

    A wide network is trained for one epoch, then its output head is scaled so the
    median input gain on the windows equals ``gain`` and its bias is reset so the
    forecast at the average window equals that window's level. The windows come
    from a flat series (``level`` plus small Gaussian noise), where a gain of a few
    units is enough for a small nudge to double the forecast.
    """
    model = train(train_series, TrainConfig(epochs=1, hidden_size=hidden_size, seed=seed))
    rng = np.random.default_rng([seed, 2])
    flat = TimeSeries.from_values(level + rng.normal(0.0, noise, 6 * model.config.time_steps))
    windows = validation_windows(model, flat, n_windows)
    base = float(np.median([input_gain(model.params, w) for w in windows]))
    scale = gain / base
    _, cache = forward(model.params, windows)
    h_bar = cache.h_last.mean(axis=0)
    p = model.params.copy()
    p.W_out = p.W_out * scale
    p.b_out = np.full_like(p.b_out, windows.mean()) - h_bar @ p.W_out
    fragile = TrainedModel(p, model.normalizer, model.config, model.final_train_loss, model.n_train_sequences)
    return FragileFixture(fragile, flat, windows, float(np.median([input_gain(p, w) for w in windows])))

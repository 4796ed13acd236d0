"""Reference LSTM forecaster: seeded mini-batch SGD on min-max scaled windows."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from . import faults
from .errors import InsufficientData
from .lstm import LstmParams, backward, forward, init_params, mse
from .series import Normalizer, TimeSeries, fit_normalizer, make_sequences


@dataclass(frozen=True)
class TrainConfig:
    time_steps: int = 10
    horizon: int = 2
    batch_size: int = 16
    hidden_size: int = 32
    epochs: int = 200
    learning_rate: float = 0.05
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        for name in ("time_steps", "horizon", "batch_size", "hidden_size", "epochs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.learning_rate > 0 or not self.clip_norm > 0:
            raise ValueError("learning_rate and clip_norm must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class TrainedModel:
    params: LstmParams
    normalizer: Normalizer
    config: TrainConfig
    final_train_loss: float
    n_train_sequences: int  # windows consumed per epoch

    def predict(self, window) -> np.ndarray:
        """Denormalized forecast for one raw (unscaled) window."""
        pred, _ = forward(self.params, self.normalizer.normalize(window), self.config.time_steps)
        return self.normalizer.denormalize(pred)


@dataclass(frozen=True)
class EvalResult:
    validation_loss: float
    first_forecast: np.ndarray
    n_windows: int


def _clip(grads: LstmParams, max_norm: float) -> LstmParams:
    norm = grads.norm()
    if norm > max_norm:
        return grads.scaled(max_norm / norm)
    return grads


def train(series: TimeSeries, config: TrainConfig = TrainConfig()) -> TrainedModel:
    if series.has_missing:
        raise ValueError("training series has missing cells")
    normalizer = fit_normalizer(series)
    ds = make_sequences(normalizer.normalize(series.values), config.time_steps, config.horizon)
    init_rng = np.random.default_rng([config.seed, 0])
    shuffle_rng = np.random.default_rng([config.seed, 1])
    params = init_params(config.hidden_size, config.horizon, init_rng)
    arrays = params.arrays()
    N, B = len(ds), config.batch_size
    seen = 0
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(N)
        seen = 0
        for start in range(0, N, B):
            idx = perm[start:start + B]
            if len(idx) < B and faults.active("drop-last-short-batch"):
                continue
            _, cache = forward(params, ds.inputs[idx])
            grads = backward(params, cache, ds.targets[idx])
            if not faults.active("skip-grad-clip"):
                grads = _clip(grads, config.clip_norm)
            for a, g in zip(arrays, grads.arrays()):
                a -= config.learning_rate * g
            seen += len(idx)
    pred, _ = forward(params, ds.inputs)
    return TrainedModel(params, normalizer, config, mse(pred, ds.targets), seen)


def evaluate(model: TrainedModel, val: TimeSeries) -> EvalResult:
    """MSE over every validation window (scaled space) plus the first forecast in original units."""
    if val.has_missing:
        raise ValueError("validation series has missing cells")
    normalizer = model.normalizer
    if faults.active("normalizer-fit-on-validation"):
        normalizer = fit_normalizer(val)
    cfg = model.config
    ds = make_sequences(normalizer.normalize(val.values), cfg.time_steps, cfg.horizon)
    inputs, targets = ds.inputs, ds.targets
    if faults.active("eval-window-off-by-one"):
        inputs, targets = inputs[:-1], targets[:-1]
        if len(inputs) == 0:
            raise InsufficientData("no validation windows")
    pred, _ = forward(model.params, inputs)
    return EvalResult(mse(pred, targets), normalizer.denormalize(pred[0]), len(inputs))


def save_model(model: TrainedModel, dest) -> None:
    """Write an .npz holding config (JSON), normalizer bounds, parameters and training stats."""
    meta = {
        "format": "metamorph-lstm/1",
        "config": model.config.to_dict(),
        "n_train_sequences": model.n_train_sequences,
    }
    arrays = dict(zip(("W", "b", "W_out", "b_out"), model.params.arrays()))
    np.savez(
        dest,
        meta=np.array(json.dumps(meta, sort_keys=True)),
        normalizer=np.array([model.normalizer.min_x, model.normalizer.max_x]),
        final_train_loss=np.array(model.final_train_loss),
        **arrays,
    )


def load_model(source) -> TrainedModel:
    if isinstance(source, (str, os.PathLike)) and not os.path.exists(source):
        raise FileNotFoundError(source)
    with np.load(source, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        params = LstmParams(z["W"].copy(), z["b"].copy(), z["W_out"].copy(), z["b_out"].copy())
        lo, hi = z["normalizer"]
        loss = float(z["final_train_loss"])
    return TrainedModel(
        params, Normalizer(float(lo), float(hi)), TrainConfig(**meta["config"]), loss, meta["n_train_sequences"]
    )

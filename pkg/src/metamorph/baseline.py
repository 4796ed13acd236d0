"""Run-to-run variation of the stochastic training process and its 95% gate."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import faults
from .errors import TooFewRuns
from .forecaster import TrainConfig, evaluate, train
from .series import TimeSeries

Z95 = 1.96
METRICS = ("forecast", "loss", "train_loss")

# Published ten-run reference sample (first validation forecast per run) and
# its summary statistics; used to calibrate the CI machinery before gating.
REFERENCE_FORECASTS = (
    76.453354, 77.9922, 78.74777, 83.153175, 81.06984,
    74.516365, 79.37088, 76.03293, 33.270237, 64.52415,
)
REFERENCE_LOSSES = (
    0.09275999665260315, 0.08760423585772514, 0.08459033071994781,
    0.08094570226967335, 0.08265132829546928, 0.0883125327527523,
    0.08452051877975464, 0.0892107617110014, 0.14077940210700035,
    0.06668609846383333,
)
REFERENCE_STATS = {
    "mean": 72.5130901,
    "sd": 14.67463148,
    "se": 4.640525931,
    "low": 63.41765927,
    "high": 81.60852093,
}


@dataclass(frozen=True)
class RunSample:
    run_index: int
    first_forecast: float
    validation_loss: float
    train_loss: float = math.nan

    def metric(self, name: str) -> float:
        if name == "forecast":
            return self.first_forecast
        if name == "loss":
            return self.validation_loss
        if name == "train_loss":
            return self.train_loss
        raise ValueError(f"unknown metric {name!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class VariationBaseline:
    metric: str
    n_runs: int
    mean: float
    sd: float
    se: float
    low: float
    high: float

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.low, self.high)

    def to_dict(self) -> dict:
        return asdict(self)


def summarize_values(values: Sequence[float], metric: str = "forecast") -> VariationBaseline:
    v = np.asarray(values, dtype=np.float64)
    n = len(v)
    if n < 2:
        raise TooFewRuns(f"need at least 2 runs, got {n}")
    mean = float(v.mean())
    ddof = 0 if faults.active("baseline-sd-population") else 1
    sd = float(np.sqrt(np.sum((v - mean) ** 2) / (n - ddof)))
    se = sd / math.sqrt(n)
    return VariationBaseline(metric, n, mean, sd, se, mean - Z95 * se, mean + Z95 * se)


def summarize(samples: Sequence[RunSample], metric: str = "forecast") -> VariationBaseline:
    """Mean, sample sd (n-1), standard error and mean -/+ 1.96 se for one metric."""
    return summarize_values([s.metric(metric) for s in samples], metric)


def within_ci(baseline: VariationBaseline, observed: float, atol: float = 0.0) -> bool:
    """Inclusive interval test, optionally widened by ``atol`` on both sides."""
    return baseline.low - atol <= observed <= baseline.high + atol


def collect_runs(
    train_series: TimeSeries,
    val_series: TimeSeries,
    config: TrainConfig,
    n_runs: int = 30,
    base_seed: int | None = None,
) -> list[RunSample]:
    """Train and evaluate ``n_runs`` times; run i uses seed base_seed + i."""
    if n_runs < 2:
        raise TooFewRuns(f"need at least 2 runs, got {n_runs}")
    base = config.seed if base_seed is None else base_seed
    samples = []
    for i in range(n_runs):
        model = train(train_series, config.replace(seed=base + i))
        res = evaluate(model, val_series)
        samples.append(RunSample(i, float(res.first_forecast[0]), res.validation_loss, model.final_train_loss))
    return samples


@dataclass(frozen=True)
class BaselineSet:
    """Per-metric baselines plus the run schedule that produced them."""

    samples: tuple[RunSample, ...]
    base_seed: int
    config: TrainConfig
    baselines: dict = field(default_factory=dict)

    @classmethod
    def build(cls, samples: Iterable[RunSample], base_seed: int, config: TrainConfig) -> "BaselineSet":
        samples = tuple(samples)
        return cls(samples, base_seed, config, {m: summarize(samples, m) for m in METRICS})

    @property
    def n_runs(self) -> int:
        return len(self.samples)

    def __getitem__(self, metric: str) -> VariationBaseline:
        return self.baselines[metric]

    def to_dict(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "n_runs": self.n_runs,
            "config": self.config.to_dict(),
            "samples": [asdict(s) for s in self.samples],
            "baselines": {m: b.to_dict() for m, b in self.baselines.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineSet":
        samples = tuple(RunSample(**s) for s in d["samples"])
        baselines = {m: VariationBaseline(**b) for m, b in d["baselines"].items()}
        return cls(samples, int(d["base_seed"]), TrainConfig(**d["config"]), baselines)


def compute_baseline(
    train_series: TimeSeries, val_series: TimeSeries, config: TrainConfig, n_runs: int = 30
) -> BaselineSet:
    samples = collect_runs(train_series, val_series, config, n_runs)
    return BaselineSet.build(samples, config.seed, config)


def calibration_error() -> float:
    """Largest deviation of the reference-sample summary from its published statistics."""
    b = summarize_values(REFERENCE_FORECASTS)
    got = {"mean": b.mean, "sd": b.sd, "se": b.se, "low": b.low, "high": b.high}
    return max(abs(got[k] - REFERENCE_STATS[k]) for k in REFERENCE_STATS)

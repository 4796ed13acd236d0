"""Run configuration: a YAML (or JSON) mapping turned into frozen dataclasses."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .forecaster import TrainConfig
from .forecaster_mrs import SCALING_CASES, SuiteConfig
from .kill_matrix import MatrixConfig

SEED_ENV = "METAMORPH_SEED"


@dataclass(frozen=True)
class DataConfig:
    timestamp_column: str = "timestamp"
    value_column: str = "value"  # forecasting series
    target: str | None = None  # correlation target; defaults to value_column
    n_train: int = 750  # synthetic split sizes when no CSV is given
    n_val: int = 187
    table_rows: int = 750


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    n_runs: int = 30
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    adversarial_steps: int = 200
    adversarial_windows: int = 10
    timestep_max: int | None = None
    matrix: MatrixConfig = field(default_factory=MatrixConfig)

    def suite(self) -> SuiteConfig:
        return SuiteConfig(self.train.replace(seed=self.seed), self.n_runs, SCALING_CASES,
                           self.adversarial_steps, self.adversarial_windows, self.timestep_max)

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seed=seed, train=self.train.replace(seed=seed),
                                   matrix=dataclasses.replace(self.matrix, seed=seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matrix"]["suite"]["scaling_cases"] = [list(c) for c in d["matrix"]["suite"]["scaling_cases"]]
        d["matrix"]["gate_seeds"] = list(d["matrix"]["gate_seeds"])
        return d


def _build(cls, raw: dict | None, where: str):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    extra = sorted(set(raw) - known)
    if extra:
        raise ValueError(f"unknown key(s) in {where}: {', '.join(extra)}")
    return cls(**raw)


def _matrix(raw: dict | None) -> MatrixConfig:
    raw = dict(raw or {})
    default = MatrixConfig()
    suite_keys = {"epochs", "hidden_size", "n_runs", "adversarial_steps"}
    train = default.suite.train.replace(**{k: raw.pop(k) for k in ("epochs", "hidden_size") if k in raw})
    n_runs = raw.pop("n_runs", default.suite.n_runs)
    steps = raw.pop("adversarial_steps", default.suite.adversarial_steps)
    if "gate_seeds" in raw:
        raw["gate_seeds"] = tuple(int(s) for s in raw["gate_seeds"])
    extra = sorted(set(raw) - {f.name for f in fields(MatrixConfig)} - suite_keys)
    if extra:
        raise ValueError(f"unknown key(s) in matrix: {', '.join(extra)}")
    return MatrixConfig(suite=SuiteConfig(train=train, n_runs=n_runs, adversarial_steps=steps), **raw)


def from_mapping(raw: dict | None) -> RunConfig:
    raw = dict(raw or {})
    allowed = {f.name for f in fields(RunConfig)}
    extra = sorted(set(raw) - allowed)
    if extra:
        raise ValueError(f"unknown top-level key(s): {', '.join(extra)}")
    seed = int(raw.pop("seed", 0))
    train = _build(TrainConfig, raw.pop("train", None), "train").replace(seed=seed)
    data = _build(DataConfig, raw.pop("data", None), "data")
    matrix = _matrix(raw.pop("matrix", None))
    return RunConfig(seed=seed, train=train, data=data, matrix=matrix, **raw)


def load_config(path: str | os.PathLike | None = None, seed: int | None = None,
                environ: dict | None = None) -> RunConfig:
    """Read a config file; the environment seed overrides the file and an explicit seed overrides both."""
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a mapping")
    cfg = from_mapping(raw)
    env = os.environ if environ is None else environ
    if env.get(SEED_ENV, "").strip():
        try:
            cfg = cfg.with_seed(int(env[SEED_ENV]))
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be a non-negative integer") from None
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if cfg.seed < 0:
        raise ValueError("seed must be non-negative")
    return cfg

"""Time-series containers, CSV ingestion, windowing and min-max scaling."""

from __future__ import annotations

import csv
import datetime as dt
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import faults
from .errors import (
    DuplicateTimestamp,
    InsufficientData,
    MalformedCsv,
    UnknownColumn,
    ZeroRange,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Values on a timestamp axis. NaN marks a missing cell."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps)
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.ndim != 1 or vals.ndim != 1 or len(ts) != len(vals):
            raise ValueError("timestamps and values must be 1-D and equal length")
        if np.isinf(vals).any():
            raise ValueError("values must be finite (NaN allowed only for missing cells)")
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_values(cls, values: Iterable[float], start: int = 0) -> "TimeSeries":
        vals = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64)
        return cls(np.arange(start, start + len(vals), dtype=np.int64), vals)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def has_missing(self) -> bool:
        return bool(self.missing.any())

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(self.timestamps[1:] > self.timestamps[:-1]))

    def map_values(self, fn) -> "TimeSeries":
        return TimeSeries(self.timestamps, fn(np.array(self.values)))

    def head(self, n: int) -> "TimeSeries":
        return TimeSeries(self.timestamps[:n], self.values[:n])


@dataclass(frozen=True)
class FeatureTable:
    timestamps: np.ndarray
    columns: Mapping[str, np.ndarray]
    target_name: str

    def __post_init__(self):
        ts = _frozen(np.asarray(self.timestamps))
        cols = {}
        for name, vals in self.columns.items():
            vals = np.asarray(vals, dtype=np.float64)
            if vals.shape != ts.shape:
                raise ValueError(f"column {name!r} has length {len(vals)}, expected {len(ts)}")
            cols[name] = _frozen(vals)
        if self.target_name not in cols:
            raise UnknownColumn(f"target column {self.target_name!r} not in table")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def feature_names(self) -> list[str]:
        return [n for n in self.columns if n != self.target_name]

    @property
    def target(self) -> np.ndarray:
        return self.columns[self.target_name]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise UnknownColumn(f"no column named {name!r}") from None

    def series(self, name: str | None = None) -> TimeSeries:
        return TimeSeries(self.timestamps, self.column(name or self.target_name))

    def with_columns(self, columns: Mapping[str, np.ndarray], order: list[str] | None = None) -> "FeatureTable":
        """Copy with ``columns`` replaced or appended; ``order`` reorders the result."""
        merged = dict(self.columns)
        merged.update(columns)
        if order is not None:
            merged = {n: merged[n] for n in order}
        return FeatureTable(self.timestamps, merged, self.target_name)

    def take_rows(self, index: np.ndarray) -> "FeatureTable":
        index = np.asarray(index)
        return FeatureTable(
            self.timestamps[index], {n: v[index] for n, v in self.columns.items()}, self.target_name
        )


@dataclass(frozen=True)
class SequenceDataset:
    inputs: np.ndarray  # (N, time_steps)
    targets: np.ndarray  # (N, horizon)
    time_steps: int
    horizon: int

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class Normalizer:
    """Min-max scaling fitted on training data only."""

    min_x: float
    max_x: float

    def __post_init__(self):
        lo, hi = float(self.min_x), float(self.max_x)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("normalizer bounds must be finite")
        spread = hi if faults.active("zero-range-guard-uses-max") else hi - lo
        if spread == 0:
            raise ZeroRange(f"training data has zero range (min = max = {lo})")
        if hi < lo:
            raise ValueError("max_x must not be below min_x")
        object.__setattr__(self, "min_x", lo)
        object.__setattr__(self, "max_x", hi)

    @property
    def span(self) -> float:
        return self.max_x - self.min_x

    def normalize(self, x):
        if faults.active("normalize-divides-by-max"):
            return (np.asarray(x, dtype=np.float64) - self.min_x) / self.max_x
        return (np.asarray(x, dtype=np.float64) - self.min_x) / self.span

    def denormalize(self, y):
        y = np.asarray(y, dtype=np.float64)
        if faults.active("denormalize-drops-min"):
            return self.span * y
        if faults.active("denormalize-uses-max"):
            return self.span * y + self.max_x
        return self.span * y + self.min_x


def fit_normalizer(train: TimeSeries) -> Normalizer:
    vals = train.values
    if len(vals) == 0:
        raise InsufficientData("cannot fit a normalizer on an empty series")
    if np.isnan(vals).any():
        raise ValueError("training series has missing cells")
    return Normalizer(float(vals.min()), float(vals.max()))


def normalize(n: Normalizer, x):
    return n.normalize(x)


def denormalize(n: Normalizer, y):
    return n.denormalize(y)


def window_count(length: int, time_steps: int, horizon: int) -> int:
    return max(0, length - time_steps - horizon + 1)


def make_sequences(series: TimeSeries | np.ndarray, time_steps: int, horizon: int) -> SequenceDataset:
    """Stride-1 contiguous windows; window i is [i, i+t), its target [i+t, i+t+h)."""
    if time_steps < 1 or horizon < 1:
        raise ValueError("time_steps and horizon must be positive")
    vals = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    if np.isnan(vals).any():
        raise ValueError("forecasting input must not contain missing cells")
    L = len(vals)
    n = L - time_steps - horizon + 1
    if faults.active("window-off-by-one"):
        n -= 1
    if n < 1:
        raise InsufficientData(
            f"series of length {L} is shorter than time_steps + horizon = {time_steps + horizon}"
        )
    offset = time_steps - 1 if faults.active("target-overlaps-window") else time_steps
    idx = np.arange(n)[:, None]
    inputs = vals[idx + np.arange(time_steps)]
    targets = vals[idx + offset + np.arange(horizon)]
    return SequenceDataset(inputs, targets, time_steps, horizon)


# --- CSV ingestion -----------------------------------------------------------


@dataclass(frozen=True)
class CsvConfig:
    timestamp_column: str = "timestamp"
    target_column: str = "value"
    value_columns: tuple[str, ...] | None = None


def _parse_timestamp(raw: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return np.datetime64(dt.datetime.fromisoformat(raw))
    except ValueError:
        raise MalformedCsv(f"unparseable timestamp {raw!r}") from None


def sort_rows(timestamps: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Order rows ascending by timestamp; rejects repeated timestamps."""
    uniq, counts = np.unique(timestamps, return_counts=True)
    if (counts > 1).any():
        raise DuplicateTimestamp(f"timestamp {uniq[counts > 1][0]} appears more than once")
    if faults.active("loader-skips-sort"):
        return timestamps, rows
    order = np.argsort(timestamps, kind="stable")
    return timestamps[order], rows[order]


def load_csv(source: str | os.PathLike | io.TextIOBase, config: CsvConfig = CsvConfig()) -> FeatureTable:
    """Read a header-first CSV into a FeatureTable sorted by timestamp.

    Empty cells become NaN (missing). ``source`` may be a path or an open text
    stream.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_csv(fh, config)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedCsv("empty CSV (header row required)") from None
    if len(set(header)) != len(header):
        raise MalformedCsv("duplicate column names in header")
    if config.timestamp_column not in header:
        raise UnknownColumn(f"timestamp column {config.timestamp_column!r} not in header")
    value_cols = list(config.value_columns) if config.value_columns else [
        h for h in header if h != config.timestamp_column
    ]
    for name in value_cols + [config.target_column]:
        if name not in header:
            raise UnknownColumn(f"column {name!r} not in header")
    if config.target_column not in value_cols:
        value_cols.append(config.target_column)
    ts_i = header.index(config.timestamp_column)
    val_i = [header.index(c) for c in value_cols]

    stamps, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise MalformedCsv(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
        stamps.append(_parse_timestamp(rec[ts_i]))
        row = []
        for i in val_i:
            cell = rec[i].strip()
            if cell == "":
                row.append(np.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise MalformedCsv(f"line {lineno}: non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise MalformedCsv(f"line {lineno}: non-finite value {cell!r}")
            row.append(v)
        rows.append(row)
    if not rows:
        raise MalformedCsv("CSV has a header but no data rows")
    kinds = {type(s) for s in stamps}
    if len(kinds) > 1:
        raise MalformedCsv("timestamp column mixes integer indices and dates")
    ts = np.array(stamps, dtype=np.int64 if kinds == {int} else "datetime64[us]")
    ts, data = sort_rows(ts, np.array(rows, dtype=np.float64).reshape(len(rows), len(value_cols)))
    return FeatureTable(ts, {c: data[:, j] for j, c in enumerate(value_cols)}, config.target_column)


def load_series(source, timestamp_column: str = "timestamp", value_column: str = "value") -> TimeSeries:
    table = load_csv(source, CsvConfig(timestamp_column, value_column, (value_column,)))
    return table.series()


def _format_timestamp(t) -> str:
    if isinstance(t, np.datetime64):
        return str(t.astype("datetime64[us]").item().isoformat())
    return str(int(t))


def write_csv(dest, table: FeatureTable, timestamp_column: str = "timestamp") -> None:
    """Write a table back out; NaN cells become empty strings. Floats use repr (round-trip exact)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            return write_csv(fh, table, timestamp_column)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow([timestamp_column] + table.names)
    for i, t in enumerate(table.timestamps):
        w.writerow([_format_timestamp(t)] + ["" if np.isnan(v[i]) else repr(float(v[i])) for v in table.columns.values()])


def series_to_table(series: TimeSeries, name: str = "value") -> FeatureTable:
    return FeatureTable(series.timestamps, {name: series.values}, name)


# --- synthetic data ----------------------------------------------------------

SYNTH_KINDS = ("sine+trend", "constant", "linear", "noise")


def synth_series(kind: str, length: int, seed: int = 0, start: int = 0) -> TimeSeries:
    """Deterministic synthetic series with timestamps start..start+length-1.

    sine+trend: 100 + 0.04 t + 20 sin(2 pi t / 25) + N(0, 3^2)
    constant:   100 everywhere
    linear:     10 + 0.5 t
    noise:      N(100, 10^2)
    """
    t = np.arange(start, start + length, dtype=np.float64)
    rng = np.random.default_rng(seed)
    if kind == "sine+trend":
        vals = 100.0 + 0.04 * t + 20.0 * np.sin(2 * np.pi * t / 25.0) + rng.normal(0.0, 3.0, length)
    elif kind == "constant":
        vals = np.full(length, 100.0)
    elif kind == "linear":
        vals = 10.0 + 0.5 * t
    elif kind == "noise":
        vals = rng.normal(100.0, 10.0, length)
    else:
        raise ValueError(f"unknown kind {kind!r}; expected one of {SYNTH_KINDS}")
    return TimeSeries(t.astype(np.int64), vals)


def default_split(seed: int = 0, n_train: int = 750, n_val: int = 187, kind: str = "sine+trend") -> tuple[TimeSeries, TimeSeries]:
    """Contiguous train/validation files cut from one synthetic series."""
    full = synth_series(kind, n_train + n_val, seed)
    train = TimeSeries(full.timestamps[:n_train], full.values[:n_train])
    val = TimeSeries(full.timestamps[n_train:], full.values[n_train:])
    return train, val


def synth_table(length: int = 750, seed: int = 0) -> FeatureTable:
    """Feature table around a sine+trend target with correlated, anti-correlated and noise columns."""
    sales = synth_series("sine+trend", length, seed).values
    rng = np.random.default_rng([seed, 1])
    t = np.arange(length, dtype=np.float64)
    cols = {
        "memory": 0.6 * sales + rng.normal(0.0, 5.0, length),
        "cpu": 200.0 - 0.8 * sales + rng.normal(0.0, 6.0, length),
        "sales": sales,
        "disk": rng.normal(50.0, 10.0, length),
        "uptime": 0.04 * t + rng.normal(0.0, 1.0, length),
    }
    return FeatureTable(np.arange(length, dtype=np.int64), cols, "sales")

"""Pearson correlation, outlier/missing-value screening and feature ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import faults
from .errors import LengthMismatch, TargetConstant, TooFewPairs
from .series import FeatureTable

OUTLIER_FENCE = 3.0
POLICIES = ("raw", "screened")


@dataclass(frozen=True)
class CorrelationResult:
    r: float | None  # None means undefined (a spread is zero)
    n_used: int
    outliers_removed: tuple[int, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def defined(self) -> bool:
        return self.r is not None


@dataclass(frozen=True)
class RankedFeature:
    name: str
    score: float
    result: CorrelationResult

    @property
    def r(self) -> float | None:
        return self.result.r


@dataclass(frozen=True)
class FeatureRanking:
    ranked: tuple[RankedFeature, ...]
    undefined: tuple[tuple[str, str], ...] = ()  # (name, reason)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.ranked]

    def score(self, name: str) -> float:
        for f in self.ranked:
            if f.name == name:
                return f.score
        raise KeyError(name)

    def get(self, name: str) -> RankedFeature | None:
        return next((f for f in self.ranked if f.name == name), None)

    @property
    def undefined_names(self) -> list[str]:
        return [n for n, _ in self.undefined]


def drop_missing_pairs(x, y):
    """Pairwise deletion. Returns (x, y, dropped_count)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise LengthMismatch(f"x has {len(x)} values, y has {len(y)}")
    if faults.active("corr-missing-as-zero"):
        return np.nan_to_num(x, nan=0.0), np.nan_to_num(y, nan=0.0), 0
    if faults.active("corr-missing-unpaired"):
        xs, ys = x[~np.isnan(x)], y[~np.isnan(y)]
        n = min(len(xs), len(ys))
        return xs[:n], ys[:n], len(x) - n
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep], int((~keep).sum())


def _fence_mask(v: np.ndarray) -> np.ndarray:
    q1, q3 = np.percentile(v, [25.0, 75.0])
    iqr = q3 - q1
    return (v < q1 - OUTLIER_FENCE * iqr) | (v > q3 + OUTLIER_FENCE * iqr)


def remove_outlier_pairs(x, y):
    """Drop pairs where either coordinate lies outside its column's 3*IQR fences.

    Returns (x, y, removed_indices). Inputs shorter than 4 are returned unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise LengthMismatch(f"x has {len(x)} values, y has {len(y)}")
    if len(x) < 4:
        return x, y, ()
    out = _fence_mask(x) | _fence_mask(y)
    return x[~out], y[~out], tuple(int(i) for i in np.flatnonzero(out))


def pearson(x, y, policy: str = "raw") -> CorrelationResult:
    """Pearson's r, evaluated in two passes (means first, then centred sums).

    ``screened`` applies pairwise deletion of missing cells and then the
    outlier fence before computing r. A zero spread yields an undefined
    result carrying a warning rather than an exception.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"x has shape {x.shape}, y has shape {y.shape}")
    warnings: list[str] = []
    removed: tuple[int, ...] = ()
    if policy == "screened":
        x, y, dropped = drop_missing_pairs(x, y)
        if dropped:
            warnings.append(f"dropped {dropped} pair(s) with missing values")
        if not faults.active("corr-skip-outlier-screen"):
            x, y, removed = remove_outlier_pairs(x, y)
        if removed and not faults.active("corr-outlier-no-warning"):
            warnings.append(f"removed {len(removed)} outlier pair(s) at index {list(removed)}")
    elif np.isnan(x).any() or np.isnan(y).any():
        raise ValueError("missing cells present; use the screened policy")

    if faults.active("corr-skip-first-pair"):
        x, y = x[1:], y[1:]
    n = len(x)
    if n < 2:
        raise TooFewPairs(f"only {n} pair(s) left after filtering")

    # r is scale invariant; unit max magnitude keeps the sums clear of underflow and overflow
    x = x / (np.max(np.abs(x)) or 1.0)
    y = y / (np.max(np.abs(y)) or 1.0)
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    if faults.active("corr-numerator-mean-short"):
        num = np.sum((x - x[:-1].mean()) * (y - y[:-1].mean()))
    elif faults.active("corr-skip-centering"):
        num = np.sum(x * y)
    else:
        num = np.sum(dx * dy)

    if faults.active("corr-undefined-on-zero-numerator"):
        degenerate = num == 0
    else:
        degenerate = np.ptp(x) == 0 or np.ptp(y) == 0
    if degenerate:
        if faults.active("corr-silent-nan"):
            return CorrelationResult(math.nan, n, removed, tuple(warnings))
        warnings.append("correlation undefined: a standard deviation is zero")
        return CorrelationResult(None, n, removed, tuple(warnings))

    sxx, syy = np.sum(dx * dx), np.sum(dy * dy)
    if faults.active("corr-missing-sqrt"):
        den = sxx * syy
    elif faults.active("corr-asymmetric-denominator"):
        den = math.sqrt(sxx) * math.sqrt(sxx)
    elif faults.active("corr-ddof-mismatch"):
        num = num / (n - 1)
        den = math.sqrt(sxx / n) * math.sqrt(syy / n)
    else:
        den = math.sqrt(sxx) * math.sqrt(syy)
    if den == 0:
        warnings.append("correlation undefined: spread underflows to zero")
        return CorrelationResult(None, n, removed, tuple(warnings))
    return CorrelationResult(float(num / den), n, removed, tuple(warnings))


def rank_features(table: FeatureTable, target: str | None = None) -> FeatureRanking:
    """Score every non-target column by |r| against the target, best first.

    Ties are broken by ascending column name.
    """
    target = target or table.target_name
    y = table.column(target)
    present = y[~np.isnan(y)]
    if len(present) == 0 or np.ptp(present) == 0:
        raise TargetConstant(f"target column {target!r} is constant")

    names = [n for n in table.names if n != target]
    if faults.active("rank-skips-last-column"):
        names = names[:-1]
    ranked, undefined = [], []
    for name in names:
        try:
            res = pearson(table.column(name), y, "screened")
        except TooFewPairs as exc:
            undefined.append((name, str(exc)))
            continue
        if res.r is None:
            undefined.append((name, "; ".join(res.warnings)))
            continue
        score = res.r if faults.active("rank-by-signed-r") else abs(res.r)
        ranked.append(RankedFeature(name, score, res))
    if faults.active("rank-ascending"):
        ranked.sort(key=lambda f: (f.score, f.name))
    else:
        ranked.sort(key=lambda f: (-f.score, f.name))
    return FeatureRanking(tuple(ranked), tuple(undefined))

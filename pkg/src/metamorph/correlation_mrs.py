"""Metamorphic relations CMR-1..CMR-10 for the correlation module.

Each check takes a FeatureTable (target named by the table unless given) and
returns an MrVerdict. The subject is whatever ``correlation`` currently does,
including any injected fault.
"""

from __future__ import annotations

import math

import numpy as np

from . import correlation as corr
from .series import FeatureTable
from .verdict import FAIL, PASS, WARN, MrVerdict, guarded

EXACT_TOL = 1e-12
SCALING_TOL = 1e-10
STAT_TOL = 0.05
SCALING_GRID = tuple((a, b) for a in (2.0, -3.0, 0.5) for b in (0.0, 7.0, -11.0))
MISSING_FRACTION = 0.05


def _retarget(table: FeatureTable, target: str | None) -> FeatureTable:
    if target is None or target == table.target_name:
        return table
    return FeatureTable(table.timestamps, table.columns, target)


def _signed(ranking: corr.FeatureRanking) -> dict[str, float]:
    return {f.name: f.r for f in ranking.ranked}


def _fresh_name(table: FeatureTable, stem: str) -> str:
    name, k = stem, 0
    while name in table.columns:
        k += 1
        name = f"{stem}_{k}"
    return name


def _compare(a: dict[str, float], b: dict[str, float], tol: float, sign: float = 1.0) -> tuple[float, list[str]]:
    """Largest |b - sign*a| over shared keys, plus the keys present in only one side."""
    mismatch = sorted(set(a) ^ set(b))
    worst = 0.0
    for k in set(a) & set(b):
        d = abs(b[k] - sign * a[k])
        worst = max(worst, d if not math.isnan(d) else math.inf)
    return worst, mismatch


@guarded("CMR-1", "-1 <= r <= 1 for every computed coefficient", EXACT_TOL)
def cmr1_bounds(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    y = table.target
    rs = {f"{f.name}/ranked": f.r for f in corr.rank_features(table).ranked}
    for name in table.names:
        for policy in corr.POLICIES:
            x = table.column(name)
            if policy == "raw" and (np.isnan(x).any() or np.isnan(y).any()):
                continue
            res = corr.pearson(x, y, policy)
            if res.defined:
                rs[f"{name}/{table.target_name}/{policy}"] = res.r
    bad = {k: r for k, r in rs.items() if not (-1 - EXACT_TOL <= r <= 1 + EXACT_TOL)}
    status = FAIL if bad else PASS
    return MrVerdict("CMR-1", status, rs, "-1 <= r <= 1", EXACT_TOL,
                     f"out of bounds: {bad}" if bad else f"{len(rs)} coefficients in bounds")


@guarded("CMR-2", "r unchanged by swapping feature columns and by swapping argument roles", EXACT_TOL)
def cmr2_symmetry(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    feats = table.feature_names
    expected = "r unchanged by swapping boundary feature columns and argument roles"
    if len(feats) < 2:
        return MrVerdict("CMR-2", WARN, None, expected, EXACT_TOL, "needs at least two features; not applicable")
    order = table.names
    i, j = order.index(feats[0]), order.index(feats[-1])
    order[i], order[j] = order[j], order[i]
    before = corr.rank_features(table)
    after = corr.rank_features(table.with_columns({}, order=order))
    worst, mismatch = _compare(_signed(before), _signed(after), EXACT_TOL)
    mismatch += sorted(set(before.undefined_names) ^ set(after.undefined_names))
    y = table.target
    role = 0.0
    for name in feats:
        xy = corr.pearson(table.column(name), y, "screened")
        yx = corr.pearson(y, table.column(name), "screened")
        if xy.defined != yx.defined:
            role = math.inf
        elif xy.defined:
            d = abs(xy.r - yx.r)
            role = max(role, d if not math.isnan(d) else math.inf)
    ok = worst <= EXACT_TOL and role <= EXACT_TOL and not mismatch
    return MrVerdict(
        "CMR-2", PASS if ok else FAIL,
        {"column_swap_max_diff": worst, "role_swap_max_diff": role, "feature_set_mismatch": mismatch},
        expected, EXACT_TOL, f"swapped {feats[0]!r} <-> {feats[-1]!r}",
    )


@guarded("CMR-3", "r unchanged when a pair moves to the top or bottom", EXACT_TOL)
def cmr3_relocate_pairs(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    n = len(table)
    k = n // 2
    rest = np.array([i for i in range(n) if i != k])
    base = _signed(corr.rank_features(table))
    obs = {}
    worst, mismatch = 0.0, []
    for where, order in (("top", np.r_[k, rest]), ("bottom", np.r_[rest, k])):
        d, m = _compare(base, _signed(corr.rank_features(table.take_rows(order))), EXACT_TOL)
        obs[where] = d
        worst = max(worst, d)
        mismatch += m
    ok = worst <= EXACT_TOL and not mismatch
    return MrVerdict("CMR-3", PASS if ok else FAIL, {"max_diff": obs, "feature_set_mismatch": mismatch},
                     "r invariant to relocating a data pair", EXACT_TOL, f"moved row {k}")


def _top_tier(ranking: corr.FeatureRanking, name: str, score: float, tol: float) -> bool:
    """True when ``name`` holds the best score and only exact ties precede it."""
    pos = ranking.names.index(name)
    best = max(f.score for f in ranking.ranked)
    return score >= best - tol and all(abs(f.score - score) <= tol for f in ranking.ranked[:pos])


@guarded("CMR-4", "duplicate of the target has r = 1 and ranks first", EXACT_TOL)
def cmr4_duplicate_feature(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    name = _fresh_name(table, f"{table.target_name}_copy")
    ranking = corr.rank_features(table.with_columns({name: table.target}))
    entry = ranking.get(name)
    if entry is None:
        return MrVerdict("CMR-4", FAIL, None, "r = 1, ranked first", EXACT_TOL, f"{name!r} missing from ranking")
    ok_r = abs(entry.r - 1.0) <= EXACT_TOL
    ok_rank = _top_tier(ranking, name, entry.score, EXACT_TOL)
    return MrVerdict("CMR-4", PASS if ok_r and ok_rank else FAIL,
                     {"r": entry.r, "position": ranking.names.index(name), "order": ranking.names},
                     "r = 1, ranked first", EXACT_TOL, f"{name!r} r = {entry.r!r}" if ok_r and ok_rank else
                     ("r differs from 1" if not ok_r else "duplicate not ranked first"))


@guarded("CMR-5", "negated target has r = -1 and shares the top rank", EXACT_TOL)
def cmr5_negated_feature(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    name = _fresh_name(table, f"{table.target_name}_negated")
    ranking = corr.rank_features(table.with_columns({name: -table.target}))
    entry = ranking.get(name)
    if entry is None:
        return MrVerdict("CMR-5", FAIL, None, "r = -1, ranked first", EXACT_TOL, f"{name!r} missing from ranking")
    ok_r = abs(entry.r + 1.0) <= EXACT_TOL
    ok_rank = _top_tier(ranking, name, entry.score, EXACT_TOL)
    return MrVerdict("CMR-5", PASS if ok_r and ok_rank else FAIL,
                     {"r": entry.r, "position": ranking.names.index(name), "order": ranking.names},
                     "r = -1, ranked first", EXACT_TOL, f"{name!r} r = {entry.r!r}" if ok_r and ok_rank else
                     ("r differs from -1" if not ok_r else "negated feature not ranked first"))


@guarded("CMR-6", "r(x, a*y + b) = sign(a) * r(x, y)", SCALING_TOL)
def cmr6_linear_scaling(table: FeatureTable, target: str | None = None, seed: int = 0,
                        grid=SCALING_GRID) -> MrVerdict:
    table = _retarget(table, target)
    base = _signed(corr.rank_features(table))
    obs = {}
    worst, mismatch = 0.0, []
    for a, b in grid:
        scaled = table.with_columns({table.target_name: a * table.target + b})
        d, m = _compare(base, _signed(corr.rank_features(scaled)), SCALING_TOL, math.copysign(1.0, a))
        obs[f"a={a:g},b={b:g}"] = d
        worst = max(worst, d)
        mismatch += m
    ok = worst <= SCALING_TOL and not mismatch
    return MrVerdict("CMR-6", PASS if ok else FAIL, {"max_diff": obs, "feature_set_mismatch": sorted(set(mismatch))},
                     "r(x, a*y + b) = sign(a) * r(x, y)", SCALING_TOL,
                     f"largest deviation {worst:.3g} over {len(grid)} (a, b) pairs"
                     + (f"; feature sets differ: {sorted(set(mismatch))}" if mismatch else ""))


ZERO_X = (1.0, 0.0, -1.0, 0.0)
ZERO_Y = (0.0, 1.0, 0.0, -1.0)


@guarded("CMR-7", "zero-correlation data yields r = 0 and is ranked normally", EXACT_TOL)
def cmr7_zero_correlation(table: FeatureTable | None = None, target: str | None = None, seed: int = 0,
                          tiles: int = 5) -> MrVerdict:
    obs = {}
    problems = []
    for reps in (1, tiles):
        x = np.tile(ZERO_X, reps)
        y = np.tile(ZERO_Y, reps)
        small = FeatureTable(np.arange(len(x)), {"y": y, "x": x}, "y")
        ranking = corr.rank_features(small)
        entry = ranking.get("x")
        if entry is None:
            problems.append(f"x{reps}: not ranked ({dict(ranking.undefined).get('x', 'missing')})")
            continue
        obs[f"tiles={reps}"] = entry.r
        if not abs(entry.r) <= EXACT_TOL:
            problems.append(f"x{reps}: r = {entry.r}")
    return MrVerdict("CMR-7", FAIL if problems else PASS, obs, "r = 0, feature ranked", EXACT_TOL,
                     "; ".join(problems) or "r = 0 on the quadruple and its tiling")


@guarded("CMR-8", "constant feature reported as undefined with a message, no crash", 0.0)
def cmr8_zero_variance(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    ones = _fresh_name(table, "constant_one")
    zeros = _fresh_name(table, "constant_zero")
    n = len(table)
    ranking = corr.rank_features(table.with_columns({ones: np.ones(n), zeros: np.zeros(n)}))
    reasons = dict(ranking.undefined)
    problems = [f"{c!r} not reported as undefined" for c in (ones, zeros) if not reasons.get(c)]
    nan_scores = [f.name for f in ranking.ranked if math.isnan(f.score)]
    if nan_scores:
        problems.append(f"NaN scores for {nan_scores}")
    return MrVerdict("CMR-8", FAIL if problems else PASS, {"undefined": reasons},
                     "undefined r with a message", 0.0,
                     "; ".join(problems) or "both constant columns reported as undefined")


@guarded("CMR-9", "screened r unchanged by an injected outlier, with a warning", STAT_TOL)
def cmr9_outlier(table: FeatureTable, target: str | None = None, seed: int = 0,
                 feature: str | None = None) -> MrVerdict:
    table = _retarget(table, target)
    expected = "screened r within tolerance after a 1000*max outlier, with a warning"
    if feature is None:
        ranking = corr.rank_features(table)
        if not ranking.ranked:
            return MrVerdict("CMR-9", WARN, None, expected, STAT_TOL, "no defined feature to test")
        feature = ranking.ranked[0].name
    x, y, _ = corr.drop_missing_pairs(table.column(feature), table.target)
    r0 = corr.pearson(x, y, "screened").r
    xo = np.r_[x, 1000.0 * np.max(np.abs(x))]
    yo = np.r_[y, np.median(y)]
    res = corr.pearson(xo, yo, "screened")
    raw = corr.pearson(xo, yo, "raw").r
    obs = {"feature": feature, "r_before": r0, "r_screened": res.r, "r_raw": raw, "warnings": list(res.warnings)}
    if r0 is None or res.r is None or math.isnan(res.r) or abs(res.r - r0) > STAT_TOL:
        return MrVerdict("CMR-9", FAIL, obs, expected, STAT_TOL, "outlier shifted the screened coefficient")
    if not res.outliers_removed or not any("outlier" in w for w in res.warnings):
        return MrVerdict("CMR-9", FAIL, obs, expected, STAT_TOL, "no outlier warning emitted")
    if raw is not None and abs(raw - r0) <= STAT_TOL:
        return MrVerdict("CMR-9", WARN, obs, expected, STAT_TOL, "outlier did not move the raw coefficient; relation uninformative")
    return MrVerdict("CMR-9", PASS, obs, expected, STAT_TOL, f"outlier on {feature!r} screened out with a warning")


def inject_missing(table: FeatureTable, seed: int = 0, fraction: float = MISSING_FRACTION,
                   quantile: float = 0.1) -> tuple[FeatureTable, list[tuple[int, str]]]:
    """Blank ``fraction`` of rows (one random cell each), only in rows with no column near its extremes."""
    rng = np.random.default_rng(seed)
    names = table.names
    ok = np.ones(len(table), dtype=bool)
    for name in names:
        v = table.column(name)
        lo, hi = np.nanquantile(v, [quantile, 1 - quantile])
        ok &= (v > lo) & (v < hi)
    candidates = np.flatnonzero(ok)
    m = min(len(candidates), max(1, math.ceil(fraction * len(table))))
    rows = np.sort(rng.choice(candidates, size=m, replace=False))
    cols = {n: np.array(table.column(n)) for n in names}
    blanked = []
    for row in rows:
        name = names[rng.integers(len(names))]
        cols[name][row] = np.nan
        blanked.append((int(row), name))
    return table.with_columns(cols), blanked


@guarded("CMR-10", "screened r unchanged by a few missing values", STAT_TOL)
def cmr10_missing_values(table: FeatureTable, target: str | None = None, seed: int = 0) -> MrVerdict:
    table = _retarget(table, target)
    base = corr.rank_features(table)
    holed, blanked = inject_missing(table, seed)
    after = corr.rank_features(holed)
    worst, mismatch = _compare(_signed(base), _signed(after), STAT_TOL)
    mismatch += sorted(set(base.undefined_names) ^ set(after.undefined_names))
    ok = worst <= STAT_TOL and not mismatch
    return MrVerdict("CMR-10", PASS if ok else FAIL,
                     {"max_diff": worst, "cells_blanked": len(blanked), "feature_set_mismatch": mismatch},
                     "screened r within tolerance after blanking 5% of cells", STAT_TOL,
                     f"largest shift {worst:.3g} after blanking {len(blanked)} cell(s)"
                     + (f"; feature sets differ: {mismatch}" if mismatch else ""))


CMRS = {
    "CMR-1": cmr1_bounds,
    "CMR-2": cmr2_symmetry,
    "CMR-3": cmr3_relocate_pairs,
    "CMR-4": cmr4_duplicate_feature,
    "CMR-5": cmr5_negated_feature,
    "CMR-6": cmr6_linear_scaling,
    "CMR-7": cmr7_zero_correlation,
    "CMR-8": cmr8_zero_variance,
    "CMR-9": cmr9_outlier,
    "CMR-10": cmr10_missing_values,
}


def run_correlation_suite(table: FeatureTable, target: str | None = None, seed: int = 0,
                          only: list[str] | None = None) -> list[MrVerdict]:
    return [fn(table, target, seed) for mr, fn in CMRS.items() if only is None or mr in only]

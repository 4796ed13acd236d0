"""Switchable single-site faults in the reference pipeline.

Each fault is a named hook checked at one site in the code. At most one fault
is active in a process at any time; the kill-matrix runner toggles them one
after another.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

MUTATION_CLASSES = (
    "arithmetic-operator",
    "comparison-operator",
    "constant-replacement",
    "boundary-shift",
    "statement-skip",
    "data-leakage",
)


@dataclass(frozen=True)
class FaultSpec:
    id: str
    site: str
    mutation_class: str
    description: str
    expected_killers: tuple[str, ...]
    # which half of the pipeline the site lives in: "correlation" or "forecaster"
    half: str
    mandatory: bool = False


CATALOG: tuple[FaultSpec, ...] = (
    # correlation half
    FaultSpec(
        "corr-missing-sqrt", "correlation.pearson", "arithmetic-operator",
        "denominator multiplies the sums of squares without taking square roots",
        ("CMR-4", "CMR-5"), "correlation", mandatory=True,
    ),
    FaultSpec(
        "corr-ddof-mismatch", "correlation.pearson", "constant-replacement",
        "covariance divided by n-1 while standard deviations divide by n",
        ("CMR-1", "CMR-4"), "correlation",
    ),
    FaultSpec(
        "corr-numerator-mean-short", "correlation.pearson", "boundary-shift",
        "numerator centers on means that skip the last element",
        ("CMR-1", "CMR-4"), "correlation",
    ),
    FaultSpec(
        "corr-skip-centering", "correlation.pearson", "statement-skip",
        "numerator uses raw products instead of mean-centered products",
        ("CMR-6",), "correlation",
    ),
    FaultSpec(
        "corr-asymmetric-denominator", "correlation.pearson", "arithmetic-operator",
        "denominator uses the first argument's spread twice",
        ("CMR-2",), "correlation",
    ),
    FaultSpec(
        "corr-skip-first-pair", "correlation.pearson", "boundary-shift",
        "sums start at the second pair",
        ("CMR-3",), "correlation",
    ),
    FaultSpec(
        "corr-undefined-on-zero-numerator", "correlation.pearson", "comparison-operator",
        "undefined-r guard tests the covariance instead of the spreads",
        ("CMR-7",), "correlation",
    ),
    FaultSpec(
        "corr-silent-nan", "correlation.pearson", "statement-skip",
        "zero-variance input returns NaN without a warning",
        ("CMR-8",), "correlation",
    ),
    FaultSpec(
        "corr-skip-outlier-screen", "correlation.pearson", "statement-skip",
        "screened policy never removes outlier pairs",
        ("CMR-9",), "correlation",
    ),
    FaultSpec(
        "corr-outlier-no-warning", "correlation.pearson", "statement-skip",
        "outliers are removed but no warning is emitted",
        ("CMR-9",), "correlation",
    ),
    FaultSpec(
        "corr-missing-as-zero", "correlation.drop_missing_pairs", "data-leakage",
        "missing cells are filled with 0 instead of deleting the pair",
        (), "correlation",
    ),
    FaultSpec(
        "corr-missing-unpaired", "correlation.drop_missing_pairs", "boundary-shift",
        "missing cells deleted per column, misaligning the remaining pairs",
        ("CMR-10",), "correlation",
    ),
    FaultSpec(
        "rank-by-signed-r", "correlation.rank_features", "arithmetic-operator",
        "features ranked by signed r instead of |r|",
        ("CMR-5",), "correlation",
    ),
    FaultSpec(
        "rank-ascending", "correlation.rank_features", "comparison-operator",
        "ranking sorted in ascending order of score",
        ("CMR-4", "CMR-5"), "correlation",
    ),
    FaultSpec(
        "rank-skips-last-column", "correlation.rank_features", "boundary-shift",
        "column loop stops one short of the last feature",
        ("CMR-2",), "correlation",
    ),
    # forecaster half
    FaultSpec(
        "normalizer-fit-on-validation", "forecaster.evaluate", "data-leakage",
        "evaluation refits the normalizer on the validation series",
        ("FMR-2", "FMR-7"), "forecaster", mandatory=True,
    ),
    FaultSpec(
        "window-off-by-one", "series.make_sequences", "boundary-shift",
        "window count computed as L - t - h, dropping the last window",
        ("FMR-3",), "forecaster", mandatory=True,
    ),
    FaultSpec(
        "denormalize-drops-min", "series.Normalizer.denormalize", "statement-skip",
        "inverse scaling omits adding the minimum back",
        ("FMR-1",), "forecaster", mandatory=True,
    ),
    FaultSpec(
        "loader-skips-sort", "series.sort_rows", "statement-skip",
        "loaded rows are kept in file order instead of sorted by timestamp",
        ("FMR-5",), "forecaster", mandatory=True,
    ),
    FaultSpec(
        "baseline-sd-population", "baseline.summarize", "constant-replacement",
        "run-to-run standard deviation divides by n instead of n-1",
        ("FMR-1",), "forecaster", mandatory=True,
    ),
    FaultSpec(
        "zero-range-guard-uses-max", "series.Normalizer", "comparison-operator",
        "zero-range guard tests max == 0 instead of max - min == 0",
        ("FMR-6",), "forecaster",
    ),
    FaultSpec(
        "normalize-divides-by-max", "series.Normalizer.normalize", "arithmetic-operator",
        "normalization divides by max instead of max - min",
        ("FMR-1",), "forecaster",
    ),
    FaultSpec(
        "drop-last-short-batch", "forecaster.train", "statement-skip",
        "final partial mini-batch of each epoch is skipped",
        ("FMR-3",), "forecaster",
    ),
    FaultSpec(
        "eval-window-off-by-one", "forecaster.evaluate", "boundary-shift",
        "evaluation skips the last validation window",
        ("FMR-4",), "forecaster",
    ),
    FaultSpec(
        "spectral-skip-shift", "spectral.timestep_curve", "statement-skip",
        "edge bins zeroed without centering the spectrum first",
        ("FMR-8",), "forecaster",
    ),
    FaultSpec(
        "input-grad-sign", "lstm.backprop", "arithmetic-operator",
        "gradient with respect to the input window has its sign flipped",
        ("FMR-9",), "forecaster",
    ),
    FaultSpec(
        "denormalize-uses-max", "series.Normalizer.denormalize", "constant-replacement",
        "inverse scaling adds the maximum instead of the minimum",
        (), "forecaster",
    ),
    FaultSpec(
        "forget-bias-zero", "lstm.init_params", "constant-replacement",
        "forget-gate bias initialised to 0 instead of 1",
        (), "forecaster",
    ),
    FaultSpec(
        "skip-grad-clip", "forecaster.train", "statement-skip",
        "gradient norm clipping is skipped",
        (), "forecaster",
    ),
    FaultSpec(
        "target-overlaps-window", "series.make_sequences", "boundary-shift",
        "targets start one step early, overlapping the input window",
        (), "forecaster",
    ),
)

_BY_ID = {f.id: f for f in CATALOG}
_active: str | None = None


def list_faults() -> list[FaultSpec]:
    return list(CATALOG)


def get_fault(fault_id: str) -> FaultSpec:
    try:
        return _BY_ID[fault_id]
    except KeyError:
        raise KeyError(f"unknown fault id {fault_id!r}") from None


def active(fault_id: str) -> bool:
    """True when ``fault_id`` is the currently injected fault."""
    return _active == fault_id


def active_fault() -> str | None:
    return _active


def activate(fault_id: str | None) -> None:
    global _active
    if fault_id is not None:
        get_fault(fault_id)
    _active = fault_id


@contextlib.contextmanager
def injected(fault_id: str | None):
    previous = _active
    activate(fault_id)
    try:
        yield
    finally:
        activate(previous)

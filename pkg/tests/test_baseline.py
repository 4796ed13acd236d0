import json
import math
import statistics

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SMALL
from metamorph import faults
from metamorph.baseline import (REFERENCE_FORECASTS, REFERENCE_STATS, BaselineSet, RunSample,
                                calibration_error, collect_runs, compute_baseline, summarize,
                                summarize_values, within_ci)
from metamorph.errors import TooFewRuns


def test_reference_sample_reproduces_published_summary():
    b = summarize_values(REFERENCE_FORECASTS)
    for key, want in REFERENCE_STATS.items():
        assert getattr(b, key) == pytest.approx(want, abs=1e-6), key
    assert calibration_error() < 1e-6


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40))
def test_agrees_with_statistics_module(values):
    b = summarize_values(values)
    assert b.mean == pytest.approx(statistics.fmean(values), rel=1e-9, abs=1e-6)
    assert b.sd == pytest.approx(statistics.stdev(values), rel=1e-9, abs=1e-6)
    assert b.se == pytest.approx(b.sd / math.sqrt(len(values)), rel=1e-12, abs=1e-12)
    assert b.low <= b.mean <= b.high
    assert b.high - b.low == pytest.approx(2 * 1.96 * b.se, rel=1e-9, abs=1e-9)


def test_population_sd_fault_narrows_interval():
    clean = summarize_values(REFERENCE_FORECASTS)
    with faults.injected("baseline-sd-population"):
        bad = summarize_values(REFERENCE_FORECASTS)
        assert calibration_error() > 1e-3
    assert bad.sd < clean.sd


def test_too_few_runs():
    with pytest.raises(TooFewRuns):
        summarize_values([1.0])
    with pytest.raises(TooFewRuns):
        collect_runs(None, None, SMALL, n_runs=1)


def test_within_ci_is_inclusive():
    b = summarize_values([1.0, 3.0])
    assert within_ci(b, b.low) and within_ci(b, b.high)
    assert not within_ci(b, b.high + 1e-9)
    assert within_ci(b, b.high + 1e-9, atol=1e-8)


def test_metric_names():
    s = RunSample(0, 1.0, 2.0, 3.0)
    assert [s.metric(m) for m in ("forecast", "loss", "train_loss")] == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        s.metric("accuracy")


def test_runs_follow_seed_schedule(small_split):
    train_s, val_s = small_split
    cfg = SMALL.replace(epochs=1)
    runs = collect_runs(train_s, val_s, cfg, 3, base_seed=5)
    again = collect_runs(train_s, val_s, cfg.replace(seed=6), 2)
    assert [r.first_forecast for r in runs[1:]] == [r.first_forecast for r in again]


def test_baseline_set_round_trips_through_json(small_split):
    train_s, val_s = small_split
    bset = compute_baseline(train_s, val_s, SMALL.replace(epochs=1), n_runs=3)
    assert bset.n_runs == 3
    back = BaselineSet.from_dict(json.loads(json.dumps(bset.to_dict())))
    assert back == bset
    assert bset["forecast"] == summarize(bset.samples, "forecast")

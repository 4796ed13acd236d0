import io
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metamorph import faults
from metamorph.errors import (DuplicateTimestamp, InsufficientData, MalformedCsv, UnknownColumn,
                              ZeroRange)
from metamorph.series import (CsvConfig, FeatureTable, Normalizer, TimeSeries, default_split,
                              fit_normalizer, load_csv, load_series, make_sequences, series_to_table,
                              synth_series, synth_table, window_count, write_csv)


def enumerate_windows(length, t, h):
    """Brute-force oracle: every start index whose window and target both fit."""
    return [s for s in range(length) if s + t + h <= length]


def test_window_count_matches_enumeration_everywhere():
    for L, t, h in itertools.product(range(0, 51), range(1, 21), range(1, 6)):
        want = len(enumerate_windows(L, t, h))
        assert window_count(L, t, h) == want
        if want == 0:
            with pytest.raises(InsufficientData):
                make_sequences(np.arange(L, dtype=float), t, h)
        else:
            assert len(make_sequences(np.arange(L, dtype=float), t, h)) == want


@given(st.integers(1, 40), st.integers(1, 8), st.integers(1, 4))
def test_windows_are_contiguous_slices(L, t, h):
    vals = np.arange(L, dtype=float) * 1.5
    if L < t + h:
        return
    ds = make_sequences(vals, t, h)
    for s, (x, y) in enumerate(zip(ds.inputs, ds.targets)):
        assert np.array_equal(x, vals[s:s + t])
        assert np.array_equal(y, vals[s + t:s + t + h])


def test_make_sequences_rejects_missing_and_bad_sizes():
    with pytest.raises(ValueError):
        make_sequences(np.array([1.0, np.nan, 2.0, 3.0]), 1, 1)
    with pytest.raises(ValueError):
        make_sequences(np.arange(5.0), 0, 1)


def test_normalizer_round_trip_and_extrapolation():
    n = Normalizer(10.0, 30.0)
    assert n.normalize(np.array([10.0, 20.0, 30.0])).tolist() == [0.0, 0.5, 1.0]
    # no clipping outside the training range
    assert n.normalize(50.0) == pytest.approx(2.0)
    assert n.normalize(0.0) == pytest.approx(-0.5)
    assert n.denormalize(n.normalize(17.25)) == pytest.approx(17.25, abs=1e-12)


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_normalized_training_data_spans_unit_interval(values):
    s = TimeSeries.from_values(values)
    if np.ptp(s.values) == 0:
        with pytest.raises(ZeroRange):
            fit_normalizer(s)
        return
    z = fit_normalizer(s).normalize(s.values)
    assert z.min() == 0.0
    assert z.max() == pytest.approx(1.0, abs=1e-12)


def test_zero_range_rejected():
    with pytest.raises(ZeroRange):
        fit_normalizer(TimeSeries.from_values([7.0] * 5))
    with pytest.raises(ZeroRange):
        Normalizer(0.0, 0.0)


def test_zero_range_guard_fault_lets_nonzero_constant_through():
    with faults.injected("zero-range-guard-uses-max"):
        Normalizer(7.0, 7.0)
        with pytest.raises(ZeroRange):
            Normalizer(0.0, 0.0)


def test_load_csv_sorts_and_keeps_missing():
    text = "timestamp,a,value\n3,1.0,30\n1,,10\n2,2.5,20\n"
    table = load_csv(io.StringIO(text))
    assert table.timestamps.tolist() == [1, 2, 3]
    assert np.isnan(table.column("a")[0])
    assert table.target.tolist() == [10.0, 20.0, 30.0]


def test_load_csv_iso_dates():
    text = "timestamp,value\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n"
    s = load_series(io.StringIO(text))
    assert s.values.tolist() == [1.0, 2.0, 3.0]
    assert s.timestamps.dtype.kind == "M"


@pytest.mark.parametrize("text, err", [
    ("", MalformedCsv),
    ("timestamp,value\n", MalformedCsv),
    ("timestamp,value\n1,2\n1,3\n", DuplicateTimestamp),
    ("timestamp,value\n1,abc\n", MalformedCsv),
    ("timestamp,value\n1,2,3\n", MalformedCsv),
    ("timestamp,value\n1,inf\n", MalformedCsv),
    ("timestamp,value\nyesterday,1\n", MalformedCsv),
    ("time,value\n1,2\n", UnknownColumn),
    ("timestamp,value,value\n1,2,3\n", MalformedCsv),
    ("timestamp,value\n1,2\n2020-01-01,3\n", MalformedCsv),
])
def test_load_csv_errors(text, err):
    with pytest.raises(err):
        load_csv(io.StringIO(text))


def test_unknown_target_column():
    with pytest.raises(UnknownColumn):
        load_csv(io.StringIO("timestamp,value\n1,2\n"), CsvConfig(target_column="sales"))


def test_loader_skips_sort_fault_keeps_file_order():
    text = "timestamp,value\n2,20\n1,10\n"
    with faults.injected("loader-skips-sort"):
        assert load_series(io.StringIO(text)).values.tolist() == [20.0, 10.0]


@given(st.lists(st.one_of(st.none(), st.floats(-1e9, 1e9)), min_size=1, max_size=30), st.randoms())
def test_write_then_load_round_trips_exactly(cells, rnd):
    vals = np.array([np.nan if c is None else c for c in cells])
    ts = np.arange(len(vals)) * 3 + 5
    order = list(range(len(vals)))
    rnd.shuffle(order)
    table = FeatureTable(ts[order], {"value": vals[order]}, "value")
    buf = io.StringIO()
    write_csv(buf, table)
    buf.seek(0)
    back = load_csv(buf)
    assert back.timestamps.tolist() == ts.tolist()
    assert np.array_equal(back.target, vals, equal_nan=True)


def test_feature_table_validation():
    with pytest.raises(ValueError):
        FeatureTable(np.arange(3), {"a": np.zeros(2)}, "a")
    with pytest.raises(UnknownColumn):
        FeatureTable(np.arange(2), {"a": np.zeros(2)}, "b")
    t = synth_table(20, 0)
    assert t.target_name == "sales"
    assert "sales" not in t.feature_names
    with pytest.raises(UnknownColumn):
        t.column("nope")


def test_synthetic_data_is_seeded():
    a, _ = default_split(3)
    b, _ = default_split(3)
    c, _ = default_split(4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    train, val = default_split()
    assert (len(train), len(val)) == (750, 187)
    assert train.timestamps[-1] + 1 == val.timestamps[0]
    with pytest.raises(ValueError):
        synth_series("wobble", 5)


def test_series_is_read_only():
    s = TimeSeries.from_values([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0
    assert series_to_table(s).target.tolist() == [1.0, 2.0]

import math
import statistics

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metamorph import faults
from metamorph.correlation import (drop_missing_pairs, pearson, rank_features,
                                   remove_outlier_pairs)
from metamorph.errors import LengthMismatch, TargetConstant, TooFewPairs
from metamorph.series import FeatureTable, synth_table

finite = st.floats(-1e3, 1e3, allow_nan=False)


def paired(min_size=3, max_size=40):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite)))


def well_spread(v):
    return np.ptp(v) > 1e-3 * max(1.0, np.abs(v).max())


def test_zero_correlation_quadruple_is_exact():
    assert pearson([1, 0, -1, 0], [0, 1, 0, -1]).r == 0.0


@pytest.mark.parametrize("a", [0.5, -0.5, 2.0, -2.0, 10.0, -10.0])
@pytest.mark.parametrize("b", [-11.0, 0.0, 7.0])
def test_affine_image_has_unit_correlation(a, b):
    x = np.random.default_rng(0).normal(size=30)
    assert pearson(x, a * x + b).r == pytest.approx(math.copysign(1.0, a), abs=1e-10)


def test_matches_statistics_module():
    rng = np.random.default_rng(7)
    x = rng.normal(size=50)
    y = 0.3 * x + rng.normal(size=50)
    assert pearson(x, y).r == pytest.approx(statistics.correlation(x.tolist(), y.tolist()), abs=1e-12)


def test_hand_computed_value():
    # x = 1..4, y = 2,4,5,9: deviations (-1.5,-.5,.5,1.5) and (-3,-1,0,4); sxy = 11, sxx = 5, syy = 26
    assert pearson([1, 2, 3, 4], [2, 4, 5, 9]).r == pytest.approx(11 / math.sqrt(5 * 26), abs=1e-15)


@given(paired())
def test_bounded_and_symmetric(xy):
    x, y = xy
    r = pearson(x, y)
    if not r.defined:
        assert np.ptp(x) == 0 or np.ptp(y) == 0
        assert r.warnings
        return
    assert -1 - 1e-12 <= r.r <= 1 + 1e-12
    assert pearson(y, x).r == pytest.approx(r.r, abs=1e-12)


@given(paired(), st.permutations(range(40)))
def test_invariant_to_pair_order(xy, perm):
    x, y = xy
    idx = np.array([i for i in perm if i < len(x)])
    r, rp = pearson(x, y).r, pearson(x[idx], y[idx]).r
    if r is None:
        assert rp is None
    else:
        assert rp == pytest.approx(r, abs=1e-9)


@given(paired(), st.floats(0.1, 100), st.floats(-100, 100), st.booleans())
def test_affine_maps_flip_sign_only(xy, a, b, negate):
    x, y = xy
    assume(well_spread(x) and well_spread(y))
    a = -a if negate else a
    r = pearson(x, y).r
    assert pearson(x, a * y + b).r == pytest.approx(math.copysign(1, a) * r, abs=1e-9)


def test_constant_input_is_undefined_not_an_error():
    res = pearson([3, 3, 3], [1, 2, 3])
    assert res.r is None and not res.defined
    assert "undefined" in res.warnings[0]


def test_raw_policy_refuses_missing_cells():
    with pytest.raises(ValueError):
        pearson([1, np.nan, 3], [1, 2, 3])


def test_bad_inputs():
    with pytest.raises(LengthMismatch):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2], "robust")
    with pytest.raises(TooFewPairs):
        pearson([1.0], [2.0])
    with pytest.raises(TooFewPairs):
        pearson([1, np.nan, 3], [np.nan, 2, np.nan], "screened")


def test_pairwise_deletion():
    x, y, dropped = drop_missing_pairs([1, np.nan, 3, 4], [1, 2, np.nan, 4])
    assert x.tolist() == [1, 4] and y.tolist() == [1, 4] and dropped == 2


def test_outlier_fence():
    x = np.r_[np.arange(20.0), 1e6]
    y = np.r_[np.arange(20.0), 10.0]
    xs, ys, removed = remove_outlier_pairs(x, y)
    assert removed == (20,)
    assert len(xs) == 20
    # too few points: untouched
    assert remove_outlier_pairs([1, 2, 1e9], [1, 2, 3])[2] == ()


def test_screened_policy_warns_about_removed_outlier():
    x = np.r_[np.arange(20.0), 1e6]
    y = np.r_[np.arange(20.0) * 2, 10.0]
    res = pearson(x, y, "screened")
    assert res.r == pytest.approx(1.0, abs=1e-12)
    assert any("outlier" in w for w in res.warnings)
    assert res.outliers_removed == (20,)


def test_ranking_orders_by_magnitude_then_name():
    y = np.arange(10.0)
    table = FeatureTable(np.arange(10), {
        "y": y, "b_neg": -y, "a_pos": y, "weak": np.r_[y[:5], y[:5][::-1]], "flat": np.ones(10),
    }, "y")
    ranking = rank_features(table)
    assert ranking.names[:2] == ["a_pos", "b_neg"]
    assert ranking.undefined_names == ["flat"]
    assert ranking.get("b_neg").r == pytest.approx(-1.0)
    assert ranking.score("b_neg") == pytest.approx(1.0)
    with pytest.raises(KeyError):
        ranking.score("flat")


def test_constant_target_rejected():
    table = FeatureTable(np.arange(4), {"y": np.ones(4), "x": np.arange(4.0)}, "y")
    with pytest.raises(TargetConstant):
        rank_features(table)


def test_faults_change_pearson():
    x = np.random.default_rng(3).normal(size=20)
    y = x + np.random.default_rng(4).normal(size=20)
    clean = pearson(x, y).r
    for fid in ("corr-missing-sqrt", "corr-ddof-mismatch", "corr-skip-centering", "corr-skip-first-pair",
                "corr-numerator-mean-short", "corr-asymmetric-denominator"):
        with faults.injected(fid):
            assert pearson(x, 5 + y * 3).r != pytest.approx(clean, abs=1e-9), fid


def test_synth_table_ranking_shape():
    ranking = rank_features(synth_table(300, 0))
    assert set(ranking.names) == {"memory", "cpu", "disk", "uptime"}
    assert ranking.names[-1] in {"disk", "uptime"}

import cmath

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metamorph import faults
from metamorph.errors import SeriesTooShort
from metamorph.series import TimeSeries
from metamorph.spectral import find_elbow, reconstruction_loss, timestep_curve


def slow_loss(values, ts):
    """Explicit O(n^2) DFT with the centred edge bins dropped, no numpy FFT."""
    total, count = 0.0, 0
    for s in range(len(values) - ts + 1):
        w = values[s:s + ts]
        spec = [sum(w[n] * cmath.exp(-2j * cmath.pi * k * n / ts) for n in range(ts)) for k in range(ts)]
        # after fftshift the first bin is k = ts // 2 (Nyquist side) and the last is k = ts // 2 - 1
        lo, hi = ts - ts // 2, (ts - ts // 2 - 1) % ts
        for k in {lo % ts, hi}:
            spec[k] = 0
        rec = [sum(spec[k] * cmath.exp(2j * cmath.pi * k * n / ts) for k in range(ts)) / ts for n in range(ts)]
        total += sum(abs(w[n] - rec[n]) ** 2 for n in range(ts))
        count += 1
    return total / (count * ts)


@pytest.mark.parametrize("ts", [5, 6, 7, 8])
def test_matches_explicit_dft(ts):
    vals = np.random.default_rng(ts).normal(size=20)
    assert reconstruction_loss(vals, ts) == pytest.approx(slow_loss(vals, ts), rel=1e-10, abs=1e-12)


def test_constant_series_has_zero_loss():
    curve = timestep_curve(np.full(60, 4.2))
    assert np.all(np.abs(curve.losses) <= 1e-12)
    assert curve.elbow == 5


def test_sinusoid_elbow_in_band():
    t = np.arange(200)
    curve = timestep_curve(np.sin(2 * np.pi * t / 20))
    assert 10 <= curve.elbow <= 40
    assert curve.steps[0] == 5 and curve.steps[-1] == 200
    assert np.all(curve.losses >= 0)


@given(arrays(np.float64, st.integers(6, 40), elements=st.floats(-100, 100)), st.floats(-1e3, 1e3))
def test_adding_a_constant_leaves_curve_unchanged(vals, c):
    a = timestep_curve(vals, max_step=15).losses
    b = timestep_curve(vals + c, max_step=15).losses
    assert np.allclose(a, b, rtol=0, atol=1e-9 * max(1.0, np.abs(vals).max() + abs(c)) ** 2)


def test_skip_shift_fault_breaks_dc_invariance():
    vals = np.random.default_rng(0).normal(size=30)
    with faults.injected("spectral-skip-shift"):
        assert reconstruction_loss(vals + 10, 6) != pytest.approx(reconstruction_loss(vals, 6))


def test_elbow_rule():
    steps = np.arange(5, 11)
    # slopes 10, 5, 0.5, 0.2, 0.1: first below 10% of 10 is the third (5 -> 4.5 -> ...)
    losses = np.array([30.0, 20.0, 15.0, 14.5, 14.3, 14.2])
    assert find_elbow(steps, losses) == 8
    assert find_elbow(steps, np.zeros(6)) == 5
    assert find_elbow([5], [1.0]) == 5


def test_too_short_and_missing():
    with pytest.raises(SeriesTooShort):
        timestep_curve(np.arange(5.0))
    with pytest.raises(ValueError):
        timestep_curve(np.array([1.0, np.nan, 2, 3, 4, 5, 6]))
    assert len(timestep_curve(TimeSeries.from_values(np.arange(6.0))).points) == 2

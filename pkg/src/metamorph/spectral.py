"""Reconstruction loss versus window length, for choosing TIME_STEPS.

For each candidate window length every stride-1 window is moved to the
frequency domain, centred, stripped of its two outermost bins, shifted back
and inverted. The normalised squared error of the reconstruction is averaged
over windows; where the resulting curve flattens is a reasonable window length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import faults
from .errors import SeriesTooShort

MIN_STEP = 5
ELBOW_FRACTION = 0.1
FLAT_TOL = 1e-12  # curves flatter than this (rounding noise only) have their elbow at the first step


@dataclass(frozen=True)
class TimestepLossCurve:
    steps: np.ndarray
    losses: np.ndarray
    elbow: int

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(int(s), float(l)) for s, l in zip(self.steps, self.losses)]


def reconstruction_loss(values, time_step: int) -> float:
    windows = sliding_window_view(np.asarray(values, dtype=np.float64), time_step)
    spectrum = np.fft.fft(windows, axis=1)
    if faults.active("spectral-skip-shift"):
        spectrum[:, 0] = 0
        spectrum[:, -1] = 0
        recon = np.fft.ifft(spectrum, axis=1)
    else:
        centred = np.fft.fftshift(spectrum, axes=1)
        centred[:, 0] = 0
        centred[:, -1] = 0
        recon = np.fft.ifft(np.fft.ifftshift(centred, axes=1), axis=1)
    err = np.abs(windows - recon) ** 2
    return float(err.sum() / (len(windows) * time_step))


def find_elbow(steps, losses, fraction: float = ELBOW_FRACTION) -> int:
    """Smallest step whose backward slope magnitude is below ``fraction`` of the steepest one."""
    steps = np.asarray(steps)
    slopes = np.abs(np.diff(np.asarray(losses, dtype=np.float64)))
    losses = np.asarray(losses, dtype=np.float64)
    if len(slopes) == 0 or slopes.max() <= FLAT_TOL * max(1.0, float(np.abs(losses).max())):
        return int(steps[0])
    below = np.flatnonzero(slopes < fraction * slopes.max())
    return int(steps[below[0] + 1]) if len(below) else int(steps[-1])


def timestep_curve(values, min_step: int = MIN_STEP, max_step: int | None = None) -> TimestepLossCurve:
    vals = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if np.isnan(vals).any():
        raise ValueError("series has missing cells")
    if len(vals) < min_step + 1:
        raise SeriesTooShort(f"need at least {min_step + 1} points, got {len(vals)}")
    top = len(vals) if max_step is None else min(max_step, len(vals))
    steps = np.arange(min_step, top + 1)
    losses = np.array([reconstruction_loss(vals, int(s)) for s in steps])
    return TimestepLossCurve(steps, losses, find_elbow(steps, losses))

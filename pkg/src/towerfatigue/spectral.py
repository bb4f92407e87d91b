"""Welch PSD estimation, rotor harmonics, and the wind-speed/frequency heatmap.

PSDs of the tower-base fore-aft moment are estimated per simulation with a
Hann window and 50% overlap, averaged per wind-speed group, and assembled into
a log10 heatmap with rotor harmonic overlays (1P and the 3P/6P/9P multiples of
a three-bladed rotor).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import signal

from .errors import ConsistencyError, DomainError

LOG10_FLOOR = 1e-30


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided PSD on a frequency grid from 0 to fs/2."""

    frequencies: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.frequencies.shape != self.values.shape:
            raise ConsistencyError("frequency and value arrays must match")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ConsistencyError("frequencies must be strictly increasing")
        if np.any(self.values < 0):
            raise ConsistencyError("PSD values must be nonnegative")


@dataclass(frozen=True)
class HarmonicSet:
    """Rotor harmonic frequencies: f_1p and its 3/6/9 multiples [Hz]."""

    f_1p: float
    f_3p: float
    f_6p: float
    f_9p: float

    def __post_init__(self):
        for n, f in ((3, self.f_3p), (6, self.f_6p), (9, self.f_9p)):
            if f != n * self.f_1p:
                raise ConsistencyError(f"f_{n}p must equal {n} * f_1p exactly")


@dataclass(frozen=True)
class PsdHeatmap:
    """log10 PSD matrix (frequency rows x wind speed columns) with overlays."""

    wind_speeds: np.ndarray
    frequencies: np.ndarray
    log10_values: np.ndarray
    harmonics_per_speed: Tuple[HarmonicSet, ...]

    def __post_init__(self):
        object.__setattr__(self, "wind_speeds", np.asarray(self.wind_speeds, dtype=float))
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "log10_values", np.asarray(self.log10_values, dtype=float))
        if self.log10_values.shape != (len(self.frequencies), len(self.wind_speeds)):
            raise ConsistencyError("heatmap matrix must be (n_freq, n_speeds)")
        if not np.all(np.isfinite(self.log10_values)):
            raise ConsistencyError("heatmap entries must be finite (floor applied)")


def welch_psd(series, fs: float, segment_length: int = 4096) -> PsdEstimate:
    """One-sided Welch PSD: Hann window, 50% overlap, per-segment mean removal.

    Density normalization, so the integral of the PSD over frequency
    approximates the series variance.
    """
    x = np.asarray(series, dtype=float)
    if segment_length < 8:
        raise DomainError(f"segment length must be >= 8, got {segment_length}")
    if x.size < segment_length:
        raise DomainError(
            f"series of {x.size} samples is shorter than one segment "
            f"({segment_length})"
        )
    freqs, psd = signal.welch(x, fs=fs, window="hann", nperseg=segment_length,
                              noverlap=segment_length // 2, detrend="constant",
                              scaling="density")
    return PsdEstimate(freqs, psd)


def rotor_harmonics(mean_rpm: float) -> HarmonicSet:
    """Harmonics from the time-averaged rotor speed: f_1p = rpm / 60."""
    if mean_rpm < 0:
        raise DomainError(f"rotor speed must be nonnegative, got {mean_rpm}")
    f_1p = mean_rpm / 60.0
    return HarmonicSet(f_1p, 3.0 * f_1p, 6.0 * f_1p, 9.0 * f_1p)


def aggregate_heatmap(psds: Sequence[Tuple[float, PsdEstimate]],
                      harmonics: Sequence[Tuple[float, HarmonicSet]],
                      f_range: Tuple[float, float] = (0.0, np.inf),
                      u_range: Tuple[float, float] = (0.0, np.inf)) -> PsdHeatmap:
    """Group PSDs by mean wind speed, average each group, crop, and take log10.

    All PSDs must share one frequency grid.  Wind speeds are matched exactly
    (they come from the sampler's bin centers).  Values are floored before the
    log so the matrix stays finite.
    """
    if not psds:
        raise DomainError("no PSDs to aggregate")
    grid = psds[0][1].frequencies
    for _, est in psds:
        if est.frequencies.shape != grid.shape or not np.array_equal(est.frequencies, grid):
            raise ConsistencyError("all PSDs must share one frequency grid")
    groups = {}
    for u, est in psds:
        groups.setdefault(u, []).append(est.values)
    speeds = np.array(sorted(u for u in groups if u_range[0] <= u <= u_range[1]))
    if speeds.size == 0:
        raise DomainError("no wind speeds inside the requested range")
    fmask = (grid >= f_range[0]) & (grid <= f_range[1])
    matrix = np.empty((int(fmask.sum()), len(speeds)))
    for col, u in enumerate(speeds):
        mean_psd = np.mean(groups[u], axis=0)
        matrix[:, col] = np.log10(np.maximum(mean_psd[fmask], LOG10_FLOOR))
    overlay_map = dict(harmonics)
    overlays = tuple(overlay_map.get(u, rotor_harmonics(0.0)) for u in speeds)
    return PsdHeatmap(speeds, grid[fmask], matrix, overlays)


def write_heatmap(heatmap: PsdHeatmap, csv_path, json_path) -> None:
    """CSV matrix (rows = frequencies, columns = wind speeds) plus JSON axes."""
    header = "frequency_hz," + ",".join(f"u_{u:g}_ms" for u in heatmap.wind_speeds)
    rows = np.column_stack([heatmap.frequencies, heatmap.log10_values])
    np.savetxt(csv_path, rows, delimiter=",", header=header, comments="")
    sidecar = {
        "wind_speeds_ms": heatmap.wind_speeds.tolist(),
        "frequencies_hz": [float(heatmap.frequencies[0]), float(heatmap.frequencies[-1])],
        "n_frequencies": int(len(heatmap.frequencies)),
        "log10_floor": LOG10_FLOOR,
        "harmonics": [
            {"u_ms": float(u), "f_1p_hz": h.f_1p, "f_3p_hz": h.f_3p,
             "f_6p_hz": h.f_6p, "f_9p_hz": h.f_9p}
            for u, h in zip(heatmap.wind_speeds, heatmap.harmonics_per_speed)
        ],
    }
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2)

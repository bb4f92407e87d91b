"""Rainflow cycle counting, S-N life, and Miner damage accumulation.

The chain is: moment time series -> turning points -> four-point rainflow
cycles (full cycles plus residual halves) -> stress ranges via elastic bending
of the annular cross section -> cycles to failure from a two-segment S-N law
with thickness correction -> linear damage accumulation, first per simulated
event and then weighted over the design lifetime by state occurrence counts.

All operations are pure functions; parallel callers reduce results after
sorting by state id so aggregation order is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, DomainError, GeometryError


@dataclass(frozen=True)
class SNCurve:
    """Two-segment S-N law N = a * [ds * (t/t_ref)^k]^(-m) with a knee.

    Intercepts are stored as log10(a) in the MPa stress convention used by the
    published design curves; stress inputs in Pa are converted internally.
    Segment 1 (slope ``m1``) applies up to ``n_transition`` cycles, segment 2
    (slope ``m2 > m1``) beyond.  The two segments must meet at the transition.
    A degenerate single-slope curve (``m2 == m1`` and equal intercepts) is
    accepted for scaling studies.

    The thickness correction ``(t/t_ref)^k`` penalizes plates thicker than the
    reference; it is not applied for ``t <= t_ref``.

    Defaults are the published in-air constants of the welded-joint curve with
    slopes 3 and 5 and a knee at 1e7 cycles.
    """

    log10_a1: float = 12.010
    m1: float = 3.0
    log10_a2: float = 15.350
    m2: float = 5.0
    n_transition: float = 1.0e7
    thickness_exponent_k: float = 0.20
    t_ref: float = 0.025  # m

    def __post_init__(self):
        if self.m1 > self.m2:
            raise ConsistencyError("segment slopes must satisfy m1 <= m2")
        s1 = (10.0 ** self.log10_a1 / self.n_transition) ** (1.0 / self.m1)
        s2 = (10.0 ** self.log10_a2 / self.n_transition) ** (1.0 / self.m2)
        if abs(s1 - s2) > 1e-9 * s1:
            raise ConsistencyError(
                f"S-N segments do not meet at the transition: {s1:.6g} vs {s2:.6g} MPa"
            )

    @classmethod
    def single_slope(cls, log10_a: float, m: float, thickness_exponent_k: float = 0.20,
                     t_ref: float = 0.025) -> "SNCurve":
        """Degenerate one-slope curve, useful for exact-scaling oracles."""
        return cls(log10_a1=log10_a, m1=m, log10_a2=log10_a, m2=m,
                   n_transition=1.0e7, thickness_exponent_k=thickness_exponent_k,
                   t_ref=t_ref)


@dataclass(frozen=True)
class CycleSet:
    """Rainflow result: parallel arrays of ranges and half/full counts."""

    ranges: np.ndarray = field(default_factory=lambda: np.empty(0))
    counts: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        object.__setattr__(self, "ranges", np.asarray(self.ranges, dtype=float))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=float))
        if self.ranges.shape != self.counts.shape:
            raise ConsistencyError("ranges and counts must have equal length")

    def __len__(self):
        return len(self.ranges)

    @property
    def total_half_cycles(self) -> float:
        return float(2.0 * self.counts.sum())


@dataclass(frozen=True)
class SectionDamageProfile:
    """Damage per tower section, indexed by section midpoint height."""

    section_midpoints: np.ndarray
    damage: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "section_midpoints",
                           np.asarray(self.section_midpoints, dtype=float))
        object.__setattr__(self, "damage", np.asarray(self.damage, dtype=float))
        if self.section_midpoints.shape != self.damage.shape:
            raise ConsistencyError("midpoints and damage must have equal length")
        if np.any(self.damage < 0):
            raise ConsistencyError("damage values must be nonnegative")


def turning_points(series) -> np.ndarray:
    """Strict local extrema of a series, endpoints included.

    Equal successive samples are collapsed first, so the result alternates
    rises and falls.  A constant series has no turning points.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        return np.empty(0)
    keep = np.concatenate([[True], np.diff(x) != 0.0])
    x = x[keep]
    if x.size < 2:
        return np.empty(0)
    if x.size == 2:
        return x
    d = np.sign(np.diff(x))
    interior = d[1:] != d[:-1]
    mask = np.concatenate([[True], interior, [True]])
    return x[mask]


def rainflow(series) -> CycleSet:
    """Four-point rainflow counting with residual half cycles.

    Full cycles are extracted whenever the inner range of four consecutive
    turning points is bounded by both outer ranges; each adjacent pair left in
    the residual contributes a half cycle.  The total half-cycle count always
    equals the number of turning points minus one.
    """
    tp = turning_points(series)
    ranges: List[float] = []
    counts: List[float] = []
    stack: List[float] = []
    for point in tp:
        stack.append(point)
        while len(stack) >= 4:
            r_out1 = abs(stack[-3] - stack[-4])
            r_in = abs(stack[-2] - stack[-3])
            r_out2 = abs(stack[-1] - stack[-2])
            if r_in <= r_out1 and r_in <= r_out2:
                ranges.append(r_in)
                counts.append(1.0)
                del stack[-3:-1]
            else:
                break
    for a, b in zip(stack[:-1], stack[1:]):
        ranges.append(abs(a - b))
        counts.append(0.5)
    return CycleSet(np.array(ranges), np.array(counts))


def moment_to_stress_range(delta_m, r, t):
    """Bending stress range of an annulus: ds = dM * r / I, I = pi/4 (r^4 - (r-t)^4)."""
    if not 0.0 < t < r:
        raise GeometryError(f"need 0 < t < r, got t={t}, r={r}")
    inertia = math.pi / 4.0 * (r**4 - (r - t) ** 4)
    return np.asarray(delta_m) * r / inertia


def cycles_to_failure(delta_sigma, t, curve: SNCurve = SNCurve()):
    """Cycles to failure for stress range ``delta_sigma`` [Pa] and thickness ``t`` [m].

    Segment 1 is tried first; if the predicted life exceeds the transition the
    low-stress segment 2 applies.  Thickness correction only for t > t_ref.
    Accepts scalars or arrays.
    """
    ds = np.asarray(delta_sigma, dtype=float)
    if np.any(ds <= 0.0):
        raise DomainError("stress ranges must be positive")
    ds_mpa = ds / 1.0e6
    if t > curve.t_ref:
        ds_mpa = ds_mpa * (t / curve.t_ref) ** curve.thickness_exponent_k
    n1 = 10.0 ** curve.log10_a1 * ds_mpa ** (-curve.m1)
    n2 = 10.0 ** curve.log10_a2 * ds_mpa ** (-curve.m2)
    n = np.where(n1 > curve.n_transition, n2, n1)
    return float(n) if np.isscalar(delta_sigma) else n


def event_damage(record, geometry, curve: SNCurve, trim: float) -> np.ndarray:
    """Miner damage per tower section for one simulated event.

    The first ``trim`` seconds are discarded; station moments are linearly
    interpolated to each section midpoint; rainflow ranges are converted to
    stress via the section's annulus and accumulated as sum(n_i / N_i).
    """
    mids = geometry.section_midpoints
    radii = geometry.midpoint_radii
    z_st = np.asarray(record.station_heights, dtype=float)
    if mids[0] < z_st[0] or mids[-1] > z_st[-1]:
        raise ConsistencyError(
            f"section midpoints [{mids[0]:.3f}, {mids[-1]:.3f}] outside station span "
            f"[{z_st[0]:.3f}, {z_st[-1]:.3f}]"
        )
    time = np.asarray(record.time, dtype=float)
    keep = time >= trim
    moments = np.asarray(record.fore_aft_moment, dtype=float)[:, keep]
    damage = np.zeros(len(mids))
    for i, (z, r, t) in enumerate(zip(mids, radii, geometry.thicknesses)):
        j = np.searchsorted(z_st, z, side="right") - 1
        j = min(max(j, 0), len(z_st) - 2)
        w = (z - z_st[j]) / (z_st[j + 1] - z_st[j])
        series = (1.0 - w) * moments[j] + w * moments[j + 1]
        cycles = rainflow(series)
        if len(cycles) == 0:
            continue
        nonzero = cycles.ranges > 0.0
        if not np.any(nonzero):
            continue
        ds = moment_to_stress_range(cycles.ranges[nonzero], r, t)
        n_fail = cycles_to_failure(ds, t, curve)
        damage[i] = float(np.sum(cycles.counts[nonzero] / n_fail))
    return damage


def lifetime_damage(event_damages: Sequence[Tuple[int, np.ndarray]], states,
                    lt: float, t_event: float, section_midpoints) -> SectionDamageProfile:
    """Aggregate per-event damages into the lifetime damage profile.

    Each state's damage is multiplied by its expected occurrence count
    n = (lt / t_event) * weight and summed per section.  States and damages
    are matched by id; any mismatch is an error.  The reduction runs in id
    order, so the result is independent of input ordering.
    """
    if t_event <= 0:
        raise DomainError("event duration must be positive")
    by_id = {sid: np.asarray(d, dtype=float) for sid, d in event_damages}
    state_ids = {st.id for st in states}
    if set(by_id) != state_ids:
        raise ConsistencyError(
            f"damage ids and state ids differ: {sorted(set(by_id) ^ state_ids)[:5]} ..."
        )
    first = next(iter(by_id.values()))
    total = np.zeros_like(first)
    for st in sorted(states, key=lambda s: s.id):
        total = total + by_id[st.id] * ((lt / t_event) * st.weight)
    return SectionDamageProfile(np.asarray(section_midpoints, dtype=float), total)


def write_damage_csv(profile: SectionDamageProfile, path) -> None:
    """Damage profile CSV: ``z_mid_m, damage``."""
    with open(path, "w") as fh:
        fh.write("z_mid_m,damage\n")
        for z, d in zip(profile.section_midpoints, profile.damage):
            fh.write(f"{float(z)!r},{float(d)!r}\n")


def read_damage_csv(path) -> SectionDamageProfile:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SectionDamageProfile(data[:, 0], data[:, 1])


def write_cycles_csv(cycles: CycleSet, path) -> None:
    """Cycle set CSV: ``range_pa, count``."""
    with open(path, "w") as fh:
        fh.write("range_pa,count\n")
        for r, c in zip(cycles.ranges, cycles.counts):
            fh.write(f"{float(r)!r},{float(c)}\n")

"""Stratified wind-wave state sampling for lifetime fatigue aggregation.

The operating wind range is split into uniform bins; each bin carries the
probability mass of the wind-speed density over that bin.  Wave height and
peak period are sampled deterministically at mid-stratum quantiles of their
conditional CDFs, so the whole procedure is reproducible bit-for-bit: seeds
are integer labels forwarded to the response provider, never random draws
made here.  Final state weights are normalized to sum to one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence

from . import distributions as dist
from .distributions import WindSpeedModel
from .errors import ConfigurationError

STATE_CSV_HEADER = ["id", "u_ms", "seed", "sigma_w", "hs_m", "tp_s", "mww_rad", "weight"]


@dataclass(frozen=True)
class SamplingPlan:
    """Stratification plan for the environmental state set.

    ``n_u`` wind bins on [v_in, v_out]; ``n_hs`` wave heights per wind bin;
    ``n_tp`` peak periods per wave height; ``n_seeds`` turbulence seeds per
    (u, hs, tp) combination when ``turbulent``.  ``m_ww_fixed`` is the single
    misalignment angle assigned to every state.
    """

    n_u: int
    n_hs: int
    n_tp: int
    n_seeds: int = 1
    v_in: float = 3.0
    v_out: float = 25.0
    turbulent: bool = True
    iec_class: str = "A"
    m_ww_fixed: float = 0.0

    def __post_init__(self):
        if min(self.n_u, self.n_hs, self.n_tp, self.n_seeds) < 1:
            raise ConfigurationError("all bin/seed counts must be >= 1")
        if not (self.v_out > self.v_in >= 0.0):
            raise ConfigurationError(
                f"need v_out > v_in >= 0, got v_in={self.v_in}, v_out={self.v_out}"
            )
        if self.iec_class not in ("A", "B", "C"):
            raise ConfigurationError(f"unknown IEC class {self.iec_class!r}")

    @property
    def n_states(self) -> int:
        n = self.n_u * self.n_hs * self.n_tp
        return n * self.n_seeds if self.turbulent else n


@dataclass(frozen=True)
class EnvironmentalState:
    """One weighted load case: (U, seed, sigma_w, Hs, Tp, M_ww, weight)."""

    id: int
    u: float
    seed: int
    sigma_w: float
    hs: float
    tp: float
    m_ww: float
    weight: float


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     rel_tol: float = 1e-9) -> float:
    """Adaptive Simpson quadrature of ``f`` on [a, b].

    The subdivision tolerance is relative to the running whole-interval
    estimate; integrands here are smooth densities, so this converges fast.
    """
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    scale = max(abs(whole), 1e-300)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth > 48 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, fa, lm, flm, m, fm, left, tol / 2.0, depth + 1)
                + recurse(m, fm, rm, frm, b, fb, right, tol / 2.0, depth + 1))

    return recurse(a, fa, m, fm, b, fb, whole, rel_tol * scale, 0)


def wind_bin_probability(i: int, plan: SamplingPlan,
                         model: WindSpeedModel = WindSpeedModel()):
    """Center speed and probability mass of wind bin ``i`` (1-based).

    Returns ``(u_i, p_i)`` with ``u_i = v_in + (i - 1/2) * delta`` and ``p_i``
    the integral of the wind density over the bin.
    """
    if not 1 <= i <= plan.n_u:
        raise IndexError(f"wind bin index {i} outside 1..{plan.n_u}")
    delta = (plan.v_out - plan.v_in) / plan.n_u
    u_i = plan.v_in + (i - 0.5) * delta
    p_i = adaptive_simpson(lambda u: dist.wind_speed_pdf(u, model),
                           u_i - 0.5 * delta, u_i + 0.5 * delta)
    return u_i, p_i


def sample_states(plan: SamplingPlan,
                  model: WindSpeedModel = WindSpeedModel()) -> List[EnvironmentalState]:
    """Build the full weighted environmental state set.

    For each wind bin center u_i: wave heights at conditional quantiles
    (j - 0.5)/n_hs, then peak periods at (k - 0.5)/n_tp conditioned on each
    height.  Turbulent plans expand every (u, hs, tp) into ``n_seeds`` states
    labelled seed = 1..n_seeds with the wind-bin mass split evenly across all
    sub-states; steady plans carry seed = 0 and sigma_w = 0.  Weights are
    normalized to sum to exactly one.
    """
    states: List[EnvironmentalState] = []
    seeds = range(1, plan.n_seeds + 1) if plan.turbulent else (0,)
    n_split = plan.n_hs * plan.n_tp * (plan.n_seeds if plan.turbulent else 1)
    sid = 0
    for i in range(1, plan.n_u + 1):
        u_i, p_i = wind_bin_probability(i, plan, model)
        sigma_w = dist.turbulence_std(u_i, plan.iec_class, model) if plan.turbulent else 0.0
        for j in range(1, plan.n_hs + 1):
            q_hs = (j - 0.5) / plan.n_hs
            hs = dist.invert_cdf(lambda x: dist.wave_height_cdf(x, u_i), q_hs,
                                 dist.HS_BRACKET)
            for k in range(1, plan.n_tp + 1):
                q_tp = (k - 0.5) / plan.n_tp
                tp = dist.invert_cdf(lambda x: dist.wave_period_cdf(x, hs), q_tp,
                                     dist.TP_BRACKET)
                for s in seeds:
                    sid += 1
                    states.append(EnvironmentalState(
                        id=sid, u=u_i, seed=s, sigma_w=sigma_w, hs=hs, tp=tp,
                        m_ww=plan.m_ww_fixed, weight=p_i / n_split))
    total = math.fsum(st.weight for st in states)
    if total <= 0.0:
        raise ConfigurationError("sampled wind-bin probabilities sum to zero")
    return [EnvironmentalState(st.id, st.u, st.seed, st.sigma_w, st.hs, st.tp,
                               st.m_ww, st.weight / total) for st in states]


def write_states_csv(states: Sequence[EnvironmentalState], path) -> None:
    """Write the state table with header id,u_ms,seed,sigma_w,hs_m,tp_s,mww_rad,weight."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATE_CSV_HEADER)
        for st in states:
            writer.writerow([st.id, repr(float(st.u)), st.seed,
                             repr(float(st.sigma_w)), repr(float(st.hs)),
                             repr(float(st.tp)), repr(float(st.m_ww)),
                             repr(float(st.weight))])


def read_states_csv(path) -> List[EnvironmentalState]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != STATE_CSV_HEADER:
            raise ConfigurationError(f"unexpected state CSV header: {header}")
        return [EnvironmentalState(int(r[0]), float(r[1]), int(r[2]), float(r[3]),
                                   float(r[4]), float(r[5]), float(r[6]), float(r[7]))
                for r in reader]

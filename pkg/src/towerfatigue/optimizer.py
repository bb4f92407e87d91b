"""Constrained tower-mass minimization by sequential quadratic programming.

The solver works on variables normalized to [0, 1] by their bounds (diameters
and thicknesses differ by two orders of magnitude) and on an objective
normalized by its starting magnitude, which makes the iterates invariant to
positive rescaling of the objective.  Each iteration linearizes the inequality
constraints, solves a dense quadratic subproblem with a damped-BFGS Hessian
(reduced to a least-distance problem and solved through nonnegative least
squares), and accepts steps by a backtracking line search on the l1 merit
function.  Infeasible linearizations are relaxed progressively before the
problem is declared infeasible.

The tower problem stacks its inequality constraints in a fixed, documented
order so traces are comparable across runs; see :func:`tower_constraints`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import nnls

from . import estimator as est
from .errors import ConfigurationError, ConsistencyError, InfeasibleError
from .tower import (Material, RnaProperties, TopLoads, TowerGeometry,
                    buckling_utilization, first_natural_frequency, geometric_ratios,
                    stress_profile, tower_mass)

#: Constraint blocks of the tower problem, in their frozen stacking order.
CONSTRAINT_BLOCKS = ("stress", "shell_buckling", "global_buckling", "frequency",
                     "fatigue", "monotonic_d", "monotonic_t", "dt_ratio", "taper")


@dataclass(frozen=True)
class DesignVector:
    """Optimization unknowns [d_0..d_n, t_1..t_n] with per-entry bounds."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if not (self.values.shape == self.lower.shape == self.upper.shape):
            raise ConsistencyError("values and bounds must have equal length")
        if np.any(self.lower >= self.upper):
            raise ConfigurationError("each lower bound must be below its upper bound")
        if np.any(self.values < self.lower - 1e-12) or np.any(self.values > self.upper + 1e-12):
            raise ConfigurationError("design vector starts outside its bounds")

    @property
    def n_vars(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ConstraintConfig:
    """Safety factors, bands, and the fatigue limit for the tower problem."""

    gamma_f: float = 1.35
    gamma_m: float = 1.3
    gamma_n: float = 1.0
    gamma_d: float = 1.0
    f1_band_land: Tuple[float, float] = (0.25, 0.38)
    dt_ratio_band: Tuple[float, float] = (80.0, 160.0)
    taper_band: Tuple[float, float] = (0.8, 1.0)
    fatigue_limit: float = 1.0

    def __post_init__(self):
        for name in ("gamma_f", "gamma_m", "gamma_n", "gamma_d"):
            if getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must be >= 1")
        for name in ("f1_band_land", "dt_ratio_band", "taper_band"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigurationError(f"{name} must be a nonempty interval")


@dataclass(frozen=True)
class OptimizerSettings:
    fd_step: float = 1.0e-4
    tol: float = 1.0e-3
    max_iter: int = 100

    def __post_init__(self):
        if self.fd_step <= 0 or self.tol <= 0:
            raise ConfigurationError("fd_step and tol must be positive")


@dataclass
class IterationRecord:
    iteration: int
    mass: float
    damage_max: float
    damage_min: float
    satisfied: dict
    merit_before: float
    merit_after: float
    design: np.ndarray


@dataclass
class OptimizationTrace:
    """Per-iteration history of the optimization run."""

    records: List[IterationRecord] = field(default_factory=list)
    status: str = "running"
    kkt_residual: float = math.inf
    violated_constraints: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "converged" or self.status == "max_iter_feasible"

    def last_violation_iteration(self, block: str) -> int:
        """Last iteration index at which a constraint block was violated (-1 if never)."""
        last = -1
        for rec in self.records:
            if not rec.satisfied.get(block, True):
                last = rec.iteration
        return last


@dataclass(frozen=True)
class EvaluationContext:
    """Fixed inputs of the tower problem: material, loads, calibration, bands."""

    material: Material
    rna: RnaProperties
    loads: TopLoads
    calibration: est.CalibrationSet
    config: ConstraintConfig
    heights: np.ndarray
    cost_rate: float = 2.611
    n_elements_per_section: int = 2


def geometry_from_design(x: np.ndarray, heights: np.ndarray) -> TowerGeometry:
    """Unpack [d_0..d_n, t_1..t_n] into a tower geometry with fixed heights."""
    n = len(heights)
    if len(x) != 2 * n + 1:
        raise ConsistencyError(f"design vector length {len(x)} != 2n+1 for n={n}")
    return TowerGeometry(np.asarray(x[: n + 1]), np.asarray(heights),
                         np.asarray(x[n + 1:]))


def tower_constraints(x: np.ndarray, context: EvaluationContext) -> np.ndarray:
    """Inequality constraints g(x) <= 0 in the frozen block order.

    stress (n): gamma_f gamma_m gamma_n sigma_i / sigma_y - 1
    shell_buckling (n), global_buckling (n): utilization - 1
    frequency (2): band residuals on the land first frequency
    fatigue (n): D_i * gamma_d - fatigue_limit
    monotonic_d (n), monotonic_t (n-1): base-to-top nonincrease gaps
    dt_ratio (2n): band residuals, scaled by the upper bound
    taper (2n): band residuals on d_{i+1} / d_i
    """
    geometry = geometry_from_design(x, context.heights)
    cfg = context.config
    stresses = stress_profile(geometry, context.material, context.rna, context.loads)
    gamma = cfg.gamma_f * cfg.gamma_m * cfg.gamma_n
    g_stress = gamma * stresses / context.material.yield_strength - 1.0
    shell, glob = buckling_utilization(geometry, context.material, stresses)
    f1_land, _ = first_natural_frequency(geometry, context.material, context.rna,
                                         context.n_elements_per_section)
    band = cfg.f1_band_land
    g_freq = np.array([band[0] - f1_land, f1_land - band[1]]) / (band[1] - band[0])
    damage = est.predict(context.calibration, geometry).damage
    g_fatigue = damage * cfg.gamma_d - cfg.fatigue_limit
    d = geometry.diameters
    t = geometry.thicknesses
    g_mono_d = d[1:] - d[:-1]
    g_mono_t = t[1:] - t[:-1]
    ratio, taper, _, _ = geometric_ratios(geometry)
    dt_lo, dt_hi = cfg.dt_ratio_band
    g_dt = np.concatenate([(dt_lo - ratio), (ratio - dt_hi)]) / dt_hi
    tp_lo, tp_hi = cfg.taper_band
    g_taper = np.concatenate([tp_lo - taper, taper - tp_hi])
    return np.concatenate([g_stress, shell - 1.0, glob - 1.0, g_freq, g_fatigue,
                           g_mono_d, g_mono_t, g_dt, g_taper])


def constraint_block_slices(n_sections: int) -> dict:
    """Index slices of each constraint block inside the stacked vector."""
    n = n_sections
    sizes = {"stress": n, "shell_buckling": n, "global_buckling": n, "frequency": 2,
             "fatigue": n, "monotonic_d": n, "monotonic_t": n - 1,
             "dt_ratio": 2 * n, "taper": 2 * n}
    slices, start = {}, 0
    for name in CONSTRAINT_BLOCKS:
        slices[name] = slice(start, start + sizes[name])
        start += sizes[name]
    return slices


def evaluate(x: DesignVector, context: EvaluationContext) -> Tuple[float, np.ndarray]:
    """Objective (tower mass [kg]) and stacked constraints g(x) <= 0."""
    geometry = geometry_from_design(x.values, context.heights)
    mass, _ = tower_mass(geometry, context.material, context.cost_rate)
    return mass, tower_constraints(x.values, context)


def fd_gradient(fn: Callable[[np.ndarray], float], x: DesignVector,
                step: float) -> np.ndarray:
    """Central-difference gradient with bound-normalized perturbations.

    Each coordinate is perturbed by ``step`` measured on the variable scaled
    to [0, 1] by its bounds; the returned gradient is in original units.
    """
    x0 = x.values
    ranges = x.upper - x.lower
    grad = np.empty_like(x0)
    for i in range(len(x0)):
        h = step * ranges[i]
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        try:
            fp, fm = fn(xp), fn(xm)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed at probe for coordinate {i}") from exc
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def _solve_qp(hess: np.ndarray, grad: np.ndarray, a_mat: np.ndarray,
              b_vec: np.ndarray):
    """min 1/2 p'Hp + g'p subject to A p <= b, H positive definite.

    Reduced to a least-distance problem and solved with nonnegative least
    squares.  Returns (p, multipliers) or (None, None) when the constraint set
    is inconsistent.
    """
    n = len(grad)
    r_fac = cholesky(hess, lower=False)
    w = solve_triangular(r_fac.T, grad, lower=True)  # R^-T g
    g_mat = solve_triangular(r_fac.T, a_mat.T, lower=True).T  # A R^-1
    h_vec = b_vec + g_mat @ w
    # least distance: min ||z|| s.t. -G z >= -h
    e_mat = np.vstack([-g_mat.T, -h_vec])
    f_vec = np.zeros(n + 1)
    f_vec[-1] = 1.0
    u, _ = nnls(e_mat, f_vec)
    resid = e_mat @ u - f_vec
    rnorm = np.linalg.norm(resid)
    if rnorm <= 1e-12:
        return None, None
    z = -resid[:n] / resid[n]
    p = solve_triangular(r_fac, z - w, lower=False)
    # multipliers from the active set of the original QP
    slack = a_mat @ p - b_vec
    active = slack > -1e-8 * (1.0 + np.abs(b_vec))
    lam = np.zeros(len(b_vec))
    if np.any(active):
        rhs = -(hess @ p + grad)
        lam_act, _ = nnls(a_mat[active].T, rhs)
        lam[active] = lam_act
    return p, lam


def _merit(f_val: float, g_vals: np.ndarray, mu: float) -> float:
    return f_val + mu * float(np.sum(np.maximum(g_vals, 0.0)))


def optimize(x0: DesignVector, objective: Callable[[np.ndarray], float],
             constraints: Callable[[np.ndarray], np.ndarray],
             settings: OptimizerSettings = OptimizerSettings(),
             snapshot: Optional[Callable[[np.ndarray], dict]] = None
             ) -> Tuple[DesignVector, OptimizationTrace]:
    """SQP loop over normalized variables; see the module docstring.

    ``objective`` and ``constraints`` take raw (unnormalized) design arrays.
    ``snapshot`` may map a design to extra per-iteration trace fields (mass,
    damage extremes, block satisfaction flags); without it the trace carries
    the objective value.
    """
    lo, hi = x0.lower, x0.upper
    ranges = hi - lo

    def to_s(x):
        return (x - lo) / ranges

    def to_x(s):
        return lo + s * ranges

    def f_hat(s):
        return objective(to_x(s)) / f_scale

    def g_hat(s):
        return constraints(to_x(s))

    f0 = objective(x0.values)
    f_scale = max(abs(f0), 1.0)
    s = to_s(x0.values)
    n = len(s)
    trace = OptimizationTrace()
    bfgs = np.eye(n)
    mu = 10.0
    f_cur = f_hat(s)
    g_cur = g_hat(s)
    m_con = len(g_cur)

    def fd_grad_scalar(fn, s_point):
        grad = np.empty(n)
        for i in range(n):
            sp, sm = s_point.copy(), s_point.copy()
            sp[i] += settings.fd_step
            sm[i] -= settings.fd_step
            grad[i] = (fn(sp) - fn(sm)) / (2.0 * settings.fd_step)
        return grad

    def fd_jacobian(s_point):
        jac = np.empty((m_con, n))
        for i in range(n):
            sp, sm = s_point.copy(), s_point.copy()
            sp[i] += settings.fd_step
            sm[i] -= settings.fd_step
            jac[:, i] = (g_hat(sp) - g_hat(sm)) / (2.0 * settings.fd_step)
        return jac

    prev = None  # (grad, jac, lam_g, step) from the previous accepted iterate
    status = "max_iter"
    for it in range(settings.max_iter):
        grad = fd_grad_scalar(f_hat, s)
        jac = fd_jacobian(s)
        if prev is not None:
            # damped BFGS on the Lagrangian gradient difference (Powell damping)
            grad_p, jac_p, lam_p, step_p = prev
            gamma_vec = (grad + jac.T @ lam_p) - (grad_p + jac_p.T @ lam_p)
            bs = bfgs @ step_p
            sbs = float(step_p @ bs)
            if sbs > 1e-16:
                sy = float(step_p @ gamma_vec)
                theta = 1.0 if sy >= 0.2 * sbs else (0.8 * sbs) / (sbs - sy)
                eta = theta * gamma_vec + (1.0 - theta) * bs
                denom = float(step_p @ eta)
                if denom > 1e-16:
                    bfgs = bfgs - np.outer(bs, bs) / sbs + np.outer(eta, eta) / denom
        # QP rows: linearized constraints, then bound inequalities on the step
        a_mat = np.vstack([jac, -np.eye(n), np.eye(n)])
        b_bounds = np.concatenate([s, 1.0 - s])
        p = lam = None
        for xi in (1.0, 0.5, 0.1, 0.01, 0.0):
            # relax only the violated linearizations; keep satisfied ones exact
            b_g = np.where(g_cur > 0.0, -xi * g_cur, -g_cur)
            p, lam = _solve_qp(bfgs + 1e-10 * np.eye(n), grad,
                               a_mat, np.concatenate([b_g, b_bounds]))
            if p is not None:
                break
        if p is None:
            status = "qp_infeasible"
            break
        lam_g = lam[:m_con]
        mu = max(mu, 2.0 * float(np.max(lam_g, initial=0.0)), 10.0)
        merit0 = _merit(f_cur, g_cur, mu)
        viol = float(np.sum(np.maximum(g_cur, 0.0)))
        descent = float(grad @ p) - mu * viol
        alpha, accepted = 1.0, False
        best = (merit0, s, f_cur, g_cur)
        for _ in range(30):
            s_new = np.clip(s + alpha * p, 0.0, 1.0)
            f_new = f_hat(s_new)
            g_new = g_hat(s_new)
            merit_new = _merit(f_new, g_new, mu)
            if merit_new <= merit0 + 0.1 * alpha * min(descent, 0.0):
                accepted = True
                break
            if merit_new < best[0]:
                best = (merit_new, s_new, f_new, g_new)
            alpha *= 0.5
        if not accepted:
            merit_new, s_new, f_new, g_new = best
            if merit_new >= merit0 - 1e-14 * max(1.0, abs(merit0)):
                status = "stalled"
                s_new, f_new, g_new, merit_new = s, f_cur, g_cur, merit0
        step = s_new - s
        extra = snapshot(to_x(s_new)) if snapshot else {}
        trace.records.append(IterationRecord(
            iteration=it, mass=extra.get("mass", f_new * f_scale),
            damage_max=extra.get("damage_max", math.nan),
            damage_min=extra.get("damage_min", math.nan),
            satisfied=extra.get("satisfied", {"all": bool(np.all(g_new <= 1e-9))}),
            merit_before=merit0, merit_after=merit_new, design=to_x(s_new).copy()))
        prev = (grad, jac, lam_g, step)
        s, f_cur, g_cur = s_new, f_new, g_new
        kkt = max(float(np.linalg.norm(step, ord=np.inf)),
                  float(np.max(g_cur, initial=0.0)))
        trace.kkt_residual = kkt
        if status == "stalled":
            break
        if kkt < settings.tol:
            status = "converged"
            break

    max_viol = float(np.max(g_cur, initial=0.0))
    feasible = max_viol <= 10.0 * settings.tol
    if status == "converged" and feasible:
        trace.status = "converged"
    elif status in ("max_iter", "stalled") and feasible:
        trace.status = "max_iter_feasible"
    else:
        trace.status = "infeasible"
        trace.violated_constraints = [
            str(i) for i in np.nonzero(g_cur > 10.0 * settings.tol)[0]]
    x_star = DesignVector(to_x(s), x0.lower, x0.upper)
    return x_star, trace


def optimize_tower(x0: DesignVector, context: EvaluationContext,
                   settings: OptimizerSettings = OptimizerSettings()
                   ) -> Tuple[DesignVector, OptimizationTrace]:
    """Run the SQP on the tower problem with a block-aware trace."""
    slices = constraint_block_slices(len(context.heights))

    def objective(x):
        geometry = geometry_from_design(x, context.heights)
        return tower_mass(geometry, context.material, context.cost_rate)[0]

    def constraints(x):
        return tower_constraints(x, context)

    def snapshot(x):
        geometry = geometry_from_design(x, context.heights)
        g = tower_constraints(x, context)
        damage = est.predict(context.calibration, geometry).damage
        satisfied = {name: bool(np.all(g[slices[name]] <= 1e-9))
                     for name in CONSTRAINT_BLOCKS}
        return {"mass": tower_mass(geometry, context.material)[0],
                "damage_max": float(damage.max()),
                "damage_min": float(damage.min()),
                "satisfied": satisfied}

    x_star, trace = optimize(x0, objective, constraints, settings, snapshot)
    if trace.status == "infeasible":
        raise InfeasibleError(
            f"tower optimization infeasible; violated constraint indices: "
            f"{trace.violated_constraints[:10]}"
        )
    return x_star, trace


def write_trace_csv(trace: OptimizationTrace, path) -> None:
    """Trace CSV: ``iter, mass_kg, d_max, d_min, feasible``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "mass_kg", "d_max", "d_min", "feasible"])
        for rec in trace.records:
            writer.writerow([rec.iteration, repr(rec.mass), repr(rec.damage_max),
                             repr(rec.damage_min),
                             int(all(rec.satisfied.values()))])


def write_trace_snapshots(trace: OptimizationTrace, path) -> None:
    """JSON snapshots of every iterate's design vector and flags."""
    doc = {
        "status": trace.status,
        "kkt_residual": trace.kkt_residual,
        "iterations": [
            {"iter": rec.iteration, "mass_kg": rec.mass,
             "damage_max": rec.damage_max, "damage_min": rec.damage_min,
             "satisfied": rec.satisfied, "merit_before": rec.merit_before,
             "merit_after": rec.merit_after, "design": rec.design.tolist()}
            for rec in trace.records
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)

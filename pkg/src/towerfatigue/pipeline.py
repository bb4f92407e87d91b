"""End-to-end workflow: sample -> simulate -> analyze -> calibrate ->
optimize -> re-simulate -> validate, cycling until the design is accepted.

Cycle semantics: the estimator is recalibrated at the start of every cycle
from the most recently validated design (the reference in cycle 1); the
optimizer always restarts from the reference geometry; the response provider
keeps the reference tower's first floating frequency across cycles (noted in
the manifest).  A design is accepted when the re-simulated damage stays below
the admissible limit everywhere and the estimator agrees with the re-simulated
profile within tolerance.

Simulation and fatigue evaluation of the sampled states fan out over a
process pool; results are reduced after sorting by state id, so the outcome is
independent of the parallelism degree.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import estimator as est
from . import fatigue as fat
from . import platform as plat
from . import spectral
from .config import ProjectConfig, config_hash
from .errors import ConsistencyError
from .optimizer import (DesignVector, EvaluationContext, OptimizationTrace,
                        geometry_from_design, optimize_tower, write_trace_csv,
                        write_trace_snapshots)
from .response import simulate_response
from .sampling import EnvironmentalState, sample_states, write_states_csv
from .tower import (TowerGeometry, first_natural_frequency, tower_mass,
                    write_geometry_csv)

RELATIVE_ERROR_TOL = 0.10


@dataclass(frozen=True)
class ValidationReport:
    """Hi-fi vs estimator damage comparison for one cycle.

    Relative error is signed, (estimate - hi_fi) / hi_fi.  Criterion 1 passes
    when the re-simulated damage stays below the limit everywhere; criterion 2
    when the largest |relative error| stays below 10%.  Sections with zero
    hi-fi damage but nonzero estimate are flagged undefined and fail
    criterion 2.
    """

    cycle: int
    hi_fi_damage: np.ndarray
    estimated_damage: np.ndarray
    relative_errors: np.ndarray
    max_damage: float
    criterion_damage_ok: bool
    criterion_error_ok: bool
    undefined_sections: Tuple[int, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.criterion_damage_ok and self.criterion_error_ok

    @property
    def mean_error(self) -> float:
        finite = self.relative_errors[np.isfinite(self.relative_errors)]
        return float(finite.mean()) if finite.size else 0.0

    @property
    def max_error(self) -> float:
        finite = self.relative_errors[np.isfinite(self.relative_errors)]
        return float(finite.max()) if finite.size else 0.0

    @property
    def min_error(self) -> float:
        finite = self.relative_errors[np.isfinite(self.relative_errors)]
        return float(finite.min()) if finite.size else 0.0


def validate(hi_fi: fat.SectionDamageProfile, estimated: fat.SectionDamageProfile,
             limit: float = 1.0, cycle: int = 1) -> ValidationReport:
    """Check a candidate design against the two acceptance criteria."""
    if hi_fi.damage.shape != estimated.damage.shape:
        raise ConsistencyError("damage profiles must have equal section counts")
    undefined = []
    errors = np.empty_like(hi_fi.damage)
    for i, (h, e) in enumerate(zip(hi_fi.damage, estimated.damage)):
        if h == 0.0:
            if e == 0.0:
                errors[i] = 0.0
            else:
                errors[i] = np.nan
                undefined.append(i)
        else:
            errors[i] = (e - h) / h
    max_damage = float(hi_fi.damage.max())
    finite = errors[np.isfinite(errors)]
    err_ok = (not undefined) and bool(np.all(np.abs(finite) < RELATIVE_ERROR_TOL))
    return ValidationReport(cycle=cycle, hi_fi_damage=hi_fi.damage.copy(),
                            estimated_damage=estimated.damage.copy(),
                            relative_errors=errors, max_damage=max_damage,
                            criterion_damage_ok=max_damage <= limit,
                            criterion_error_ok=err_ok,
                            undefined_sections=tuple(undefined))


@dataclass
class CycleResult:
    cycle: int
    gamma_d: float
    design: TowerGeometry
    mass: float
    trace: OptimizationTrace
    report: ValidationReport
    heave_delta_platform_kg: float
    calibration: est.CalibrationSet


@dataclass
class PipelineResult:
    states: List[EnvironmentalState]
    reference_damage: fat.SectionDamageProfile
    heatmap: spectral.PsdHeatmap
    ballast_by_bin: Dict[float, plat.BallastResult]
    cycles: List[CycleResult]
    reference_f1_floating: float
    accepted: bool

    @property
    def final(self) -> CycleResult:
        return self.cycles[-1]


def _simulate_and_damage(args):
    """Worker: simulate one state and return (id, per-section damage, psd input)."""
    (state, geometry, rotor, sim_config, material, f1_float, curve) = args
    record = simulate_response(state, geometry, rotor, sim_config, steady=False,
                               material=material, f1_floating_hz=f1_float)
    damage = fat.event_damage(record, geometry, curve, trim=sim_config.trim)
    keep = record.time >= sim_config.trim
    base_moment = record.fore_aft_moment[0, keep]
    return state.id, damage, state.u, base_moment


def _run_states(states, geometry, config: ProjectConfig, f1_float: float,
                jobs: int):
    """Simulate + fatigue-evaluate all states, deterministically reduced by id."""
    tasks = [(st, geometry, config.rotor, config.simulation, config.material,
              f1_float, config.sn_curve) for st in states]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_simulate_and_damage, tasks, chunksize=8))
    else:
        results = [_simulate_and_damage(t) for t in tasks]
    return sorted(results, key=lambda r: r[0])


def lifetime_from_results(results, states, geometry, config: ProjectConfig
                          ) -> fat.SectionDamageProfile:
    event_damages = [(sid, dmg) for sid, dmg, _, _ in results]
    return fat.lifetime_damage(event_damages, states, config.lifetime_s,
                               config.t_event, geometry.section_midpoints)


def run_pipeline(config: ProjectConfig, out_dir: Optional[str] = None,
                 jobs: Optional[int] = None) -> PipelineResult:
    """Execute the full fatigue-aware design workflow; see the module docstring.

    When ``out_dir`` is given, artifacts (state table, damage profiles, PSD
    heatmap, traces, geometries, manifest, figures) are exported there.
    """
    jobs = jobs or config.jobs
    reference = config.tower()
    material = config.material
    rna = config.rna()
    rotor = config.rotor
    loads = _top_loads(config)

    stages: List[Tuple[str, str, List[str]]] = []

    # stage: sample
    states = sample_states(config.plan, config.wind_model)
    stages.append(("sample", "ok", []))

    # stage: steady precompute per wind bin (rotor schedule + pitch ballast)
    _, f1_float_ref = first_natural_frequency(reference, material, rna,
                                              n_elements_per_section=2)
    bins = sorted({st.u for st in states})
    cal_sim = config.calibration_sim()
    harmonics = []
    ballast_by_bin: Dict[float, plat.BallastResult] = {}
    for u in bins:
        steady_state = EnvironmentalState(id=0, u=u, seed=0, sigma_w=0.0, hs=1.0,
                                          tp=8.0, m_ww=0.0, weight=1.0)
        rec = simulate_response(steady_state, reference, rotor, cal_sim, steady=True,
                                material=material, f1_floating_hz=f1_float_ref)
        keep = rec.time >= cal_sim.trim
        mean_rpm = float(rec.rotor_speed[keep].mean())
        harmonics.append((u, spectral.rotor_harmonics(mean_rpm)))
        m_struct = plat.structural_moment(config.platform, rec.mean_thrust,
                                          rec.mean_rotor_moment)
        ballast_by_bin[u] = plat.pitch_ballast(m_struct, config.platform,
                                               config.ballast_safety_factor)
    stages.append(("calibrate-platform", "ok", []))

    # stage: simulate + fatigue + PSD of the reference design
    results = _run_states(states, reference, config, f1_float_ref, jobs)
    reference_damage = lifetime_from_results(results, states, reference, config)
    psds = [(u, spectral.welch_psd(base, fs=config.simulation.fs,
                                   segment_length=config.psd_segment_length))
            for _, _, u, base in results]
    heatmap = spectral.aggregate_heatmap(
        psds, harmonics, f_range=(0.0, config.psd_f_max_hz),
        u_range=(config.plan.v_in, config.plan.v_out))
    stages.append(("simulate-reference", "ok", []))
    stages.append(("analyze-reference", "ok", []))

    # optimization cycles
    heights = reference.heights
    n = reference.n_sections
    lower = np.concatenate([np.full(n + 1, config.diameter_bounds_m[0]),
                            np.full(n, config.thickness_bounds_m[0])])
    upper = np.concatenate([np.full(n + 1, config.diameter_bounds_m[1]),
                            np.full(n, config.thickness_bounds_m[1])])
    x0 = DesignVector(np.concatenate([reference.diameters, reference.thicknesses]),
                      lower, upper)
    reference_mass = tower_mass(reference, material, config.cost_rate)[0]

    cycles: List[CycleResult] = []
    calibration_design = reference
    calibration_damage = reference_damage
    accepted = False
    for cycle in range(1, config.max_cycles + 1):
        gamma_d = (config.gamma_d_first_cycle if cycle == 1
                   else config.gamma_d_later_cycles)
        calibration = est.calibrate(calibration_design, calibration_damage,
                                    m=config.estimator_m,
                                    k=config.sn_curve.thickness_exponent_k,
                                    t_ref=config.sn_curve.t_ref)
        context = EvaluationContext(
            material=material, rna=rna, loads=loads, calibration=calibration,
            config=dataclasses.replace(config.constraints, gamma_d=gamma_d),
            heights=heights, cost_rate=config.cost_rate)
        x_star, trace = optimize_tower(x0, context, config.optimizer)
        design = geometry_from_design(x_star.values, heights)
        mass = tower_mass(design, material, config.cost_rate)[0]
        delta_platform = plat.heave_adjust(mass - reference_mass,
                                           config.platform.initial_platform_mass)

        # re-simulate the optimized design under the same states and mode
        results_opt = _run_states(states, design, config, f1_float_ref, jobs)
        hi_fi = lifetime_from_results(results_opt, states, design, config)
        estimated = est.predict(calibration, design)
        report = validate(hi_fi, estimated, limit=config.constraints.fatigue_limit,
                          cycle=cycle)
        cycles.append(CycleResult(cycle=cycle, gamma_d=gamma_d, design=design,
                                  mass=mass, trace=trace, report=report,
                                  heave_delta_platform_kg=delta_platform,
                                  calibration=calibration))
        stages.append((f"cycle-{cycle}", "ok", []))
        if report.accepted:
            accepted = True
            break
        calibration_design = design
        calibration_damage = hi_fi

    result = PipelineResult(states=states, reference_damage=reference_damage,
                            heatmap=heatmap, ballast_by_bin=ballast_by_bin,
                            cycles=cycles, reference_f1_floating=f1_float_ref,
                            accepted=accepted)
    if out_dir is not None:
        export_results(result, config, out_dir, stages)
    return result


def _top_loads(config: ProjectConfig):
    from .tower import TopLoads

    return TopLoads(np.asarray(config.top_force_n),
                    np.asarray(config.top_moment_nm))


def report_to_dict(report: ValidationReport) -> dict:
    return {
        "cycle": report.cycle,
        "max_damage": report.max_damage,
        "criterion_damage_ok": report.criterion_damage_ok,
        "criterion_error_ok": report.criterion_error_ok,
        "accepted": report.accepted,
        "mean_relative_error": report.mean_error,
        "max_relative_error": report.max_error,
        "min_relative_error": report.min_error,
        "undefined_sections": list(report.undefined_sections),
        "hi_fi_damage": report.hi_fi_damage.tolist(),
        "estimated_damage": report.estimated_damage.tolist(),
        "relative_errors": [None if not np.isfinite(e) else float(e)
                            for e in report.relative_errors],
    }


def export_results(result: PipelineResult, config: ProjectConfig, out_dir,
                   stages: Optional[Sequence[Tuple[str, str, List[str]]]] = None,
                   figures: bool = True) -> dict:
    """Write the artifact bundle and return the manifest dictionary.

    Bundle: state table, reference and per-cycle damage CSVs, PSD heatmap
    CSV + JSON, per-cycle traces and geometries, validation reports, platform
    calibration JSON, figures, and a manifest with the config hash.  Exports
    are deterministic; the manifest timestamp is the only varying field.
    """
    os.makedirs(out_dir, exist_ok=True)
    stage_entries = [{"name": s, "status": st, "outputs": list(outs)}
                     for s, st, outs in (stages or [])]
    outputs: Dict[str, List[str]] = {}

    def emit(stage: str, name: str, writer) -> None:
        path = os.path.join(out_dir, name)
        writer(path)
        outputs.setdefault(stage, []).append(name)

    emit("sample", "states.csv", lambda p: write_states_csv(result.states, p))
    emit("analyze-reference", "damage_reference.csv",
         lambda p: fat.write_damage_csv(result.reference_damage, p))
    emit("analyze-reference", "psd_heatmap.csv",
         lambda p: spectral.write_heatmap(result.heatmap, p,
                                          os.path.join(out_dir, "psd_heatmap.json")))
    outputs["analyze-reference"].append("psd_heatmap.json")
    emit("calibrate-platform", "platform_calibration.json",
         lambda p: _write_ballast(result.ballast_by_bin, p))
    for cyc in result.cycles:
        tag = f"cycle{cyc.cycle}"
        emit(tag, f"geometry_{tag}.csv",
             lambda p, c=cyc: write_geometry_csv(c.design, p))
        emit(tag, f"trace_{tag}.csv", lambda p, c=cyc: write_trace_csv(c.trace, p))
        emit(tag, f"trace_{tag}.json",
             lambda p, c=cyc: write_trace_snapshots(c.trace, p))
        emit(tag, f"damage_hifi_{tag}.csv",
             lambda p, c=cyc: fat.write_damage_csv(
                 fat.SectionDamageProfile(c.design.section_midpoints,
                                          c.report.hi_fi_damage), p))
        emit(tag, f"validation_{tag}.json",
             lambda p, c=cyc: _write_json(report_to_dict(c.report), p))
    if figures:
        from . import report as fig

        emit("figures", "sampling.png",
             lambda p: fig.sampling_figure(result.states, p))
        emit("figures", "psd_heatmap.png",
             lambda p: fig.heatmap_figure(result.heatmap, p))
        emit("figures", "damage_profiles.png",
             lambda p: fig.damage_figure(result, p))
        if result.cycles:
            emit("figures", "optimization_trace.png",
                 lambda p: fig.trace_figure(result.cycles, p))

    manifest = {
        "config_hash": config_hash(config),
        "reference_f1_floating_hz": result.reference_f1_floating,
        "mode_reuse": "reference first floating mode reused across all cycles",
        "accepted": result.accepted,
        "stages": stage_entries + [
            {"name": f"export:{stage}", "status": "ok", "outputs": outs}
            for stage, outs in outputs.items()
        ],
        "versions": _versions(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def _write_ballast(ballast_by_bin, path) -> None:
    doc = {f"{u:g}": plat.ballast_to_dict(b) for u, b in ballast_by_bin.items()}
    _write_json(doc, path)


def _write_json(doc, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _versions() -> dict:
    import numpy
    import scipy

    return {"towerfatigue": __version__, "numpy": numpy.__version__,
            "scipy": scipy.__version__}

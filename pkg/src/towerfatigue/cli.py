"""Command-line interface for the tower fatigue workflow.

Every reporting command writes its delimited output and a rendered figure
side by side in the output directory.  Without ``--config`` the built-in
desk-scale configuration is used, so each command runs out of the box.
"""

from __future__ import annotations

import json
import os

import click
import numpy as np

from . import estimator as est
from . import fatigue as fat
from . import platform as plat
from . import report as fig
from . import spectral
from .config import ProjectConfig, desk_config, load_config, save_config
from .optimizer import (DesignVector, EvaluationContext, geometry_from_design,
                        optimize_tower, write_trace_csv, write_trace_snapshots)
from .pipeline import (_run_states, _top_loads, lifetime_from_results,
                       report_to_dict, run_pipeline, validate)
from .response import simulate_response, write_response_csv
from .sampling import EnvironmentalState, sample_states, write_states_csv
from .tower import first_natural_frequency, read_geometry_csv, write_geometry_csv


def _load(config_path) -> ProjectConfig:
    return load_config(config_path) if config_path else desk_config()


def _outdir(out) -> str:
    os.makedirs(out, exist_ok=True)
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Project config JSON; defaults to the built-in desk-scale setup.")
@click.option("--out", default="runs", show_default=True,
              help="Output directory for artifacts.")
@click.option("--jobs", default=1, show_default=True, help="Worker processes.")
@click.option("--cycle", default=1, show_default=True,
              help="Optimization cycle index (selects the fatigue margin factor).")
@click.pass_context
def main(ctx, config_path, out, jobs, cycle):
    """Fatigue-aware tower design workflow."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=_load(config_path), out=out, jobs=jobs, cycle=cycle)


@main.command()
@click.pass_context
def sample(ctx):
    """Sample the weighted environmental state table."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    states = sample_states(config.plan, config.wind_model)
    write_states_csv(states, os.path.join(out, "states.csv"))
    fig.sampling_figure(states, os.path.join(out, "sampling.png"))
    click.echo(f"wrote {len(states)} states to {out}/states.csv "
               f"(weights sum {sum(s.weight for s in states):.12f})")


@main.command()
@click.option("--design", default=None, type=click.Path(exists=True),
              help="Geometry CSV to simulate; defaults to the config tower.")
@click.option("--limit", default=None, type=int,
              help="Simulate only the first N states.")
@click.pass_context
def simulate(ctx, design, limit):
    """Simulate all sampled states and write one response CSV per state."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    geometry = read_geometry_csv(design) if design else config.tower()
    states = sample_states(config.plan, config.wind_model)
    if limit:
        states = states[:limit]
    _, f1_float = first_natural_frequency(geometry, config.material, config.rna(),
                                          n_elements_per_section=2)
    resp_dir = os.path.join(out, "responses")
    os.makedirs(resp_dir, exist_ok=True)
    for st in states:
        rec = simulate_response(st, geometry, config.rotor, config.simulation,
                                material=config.material, f1_floating_hz=f1_float)
        write_response_csv(rec, os.path.join(resp_dir, f"response_{st.id:05d}.csv"))
    click.echo(f"wrote {len(states)} response files to {resp_dir}")


@main.command()
@click.pass_context
def psd(ctx):
    """Compute the PSD heatmap of the tower-base moment across wind bins."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    geometry = config.tower()
    states = sample_states(config.plan, config.wind_model)
    _, f1_float = first_natural_frequency(geometry, config.material, config.rna(),
                                          n_elements_per_section=2)
    results = _run_states(states, geometry, config, f1_float, ctx.obj["jobs"])
    psds = [(u, spectral.welch_psd(base, fs=config.simulation.fs,
                                   segment_length=config.psd_segment_length))
            for _, _, u, base in results]
    cal = config.calibration_sim()
    harmonics = []
    for u in sorted({st.u for st in states}):
        steady = EnvironmentalState(0, u, 0, 0.0, 1.0, 8.0, 0.0, 1.0)
        rec = simulate_response(steady, geometry, config.rotor, cal, steady=True,
                                material=config.material, f1_floating_hz=f1_float)
        keep = rec.time >= cal.trim
        harmonics.append((u, spectral.rotor_harmonics(float(rec.rotor_speed[keep].mean()))))
    heatmap = spectral.aggregate_heatmap(psds, harmonics,
                                         f_range=(0.0, config.psd_f_max_hz),
                                         u_range=(config.plan.v_in, config.plan.v_out))
    spectral.write_heatmap(heatmap, os.path.join(out, "psd_heatmap.csv"),
                           os.path.join(out, "psd_heatmap.json"))
    fig.heatmap_figure(heatmap, os.path.join(out, "psd_heatmap.png"))
    click.echo(f"wrote PSD heatmap ({len(heatmap.frequencies)} frequencies x "
               f"{len(heatmap.wind_speeds)} speeds) to {out}")


@main.command()
@click.option("--design", default=None, type=click.Path(exists=True),
              help="Geometry CSV to evaluate; defaults to the config tower.")
@click.pass_context
def fatigue(ctx, design):
    """Lifetime fatigue damage profile of a design under the sampled states."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    geometry = read_geometry_csv(design) if design else config.tower()
    states = sample_states(config.plan, config.wind_model)
    _, f1_float = first_natural_frequency(geometry, config.material, config.rna(),
                                          n_elements_per_section=2)
    results = _run_states(states, geometry, config, f1_float, ctx.obj["jobs"])
    profile = lifetime_from_results(results, states, geometry, config)
    fat.write_damage_csv(profile, os.path.join(out, "damage.csv"))
    fig.damage_profile_figure({"design": profile}, os.path.join(out, "damage.png"))
    click.echo(f"max damage {profile.damage.max():.4g} at "
               f"z={profile.section_midpoints[int(profile.damage.argmax())]:.1f} m; "
               f"wrote {out}/damage.csv")


@main.command("calibrate-platform")
@click.pass_context
def calibrate_platform(ctx):
    """Pitch-ballast calibration per wind bin from steady precompute runs."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    geometry = config.tower()
    _, f1_float = first_natural_frequency(geometry, config.material, config.rna(),
                                          n_elements_per_section=2)
    cal = config.calibration_sim()
    doc = {}
    for i in range(1, config.plan.n_u + 1):
        from .sampling import wind_bin_probability

        u, _ = wind_bin_probability(i, config.plan, config.wind_model)
        steady = EnvironmentalState(0, u, 0, 0.0, 1.0, 8.0, 0.0, 1.0)
        rec = simulate_response(steady, geometry, config.rotor, cal, steady=True,
                                material=config.material, f1_floating_hz=f1_float)
        m_struct = plat.structural_moment(config.platform, rec.mean_thrust,
                                          rec.mean_rotor_moment)
        result = plat.pitch_ballast(m_struct, config.platform,
                                    config.ballast_safety_factor)
        doc[f"{u:g}"] = {"m_struct_nm": m_struct, **plat.ballast_to_dict(result)}
    path = os.path.join(out, "platform_calibration.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {path}")


@main.command()
@click.pass_context
def optimize(ctx):
    """One optimization cycle from the reference design."""
    import dataclasses

    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    cycle = ctx.obj["cycle"]
    geometry = config.tower()
    states = sample_states(config.plan, config.wind_model)
    _, f1_float = first_natural_frequency(geometry, config.material, config.rna(),
                                          n_elements_per_section=2)
    results = _run_states(states, geometry, config, f1_float, ctx.obj["jobs"])
    damage = lifetime_from_results(results, states, geometry, config)
    calibration = est.calibrate(geometry, damage, m=config.estimator_m,
                                k=config.sn_curve.thickness_exponent_k,
                                t_ref=config.sn_curve.t_ref)
    gamma_d = (config.gamma_d_first_cycle if cycle == 1
               else config.gamma_d_later_cycles)
    n = geometry.n_sections
    lower = np.concatenate([np.full(n + 1, config.diameter_bounds_m[0]),
                            np.full(n, config.thickness_bounds_m[0])])
    upper = np.concatenate([np.full(n + 1, config.diameter_bounds_m[1]),
                            np.full(n, config.thickness_bounds_m[1])])
    x0 = DesignVector(np.concatenate([geometry.diameters, geometry.thicknesses]),
                      lower, upper)
    context = EvaluationContext(
        material=config.material, rna=config.rna(), loads=_top_loads(config),
        calibration=calibration,
        config=dataclasses.replace(config.constraints, gamma_d=gamma_d),
        heights=geometry.heights, cost_rate=config.cost_rate)
    x_star, trace = optimize_tower(x0, context, config.optimizer)
    design = geometry_from_design(x_star.values, geometry.heights)
    write_geometry_csv(design, os.path.join(out, "geometry_optimized.csv"))
    write_trace_csv(trace, os.path.join(out, "trace.csv"))
    write_trace_snapshots(trace, os.path.join(out, "trace.json"))

    from types import SimpleNamespace

    fig.trace_figure([SimpleNamespace(cycle=cycle, trace=trace)],
                     os.path.join(out, "optimization_trace.png"))
    click.echo(f"status {trace.status}; final mass "
               f"{trace.records[-1].mass / 1000.0:.1f} t; wrote {out}/trace.csv")


@main.command("validate")
@click.option("--hifi", required=True, type=click.Path(exists=True),
              help="Re-simulated damage CSV.")
@click.option("--est", "est_path", required=True, type=click.Path(exists=True),
              help="Estimator damage CSV.")
@click.option("--limit", default=1.0, show_default=True)
@click.pass_context
def validate_cmd(ctx, hifi, est_path, limit):
    """Check the two acceptance criteria on a pair of damage profiles."""
    out = _outdir(ctx.obj["out"])
    report = validate(fat.read_damage_csv(hifi), fat.read_damage_csv(est_path),
                      limit=limit, cycle=ctx.obj["cycle"])
    path = os.path.join(out, "validation.json")
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
    click.echo(f"criterion 1 (damage <= {limit:g}): "
               f"{'pass' if report.criterion_damage_ok else 'FAIL'}; "
               f"criterion 2 (|rel err| < 10%): "
               f"{'pass' if report.criterion_error_ok else 'FAIL'}; wrote {path}")


@main.command()
@click.pass_context
def pipeline(ctx):
    """Full workflow: sample, simulate, analyze, optimize, validate, export."""
    config: ProjectConfig = ctx.obj["config"]
    out = _outdir(ctx.obj["out"])
    result = run_pipeline(config, out_dir=out, jobs=ctx.obj["jobs"])
    final = result.final
    click.echo(f"cycles run: {len(result.cycles)}; accepted: {result.accepted}")
    click.echo(f"final mass {final.mass / 1000.0:.1f} t; max validated damage "
               f"{final.report.max_damage:.3f}; mean rel err "
               f"{final.report.mean_error:+.3%}")
    click.echo(f"artifacts in {out}")


@main.command("print-config")
@click.pass_context
def print_config(ctx):
    """Dump the active configuration as JSON (editable starting point)."""
    out = _outdir(ctx.obj["out"])
    path = os.path.join(out, "config.json")
    save_config(ctx.obj["config"], path)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()

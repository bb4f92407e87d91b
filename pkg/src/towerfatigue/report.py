"""Matplotlib figure rendering for the report path.

Figures are written to files next to the delimited outputs; the Agg backend
keeps rendering headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def sampling_figure(states, path) -> None:
    """Scatter the sampled states: U vs Hs and Hs vs Tp."""
    u = np.array([s.u for s in states])
    hs = np.array([s.hs for s in states])
    tp = np.array([s.tp for s in states])
    w = np.array([s.weight for s in states])
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    sc = axes[0].scatter(u, hs, c=w, s=10, cmap="viridis")
    axes[0].set_xlabel("wind speed U [m/s]")
    axes[0].set_ylabel("significant wave height Hs [m]")
    axes[1].scatter(hs, tp, c=w, s=10, cmap="viridis")
    axes[1].set_xlabel("Hs [m]")
    axes[1].set_ylabel("peak period Tp [s]")
    fig.colorbar(sc, ax=axes, label="weight", shrink=0.85)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def heatmap_figure(heatmap, path) -> None:
    """log10 PSD over (wind speed, frequency) with rotor-harmonic overlays."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(heatmap.wind_speeds, heatmap.frequencies,
                         heatmap.log10_values, shading="nearest", cmap="inferno")
    for attr, label in (("f_1p", "1P"), ("f_3p", "3P"), ("f_6p", "6P"),
                        ("f_9p", "9P")):
        fvals = [getattr(h, attr) for h in heatmap.harmonics_per_speed]
        ax.plot(heatmap.wind_speeds, fvals, "w--", lw=0.8)
        ax.annotate(label, (heatmap.wind_speeds[-1], fvals[-1]), color="w",
                    fontsize=8, xytext=(2, 0), textcoords="offset points")
    ax.set_ylim(heatmap.frequencies[0], heatmap.frequencies[-1])
    ax.set_xlabel("wind speed [m/s]")
    ax.set_ylabel("frequency [Hz]")
    fig.colorbar(mesh, ax=ax, label="log10 PSD")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def damage_profile_figure(profiles, path, limit: float = 1.0) -> None:
    """Damage vs height for one or more labelled profiles."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, profile in profiles.items():
        ax.plot(profile.damage, profile.section_midpoints, marker="o", ms=3,
                label=label)
    ax.axvline(limit, color="k", ls=":", lw=1, label=f"limit {limit:g}")
    ax.set_xlabel("lifetime fatigue damage [-]")
    ax.set_ylabel("height above base [m]")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def damage_figure(result, path) -> None:
    """Reference and per-cycle hi-fi/estimated damage profiles."""
    from .fatigue import SectionDamageProfile

    profiles = {"reference": result.reference_damage}
    for cyc in result.cycles:
        mids = cyc.design.section_midpoints
        profiles[f"cycle {cyc.cycle} hi-fi"] = SectionDamageProfile(
            mids, cyc.report.hi_fi_damage)
        profiles[f"cycle {cyc.cycle} estimator"] = SectionDamageProfile(
            mids, cyc.report.estimated_damage)
    damage_profile_figure(profiles, path)


def trace_figure(cycles, path) -> None:
    """Objective mass and fatigue extremes across optimizer iterations."""
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    for cyc in cycles:
        iters = [r.iteration for r in cyc.trace.records]
        axes[0].plot(iters, [r.mass / 1000.0 for r in cyc.trace.records],
                     marker=".", label=f"cycle {cyc.cycle}")
        axes[1].plot(iters, [r.damage_max for r in cyc.trace.records],
                     marker=".", label=f"cycle {cyc.cycle} max")
        axes[1].plot(iters, [r.damage_min for r in cyc.trace.records],
                     ls="--", label=f"cycle {cyc.cycle} min")
    axes[0].set_ylabel("tower mass [t]")
    axes[1].set_ylabel("estimated damage [-]")
    axes[1].set_yscale("log")
    axes[1].axhline(1.0, color="k", ls=":", lw=1)
    axes[1].set_xlabel("iteration")
    for ax in axes:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

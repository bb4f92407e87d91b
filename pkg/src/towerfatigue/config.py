"""Workflow configuration: one JSON tree with units in the key names.

A config fully determines a run: sampling plan, rotor/platform/material
constants, S-N curve, simulation lengths, constraint bands, optimizer
settings, and the lifetime/event-duration pair used for damage aggregation.
``default_config`` reproduces the case-study setup at full sampling scale;
``desk_config`` shrinks the state count for laptop-sized end-to-end runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .distributions import WindSpeedModel
from .errors import ConfigurationError
from .fatigue import SNCurve
from .optimizer import ConstraintConfig, OptimizerSettings
from .platform import PlatformModel
from .response import (CALIBRATION_DURATION, CALIBRATION_TRIM, RotorModel,
                       SimulationConfig)
from .sampling import SamplingPlan
from .tower import (DEFAULT_COST_RATE, Material, RnaProperties, TowerGeometry,
                    read_geometry_csv, reference_tower)

SECONDS_PER_YEAR = 365.25 * 86400.0


@dataclass(frozen=True)
class ProjectConfig:
    """Everything a pipeline run needs, bundled."""

    plan: SamplingPlan
    wind_model: WindSpeedModel
    rotor: RotorModel
    material: Material
    platform: PlatformModel
    sn_curve: SNCurve
    simulation: SimulationConfig
    constraints: ConstraintConfig
    optimizer: OptimizerSettings
    tower_csv: Optional[str] = None
    lifetime_s: float = 25.0 * SECONDS_PER_YEAR
    event_duration_s: Optional[float] = None
    estimator_m: float = 4.0
    gamma_d_first_cycle: float = 1.0
    gamma_d_later_cycles: float = 1.11
    diameter_bounds_m: Tuple[float, float] = (6.0, 12.0)
    thickness_bounds_m: Tuple[float, float] = (0.0375, 0.15)
    cost_rate: float = DEFAULT_COST_RATE
    ballast_safety_factor: float = 1.0
    max_cycles: int = 5
    jobs: int = 1
    psd_segment_length: int = 1024
    psd_f_max_hz: float = 1.75
    top_force_n: Tuple[float, float, float] = (5.7e6, 0.09e6, -11.3e6)
    top_moment_nm: Tuple[float, float, float] = (-1.6e6, -37.6e6, 10.7e6)

    def __post_init__(self):
        if self.lifetime_s <= 0:
            raise ConfigurationError("lifetime must be positive")
        if self.max_cycles < 1:
            raise ConfigurationError("need at least one optimization cycle")
        if self.jobs < 1:
            raise ConfigurationError("parallelism degree must be >= 1")

    @property
    def t_event(self) -> float:
        """Effective per-state exposure: configured value or duration - trim."""
        if self.event_duration_s is not None:
            return self.event_duration_s
        return self.simulation.duration - self.simulation.trim

    def tower(self) -> TowerGeometry:
        if self.tower_csv:
            return read_geometry_csv(self.tower_csv)
        return reference_tower()

    def rna(self) -> RnaProperties:
        return RnaProperties(mass=self.rotor.rna_mass)

    def calibration_sim(self) -> SimulationConfig:
        return SimulationConfig(duration=CALIBRATION_DURATION, dt=self.simulation.dt,
                                trim=CALIBRATION_TRIM, seed=self.simulation.seed,
                                n_stations=self.simulation.n_stations)


def default_platform() -> PlatformModel:
    """Placeholder semi-submersible constants for the static calibration."""
    return PlatformModel(
        column_distance_l=50.0,
        column_diameter=12.5,
        initial_platform_mass=1.7e7,
        water_density=1025.0,
        z_hub=170.0,
        z_struct=0.0,
        shaft_tilt_theta=np.deg2rad(6.0),
        component_masses_and_offsets=(
            ("nacelle", 851782.0, 5.0),
            ("hub", 120000.0, -12.0),
            ("blades", 246903.0, -12.0),
        ),
    )


def default_config(**overrides) -> ProjectConfig:
    """Full-scale configuration: 22 wind bins x 6 seeds x 7 Hs x 7 Tp."""
    base = dict(
        plan=SamplingPlan(n_u=22, n_hs=7, n_tp=7, n_seeds=6, v_in=3.0, v_out=25.0,
                          turbulent=True, iec_class="A"),
        wind_model=WindSpeedModel(),
        rotor=RotorModel(),
        material=Material(),
        platform=default_platform(),
        sn_curve=SNCurve(),
        simulation=SimulationConfig(duration=1000.0, dt=0.05, trim=400.0, seed=2301,
                                    n_stations=31),
        constraints=ConstraintConfig(),
        optimizer=OptimizerSettings(fd_step=1.0e-4, tol=1.0e-3, max_iter=100),
    )
    base.update(overrides)
    return ProjectConfig(**base)


def desk_config(**overrides) -> ProjectConfig:
    """Desk-scale run: 5 wind bins x 2 seeds x 3 Hs x 3 Tp = 90 states."""
    base = dict(
        plan=SamplingPlan(n_u=5, n_hs=3, n_tp=3, n_seeds=2, v_in=3.0, v_out=25.0,
                          turbulent=True, iec_class="A"),
        simulation=SimulationConfig(duration=200.0, dt=0.05, trim=100.0, seed=2301,
                                    n_stations=31),
        psd_segment_length=512,
    )
    base.update(overrides)
    return default_config(**base)


def _dataclass_doc(config: ProjectConfig) -> dict:
    plat = config.platform
    return {
        "sampling": {
            "n_wind_bins": config.plan.n_u, "n_hs": config.plan.n_hs,
            "n_tp": config.plan.n_tp, "n_seeds": config.plan.n_seeds,
            "v_in_ms": config.plan.v_in, "v_out_ms": config.plan.v_out,
            "turbulent": config.plan.turbulent, "iec_class": config.plan.iec_class,
            "mww_rad": config.plan.m_ww_fixed,
        },
        "wind_model": {"alpha_ms": config.wind_model.alpha,
                       "beta": config.wind_model.beta,
                       "delta": config.wind_model.delta},
        "rotor": {
            "rated_power_w": config.rotor.rated_power,
            "rotor_diameter_m": config.rotor.rotor_diameter,
            "hub_height_m": config.rotor.hub_height,
            "rna_mass_kg": config.rotor.rna_mass,
            "cut_in_ms": config.rotor.cut_in,
            "rated_speed_ms": config.rotor.rated_speed,
            "cut_out_ms": config.rotor.cut_out,
            "min_rpm": config.rotor.min_rpm, "max_rpm": config.rotor.max_rpm,
            "ct_below_rated": config.rotor.ct_below_rated,
        },
        "material": {
            "density_kgm3": config.material.density,
            "youngs_modulus_pa": config.material.youngs_modulus,
            "shear_modulus_pa": config.material.shear_modulus,
            "poisson": config.material.poisson,
            "yield_strength_pa": config.material.yield_strength,
        },
        "platform": {
            "column_distance_l_m": plat.column_distance_l,
            "column_diameter_m": plat.column_diameter,
            "initial_platform_mass_kg": plat.initial_platform_mass,
            "water_density_kgm3": plat.water_density,
            "z_hub_m": plat.z_hub, "z_struct_m": plat.z_struct,
            "shaft_tilt_rad": plat.shaft_tilt_theta,
            "components": [list(c) for c in plat.component_masses_and_offsets],
        },
        "sn_curve": {
            "log10_a1": config.sn_curve.log10_a1, "m1": config.sn_curve.m1,
            "log10_a2": config.sn_curve.log10_a2, "m2": config.sn_curve.m2,
            "n_transition": config.sn_curve.n_transition,
            "thickness_exponent_k": config.sn_curve.thickness_exponent_k,
            "t_ref_m": config.sn_curve.t_ref,
        },
        "simulation": {
            "duration_s": config.simulation.duration, "dt_s": config.simulation.dt,
            "trim_s": config.simulation.trim, "base_seed": config.simulation.seed,
            "n_stations": config.simulation.n_stations,
        },
        "constraints": {
            "gamma_f": config.constraints.gamma_f,
            "gamma_m": config.constraints.gamma_m,
            "gamma_n": config.constraints.gamma_n,
            "f1_land_band_hz": list(config.constraints.f1_band_land),
            "dt_ratio_band": list(config.constraints.dt_ratio_band),
            "taper_band": list(config.constraints.taper_band),
            "fatigue_limit": config.constraints.fatigue_limit,
            "gamma_d_first_cycle": config.gamma_d_first_cycle,
            "gamma_d_later_cycles": config.gamma_d_later_cycles,
        },
        "optimizer": {"fd_step": config.optimizer.fd_step,
                      "tol": config.optimizer.tol,
                      "max_iter": config.optimizer.max_iter},
        "bounds": {"diameter_m": list(config.diameter_bounds_m),
                   "thickness_m": list(config.thickness_bounds_m)},
        "tower_geometry_csv": config.tower_csv,
        "lifetime_s": config.lifetime_s,
        "event_duration_s": config.event_duration_s,
        "estimator_m": config.estimator_m,
        "cost_rate_per_kg": config.cost_rate,
        "ballast_safety_factor": config.ballast_safety_factor,
        "max_cycles": config.max_cycles,
        "jobs": config.jobs,
        "psd_segment_length": config.psd_segment_length,
        "psd_f_max_hz": config.psd_f_max_hz,
        "top_force_n": list(config.top_force_n),
        "top_moment_nm": list(config.top_moment_nm),
    }


def save_config(config: ProjectConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(_dataclass_doc(config), fh, indent=2, sort_keys=True)


def load_config(path) -> ProjectConfig:
    with open(path) as fh:
        doc = json.load(fh)
    samp = doc["sampling"]
    wm = doc["wind_model"]
    rot = doc["rotor"]
    mat = doc["material"]
    plat = doc["platform"]
    sn = doc["sn_curve"]
    sim = doc["simulation"]
    con = doc["constraints"]
    opt = doc["optimizer"]
    return ProjectConfig(
        plan=SamplingPlan(n_u=samp["n_wind_bins"], n_hs=samp["n_hs"],
                          n_tp=samp["n_tp"], n_seeds=samp["n_seeds"],
                          v_in=samp["v_in_ms"], v_out=samp["v_out_ms"],
                          turbulent=samp["turbulent"], iec_class=samp["iec_class"],
                          m_ww_fixed=samp["mww_rad"]),
        wind_model=WindSpeedModel(alpha=wm["alpha_ms"], beta=wm["beta"],
                                  delta=wm["delta"]),
        rotor=RotorModel(rated_power=rot["rated_power_w"],
                         rotor_diameter=rot["rotor_diameter_m"],
                         hub_height=rot["hub_height_m"], rna_mass=rot["rna_mass_kg"],
                         cut_in=rot["cut_in_ms"], rated_speed=rot["rated_speed_ms"],
                         cut_out=rot["cut_out_ms"], min_rpm=rot["min_rpm"],
                         max_rpm=rot["max_rpm"],
                         ct_below_rated=rot["ct_below_rated"]),
        material=Material(density=mat["density_kgm3"],
                          youngs_modulus=mat["youngs_modulus_pa"],
                          shear_modulus=mat["shear_modulus_pa"],
                          poisson=mat["poisson"],
                          yield_strength=mat["yield_strength_pa"]),
        platform=PlatformModel(
            column_distance_l=plat["column_distance_l_m"],
            column_diameter=plat["column_diameter_m"],
            initial_platform_mass=plat["initial_platform_mass_kg"],
            water_density=plat["water_density_kgm3"], z_hub=plat["z_hub_m"],
            z_struct=plat["z_struct_m"], shaft_tilt_theta=plat["shaft_tilt_rad"],
            component_masses_and_offsets=tuple(
                (c[0], float(c[1]), float(c[2])) for c in plat["components"])),
        sn_curve=SNCurve(log10_a1=sn["log10_a1"], m1=sn["m1"],
                         log10_a2=sn["log10_a2"], m2=sn["m2"],
                         n_transition=sn["n_transition"],
                         thickness_exponent_k=sn["thickness_exponent_k"],
                         t_ref=sn["t_ref_m"]),
        simulation=SimulationConfig(duration=sim["duration_s"], dt=sim["dt_s"],
                                    trim=sim["trim_s"], seed=sim["base_seed"],
                                    n_stations=sim["n_stations"]),
        constraints=ConstraintConfig(
            gamma_f=con["gamma_f"], gamma_m=con["gamma_m"], gamma_n=con["gamma_n"],
            f1_band_land=tuple(con["f1_land_band_hz"]),
            dt_ratio_band=tuple(con["dt_ratio_band"]),
            taper_band=tuple(con["taper_band"]),
            fatigue_limit=con["fatigue_limit"]),
        optimizer=OptimizerSettings(fd_step=opt["fd_step"], tol=opt["tol"],
                                    max_iter=opt["max_iter"]),
        tower_csv=doc.get("tower_geometry_csv"),
        lifetime_s=doc["lifetime_s"],
        event_duration_s=doc.get("event_duration_s"),
        estimator_m=doc["estimator_m"],
        gamma_d_first_cycle=con["gamma_d_first_cycle"],
        gamma_d_later_cycles=con["gamma_d_later_cycles"],
        diameter_bounds_m=tuple(doc["bounds"]["diameter_m"]),
        thickness_bounds_m=tuple(doc["bounds"]["thickness_m"]),
        cost_rate=doc["cost_rate_per_kg"],
        ballast_safety_factor=doc["ballast_safety_factor"],
        max_cycles=doc["max_cycles"],
        jobs=doc["jobs"],
        psd_segment_length=doc["psd_segment_length"],
        psd_f_max_hz=doc["psd_f_max_hz"],
        top_force_n=tuple(doc["top_force_n"]),
        top_moment_nm=tuple(doc["top_moment_nm"]),
    )


def config_hash(config: ProjectConfig) -> str:
    canon = json.dumps(_dataclass_doc(config), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]

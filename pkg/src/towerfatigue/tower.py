"""Sectioned conical tower: geometry, mass/cost, stress, buckling, and modes.

The tower is a stack of conical frustums, each with linearly tapering outer
diameter, fixed height, and uniform wall thickness.  Cross sections are thin
annuli.  The first fore-aft natural frequency comes from an Euler-Bernoulli
cantilever finite-element model with a lumped tip mass for the rotor-nacelle
assembly; the floating-configuration frequency is obtained from the land one
through a fixed conversion ratio.
"""

from __future__ import annotations

import csv
import importlib.resources
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.linalg import eigh

from .errors import ConfigurationError, GeometryError

GRAVITY = 9.81

#: Floating over land-based first-frequency ratio (f_floating = ratio * f_land).
DEFAULT_FLOATING_RATIO = 1.57

#: Linear material cost rate [currency/kg], calibrated on the reference tower.
DEFAULT_COST_RATE = 2.611


@dataclass(frozen=True)
class Material:
    """Isotropic structural material (defaults: tower steel)."""

    density: float = 7850.0
    youngs_modulus: float = 200.0e9
    shear_modulus: float = 79.3e9
    poisson: float = 0.265
    yield_strength: float = 345.0e6

    def __post_init__(self):
        if min(self.density, self.youngs_modulus, self.shear_modulus,
               self.yield_strength) <= 0:
            raise ConfigurationError("material constants must be positive")
        if not 0.0 < self.poisson < 0.5:
            raise ConfigurationError("Poisson ratio must lie in (0, 0.5)")


@dataclass(frozen=True)
class RnaProperties:
    """Rotor-nacelle assembly as a lumped mass at the tower top."""

    mass: float
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        if self.mass <= 0:
            raise ConfigurationError("RNA mass must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ConfigurationError("RNA inertia tensor must be symmetric")


@dataclass(frozen=True)
class TopLoads:
    """Force and moment vectors applied at the tower top (x downwind, z up)."""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float))
        if not (np.all(np.isfinite(self.force)) and np.all(np.isfinite(self.moment))):
            raise ConfigurationError("top loads must be finite")


@dataclass(frozen=True)
class TowerGeometry:
    """Conical-shell tower: n sections from n+1 diameters, n heights, n thicknesses.

    Section i spans bottom diameter ``diameters[i-1]`` to top diameter
    ``diameters[i]`` over height ``heights[i-1]`` with uniform wall thickness
    ``thicknesses[i-1]``.
    """

    diameters: np.ndarray
    heights: np.ndarray
    thicknesses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diameters", np.asarray(self.diameters, dtype=float))
        object.__setattr__(self, "heights", np.asarray(self.heights, dtype=float))
        object.__setattr__(self, "thicknesses",
                           np.asarray(self.thicknesses, dtype=float))
        n = len(self.heights)
        if n < 1 or len(self.diameters) != n + 1 or len(self.thicknesses) != n:
            raise GeometryError(
                f"need n+1 diameters, n heights, n thicknesses; got "
                f"{len(self.diameters)}, {n}, {len(self.thicknesses)}"
            )
        if np.any(self.diameters <= 0) or np.any(self.heights <= 0) \
                or np.any(self.thicknesses <= 0):
            raise GeometryError("all geometric quantities must be positive")
        d_min_per_section = np.minimum(self.diameters[:-1], self.diameters[1:])
        if np.any(self.thicknesses >= d_min_per_section / 2.0):
            raise GeometryError("wall thickness must be below the section radius")

    @property
    def n_sections(self) -> int:
        return len(self.heights)

    @property
    def total_height(self) -> float:
        return float(self.heights.sum())

    @property
    def section_boundaries(self) -> np.ndarray:
        """Heights of section interfaces from the base, length n+1."""
        return np.concatenate([[0.0], np.cumsum(self.heights)])

    @property
    def section_midpoints(self) -> np.ndarray:
        b = self.section_boundaries
        return 0.5 * (b[:-1] + b[1:])

    @property
    def midpoint_diameters(self) -> np.ndarray:
        return 0.5 * (self.diameters[:-1] + self.diameters[1:])

    @property
    def midpoint_radii(self) -> np.ndarray:
        return 0.5 * self.midpoint_diameters


def section_properties(d_outer: float, t: float) -> Tuple[float, float, float]:
    """Annulus area, second moment of area, and section modulus."""
    r = d_outer / 2.0
    if not 0.0 < t <= r:
        raise GeometryError(f"need 0 < t <= d/2, got t={t}, d={d_outer}")
    ri = r - t
    area = math.pi * (r * r - ri * ri)
    inertia = math.pi / 4.0 * (r**4 - ri**4)
    return area, inertia, inertia / r


def section_masses(geometry: TowerGeometry, material: Material) -> np.ndarray:
    """Shell mass of each frustum from the exact conical-shell volume.

    With outer diameter tapering linearly and thickness uniform the shell
    volume integrates to pi * t * h * (d_mean - t).
    """
    d_mean = geometry.midpoint_diameters
    t = geometry.thicknesses
    vol = math.pi * t * geometry.heights * (d_mean - t)
    return material.density * vol


def tower_mass(geometry: TowerGeometry, material: Material,
               cost_rate: float = DEFAULT_COST_RATE) -> Tuple[float, float]:
    """Total shell mass [kg] and linear material cost [currency]."""
    mass = float(section_masses(geometry, material).sum())
    return mass, cost_rate * mass


def stress_profile(geometry: TowerGeometry, material: Material, rna: RnaProperties,
                   loads: TopLoads, g: float = GRAVITY) -> np.ndarray:
    """Envelope von Mises stress at each section midpoint [Pa].

    Axial: top F_z plus RNA weight plus cumulative shell self-weight above the
    midpoint.  Bending: top M_y plus F_x times the lever arm to the midpoint,
    combined with a signed sum.  Hoop and shear are neglected, so the envelope
    is max(|sigma_a + sigma_b|, |sigma_a - sigma_b|).  Pass ``g = 0`` for a
    gravity-free check.
    """
    mids = geometry.section_midpoints
    height = geometry.total_height
    masses = section_masses(geometry, material)
    # mass above each midpoint: half of the own section plus all sections above
    above = np.concatenate([np.cumsum(masses[::-1])[::-1][1:], [0.0]])
    m_above = 0.5 * masses + above
    fx, fz = loads.force[0], loads.force[2]
    my = loads.moment[1]
    stresses = np.empty(geometry.n_sections)
    for i, (z, d, t) in enumerate(zip(mids, geometry.midpoint_diameters,
                                      geometry.thicknesses)):
        area, _, modulus = section_properties(d, t)
        sigma_a = (fz - (rna.mass + m_above[i]) * g) / area
        sigma_b = (my + fx * (height - z)) / modulus
        stresses[i] = max(abs(sigma_a + sigma_b), abs(sigma_a - sigma_b))
    return stresses


def buckling_utilization(geometry: TowerGeometry, material: Material,
                         stresses, knockdown: float = 0.5):
    """Simplified shell and global buckling utilizations per section.

    Shell: sigma / (0.605 * knockdown * E * t / r) from the classical axially
    compressed cylinder, with a configurable knockdown.  Global: sigma over the
    Euler stress of an equivalent cantilever column built from the tower's
    average EI and area over its full height.  These are safeguard checks, not
    a design-code implementation.
    """
    stresses = np.asarray(stresses, dtype=float)
    e_mod = material.youngs_modulus
    radii = geometry.midpoint_radii
    t = geometry.thicknesses
    sigma_cr_shell = 0.605 * knockdown * e_mod * t / radii
    shell = stresses / sigma_cr_shell
    areas = np.array([section_properties(d, ti)[0]
                      for d, ti in zip(geometry.midpoint_diameters, t)])
    inertias = np.array([section_properties(d, ti)[1]
                         for d, ti in zip(geometry.midpoint_diameters, t)])
    sigma_euler = (math.pi**2 * e_mod * inertias.mean()
                   / ((2.0 * geometry.total_height) ** 2 * areas.mean()))
    global_util = stresses / sigma_euler
    return shell, global_util


def _assemble_beam(geometry: TowerGeometry, material: Material,
                   n_elements_per_section: int):
    """Hermite beam K, M for the clamped tower; returns (K, M, n_dof)."""
    e_mod, rho = material.youngs_modulus, material.density
    elements = []
    bounds = geometry.section_boundaries
    for i in range(geometry.n_sections):
        z0, z1 = bounds[i], bounds[i + 1]
        d0, d1 = geometry.diameters[i], geometry.diameters[i + 1]
        t = geometry.thicknesses[i]
        for e in range(n_elements_per_section):
            f_mid = (e + 0.5) / n_elements_per_section
            d_mid = d0 + (d1 - d0) * f_mid
            area, inertia, _ = section_properties(d_mid, t)
            elements.append(((z1 - z0) / n_elements_per_section, area, inertia))
    n_nodes = len(elements) + 1
    ndof = 2 * n_nodes
    kk = np.zeros((ndof, ndof))
    mm = np.zeros((ndof, ndof))
    for e, (le, area, inertia) in enumerate(elements):
        l2 = le * le
        ke = (e_mod * inertia / le**3) * np.array(
            [[12.0, 6.0 * le, -12.0, 6.0 * le],
             [6.0 * le, 4.0 * l2, -6.0 * le, 2.0 * l2],
             [-12.0, -6.0 * le, 12.0, -6.0 * le],
             [6.0 * le, 2.0 * l2, -6.0 * le, 4.0 * l2]])
        me = (rho * area * le / 420.0) * np.array(
            [[156.0, 22.0 * le, 54.0, -13.0 * le],
             [22.0 * le, 4.0 * l2, 13.0 * le, -3.0 * l2],
             [54.0, 13.0 * le, 156.0, -22.0 * le],
             [-13.0 * le, -3.0 * l2, -22.0 * le, 4.0 * l2]])
        idx = np.array([2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3])
        kk[np.ix_(idx, idx)] += ke
        mm[np.ix_(idx, idx)] += me
    return kk, mm, ndof


def first_natural_frequency(geometry: TowerGeometry, material: Material,
                            rna: RnaProperties, n_elements_per_section: int = 4,
                            floating_ratio: float = DEFAULT_FLOATING_RATIO
                            ) -> Tuple[float, float]:
    """First fore-aft frequency of the clamped tower, land and floating [Hz].

    Consistent-mass Euler-Bernoulli elements with the RNA as a lumped tip mass
    plus tip rotary inertia; the floating value applies the fixed conversion
    ratio to the land-based one.
    """
    kk, mm, _ = _assemble_beam(geometry, material, n_elements_per_section)
    mm[-2, -2] += rna.mass
    mm[-1, -1] += float(rna.inertia[1, 1])
    kk = kk[2:, 2:]
    mm = mm[2:, 2:]
    try:
        w2 = eigh(kk, mm, subset_by_index=[0, 0], eigvals_only=True)[0]
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"modal analysis failed: {exc}") from exc
    if w2 <= 0:
        raise GeometryError("nonpositive eigenvalue from modal analysis")
    f1_land = math.sqrt(w2) / (2.0 * math.pi)
    return f1_land, floating_ratio * f1_land


def top_deflection(geometry: TowerGeometry, material: Material, loads: TopLoads,
                   n_elements_per_section: int = 4) -> float:
    """Static tip deflection under the top shear force and moment [m]."""
    kk, _, ndof = _assemble_beam(geometry, material, n_elements_per_section)
    f = np.zeros(ndof)
    f[-2] = loads.force[0]
    f[-1] = loads.moment[1]
    u = np.linalg.solve(kk[2:, 2:], f[2:])
    return float(abs(u[-2]))


def geometric_ratios(geometry: TowerGeometry):
    """Diameter-to-thickness ratios, taper ratios, and monotonicity flags.

    d/t uses the section mean diameter; taper is the interface ratio
    d_{i+1} / d_i; the flags report whether diameter and thickness are
    nonincreasing from base to top.
    """
    d_over_t = geometry.midpoint_diameters / geometry.thicknesses
    taper = geometry.diameters[1:] / geometry.diameters[:-1]
    monotone_d = bool(np.all(np.diff(geometry.diameters) <= 1e-12))
    monotone_t = bool(np.all(np.diff(geometry.thicknesses) <= 1e-12))
    return d_over_t, taper, monotone_d, monotone_t


@dataclass(frozen=True)
class StructuralReport:
    """Snapshot of the structural checks for one geometry."""

    von_mises_per_section: np.ndarray
    shell_buckling_util: np.ndarray
    global_buckling_util: np.ndarray
    f1_land: float
    f1_floating: float
    top_deflection: float
    mass: float
    cost: float


def structural_report(geometry: TowerGeometry, material: Material,
                      rna: RnaProperties, loads: TopLoads,
                      cost_rate: float = DEFAULT_COST_RATE,
                      n_elements_per_section: int = 4) -> StructuralReport:
    stresses = stress_profile(geometry, material, rna, loads)
    shell, glob = buckling_utilization(geometry, material, stresses)
    f1_land, f1_float = first_natural_frequency(
        geometry, material, rna, n_elements_per_section)
    mass, cost = tower_mass(geometry, material, cost_rate)
    return StructuralReport(stresses, shell, glob, f1_land, f1_float,
                            top_deflection(geometry, material, loads,
                                           n_elements_per_section),
                            mass, cost)


def write_geometry_csv(geometry: TowerGeometry, path) -> None:
    """Geometry CSV ``i, d_i_m, h_i_m, t_i_mm``; row 0 carries only d_0."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "d_i_m", "h_i_m", "t_i_mm"])
        writer.writerow([0, f"{geometry.diameters[0]:.6f}", "", ""])
        for i in range(1, geometry.n_sections + 1):
            writer.writerow([i, f"{geometry.diameters[i]:.6f}",
                             f"{geometry.heights[i - 1]:.6f}",
                             f"{geometry.thicknesses[i - 1] * 1000.0:.6f}"])


def read_geometry_csv(path) -> TowerGeometry:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["i", "d_i_m", "h_i_m", "t_i_mm"]:
            raise ConfigurationError(f"unexpected geometry CSV header: {header}")
        diameters, heights, thicknesses = [], [], []
        for row in reader:
            if not row or not row[0].strip():
                continue
            diameters.append(float(row[1]))
            if row[2].strip():
                heights.append(float(row[2]))
                thicknesses.append(float(row[3]) / 1000.0)
    return TowerGeometry(np.array(diameters), np.array(heights), np.array(thicknesses))


def _bundled(name: str) -> TowerGeometry:
    ref = importlib.resources.files("towerfatigue.data") / name
    with importlib.resources.as_file(ref) as path:
        return read_geometry_csv(path)


def reference_tower() -> TowerGeometry:
    """Bundled 30-section reference tower geometry."""
    return _bundled("reference_tower.csv")


def optimized_tower() -> TowerGeometry:
    """Bundled fatigue-optimized tower geometry."""
    return _bundled("optimized_tower.csv")

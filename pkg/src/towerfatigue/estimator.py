"""Geometry-scaling fatigue surrogate used inside the optimization loop.

Damage at a bending-dominated annular section scales with the outer radius,
wall thickness, and the S-N thickness correction as

    D = C * r^(-2m) * t^(-m) * (t / t_ref)^(k m)

so one high-fidelity damage profile calibrates a per-section constant C that
predicts damage for any rescaled geometry without re-simulation.  Load
redistribution from geometry changes is deliberately not captured; the final
design is always re-checked with the full pipeline.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .fatigue import SectionDamageProfile
from .tower import TowerGeometry


@dataclass(frozen=True)
class CalibrationSet:
    """Per-section constants plus the S-N parameters they were built with."""

    constants: np.ndarray
    m: float
    k: float
    t_ref: float
    calibration_geometry_hash: str

    def __post_init__(self):
        object.__setattr__(self, "constants", np.asarray(self.constants, dtype=float))
        if np.any(self.constants < 0):
            raise ConsistencyError("calibration constants must be nonnegative")


def geometry_hash(geometry: TowerGeometry) -> str:
    payload = np.concatenate([geometry.diameters, geometry.heights,
                              geometry.thicknesses]).tobytes()
    return hashlib.sha256(payload).hexdigest()[:16]


def calibrate(geometry: TowerGeometry, damages: SectionDamageProfile, m: float = 4.0,
              k: float = 0.20, t_ref: float = 0.025) -> CalibrationSet:
    """Fit C_i = D_i * r_i^(2m) * t_i^m * (t_ref / t_i)^(k m) per section.

    ``m`` defaults to 4, midway between the two S-N slopes; pin it to a single
    slope when checking exact rescaling behaviour.
    """
    if len(damages.damage) != geometry.n_sections:
        raise ConsistencyError(
            f"damage profile has {len(damages.damage)} sections, geometry has "
            f"{geometry.n_sections}"
        )
    r = geometry.midpoint_radii
    t = geometry.thicknesses
    constants = damages.damage * r ** (2.0 * m) * t**m * (t_ref / t) ** (k * m)
    return CalibrationSet(constants, m, k, t_ref, geometry_hash(geometry))


def predict(calibration: CalibrationSet, geometry: TowerGeometry) -> SectionDamageProfile:
    """Predict the damage profile of ``geometry`` from a calibration set."""
    if len(calibration.constants) != geometry.n_sections:
        raise ConsistencyError(
            f"calibration has {len(calibration.constants)} sections, geometry has "
            f"{geometry.n_sections}"
        )
    r = geometry.midpoint_radii
    t = geometry.thicknesses
    m, k = calibration.m, calibration.k
    damage = (calibration.constants * r ** (-2.0 * m) * t ** (-m)
              * (t / calibration.t_ref) ** (k * m))
    return SectionDamageProfile(geometry.section_midpoints, damage)


def save_calibration(calibration: CalibrationSet, path) -> None:
    """Persist as JSON keyed by section index."""
    doc = {
        "m": calibration.m,
        "k": calibration.k,
        "t_ref_m": calibration.t_ref,
        "calibration_geometry_hash": calibration.calibration_geometry_hash,
        "constants": {str(i): c for i, c in enumerate(calibration.constants)},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_calibration(path) -> CalibrationSet:
    with open(path) as fh:
        doc = json.load(fh)
    n = len(doc["constants"])
    constants = np.array([doc["constants"][str(i)] for i in range(n)])
    return CalibrationSet(constants, doc["m"], doc["k"], doc["t_ref_m"],
                          doc["calibration_geometry_hash"])

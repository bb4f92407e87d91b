"""Static platform calibration: pitch ballast and heave mass compensation.

Pitch: the structural moment about the platform pitch axis (gravity of the
rotor-nacelle components plus the mean aerodynamic loads) is zeroed by water
ballast in the semi-submersible columns: the upwind column when the moment is
negative, the port and starboard pair when positive.  The two-column lever
works out to the single-column distance (L cos 60 deg * 2 = L), so the water
mass per column is |M| / (L g) in both cases.

Heave: any tower mass change is compensated one-to-one by the opposite
platform mass change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import CapacityError, ConfigurationError

GRAVITY = 9.81

TARGET_NONE = "none"
TARGET_UPWIND = "upwind"
TARGET_PORT_STARBOARD = "port_and_starboard"


@dataclass(frozen=True)
class PlatformModel:
    """Semi-submersible platform constants for the static moment balance.

    ``component_masses_and_offsets`` lists (name, mass [kg], x [m]) for the
    rotor-nacelle components (nacelle, hub, blades); x is the horizontal
    position of each center of mass, downwind positive.  The hub entry also
    supplies the lever of the tilted thrust component.
    """

    column_distance_l: float
    column_diameter: float
    initial_platform_mass: float
    water_density: float = 1025.0
    z_hub: float = 170.0
    z_struct: float = 0.0
    shaft_tilt_theta: float = 0.0
    component_masses_and_offsets: Tuple[Tuple[str, float, float], ...] = ()
    column_capacity_kg: Optional[float] = None

    def __post_init__(self):
        if self.column_distance_l <= 0 or self.column_diameter <= 0:
            raise ConfigurationError("column distance and diameter must be positive")
        if self.initial_platform_mass < 0:
            raise ConfigurationError("platform mass must be nonnegative")
        for name, mass, _ in self.component_masses_and_offsets:
            if mass < 0:
                raise ConfigurationError(f"component {name!r} has negative mass")

    @property
    def hub_offset_x(self) -> float:
        for name, _, x in self.component_masses_and_offsets:
            if name == "hub":
                return x
        return 0.0


@dataclass(frozen=True)
class BallastResult:
    """Ballast targets and the resulting platform mass bookkeeping."""

    target_columns: str
    water_mass_per_column: float
    water_height: float
    adjusted_platform_mass: float
    n_columns: int = 0

    def __post_init__(self):
        if self.water_mass_per_column < 0 or self.adjusted_platform_mass < 0:
            raise ConfigurationError("ballast masses must be nonnegative")


def structural_moment(platform: PlatformModel, mean_thrust: float,
                      mean_rotor_moment: float) -> float:
    """Total static pitch moment M_struct = M_weight + M_aero [N m].

    M_weight = g * sum(m_c * x_c) over the listed components; M_aero combines
    the tilted thrust acting at hub height above the reference and the mean
    rotor moment.
    """
    m_weight = GRAVITY * math.fsum(
        mass * x for _, mass, x in platform.component_masses_and_offsets)
    theta = platform.shaft_tilt_theta
    m_aero = (mean_thrust * math.cos(theta) * (platform.z_hub - platform.z_struct)
              + mean_thrust * math.sin(theta) * platform.hub_offset_x
              + mean_rotor_moment)
    return m_weight + m_aero


def pitch_ballast(m_struct: float, platform: PlatformModel, sf: float = 1.0) -> BallastResult:
    """Water ballast that closes the static pitch moment balance.

    Negative structural moment -> upwind column (n = 1); positive -> port and
    starboard columns (n = 2, equal split, combined lever equal to L); zero ->
    no ballast.  The water height and the platform-mass deduction are both
    inflated by the safety factor; the moment balance itself is at SF = 1.
    """
    if sf < 1.0:
        raise ConfigurationError(f"safety factor must be >= 1, got {sf}")
    if m_struct == 0.0:
        return BallastResult(TARGET_NONE, 0.0, 0.0, platform.initial_platform_mass, 0)
    target = TARGET_UPWIND if m_struct < 0.0 else TARGET_PORT_STARBOARD
    n_columns = 1 if m_struct < 0.0 else 2
    water_mass = abs(m_struct) / (platform.column_distance_l * GRAVITY)
    if platform.column_capacity_kg is not None and water_mass > platform.column_capacity_kg:
        raise CapacityError(
            f"required ballast {water_mass:.3e} kg exceeds column capacity "
            f"{platform.column_capacity_kg:.3e} kg"
        )
    column_area = math.pi * platform.column_diameter**2 / 4.0
    water_height = water_mass / (platform.water_density * column_area) * sf
    adjusted = platform.initial_platform_mass - n_columns * water_mass * sf
    if adjusted < 0.0:
        raise CapacityError(
            f"ballast deduction {n_columns * water_mass * sf:.3e} kg exceeds the "
            f"platform mass {platform.initial_platform_mass:.3e} kg"
        )
    return BallastResult(target, water_mass, water_height, adjusted, n_columns)


def restoring_moment(result: BallastResult, platform: PlatformModel,
                     m_struct: float) -> float:
    """Moment produced by the ballast, signed to oppose ``m_struct``."""
    magnitude = result.water_mass_per_column * GRAVITY * platform.column_distance_l
    return -math.copysign(magnitude, m_struct) if result.n_columns else 0.0


def heave_adjust(delta_tower_mass: float,
                 platform_mass: Optional[float] = None) -> float:
    """Platform mass change that balances a tower mass change.

    Enforces delta_tower + delta_platform = 0.  When the current platform mass
    is given, a resulting negative mass raises an error.
    """
    delta_platform = -delta_tower_mass
    if platform_mass is not None and platform_mass + delta_platform < 0.0:
        raise CapacityError(
            f"platform mass {platform_mass:.3e} kg cannot absorb a "
            f"{delta_platform:+.3e} kg adjustment"
        )
    return delta_platform


def ballast_to_dict(result: BallastResult) -> dict:
    return {
        "target_columns": result.target_columns,
        "water_mass_per_column_kg": result.water_mass_per_column,
        "water_height_m": result.water_height,
        "adjusted_platform_mass_kg": result.adjusted_platform_mass,
        "n_columns": result.n_columns,
    }

"""Synthetic dynamic response provider for sampled environmental states.

Stands in for a coupled aero-hydro-servo-elastic solver at desk scale: a
spectrally shaped turbulent wind series drives a quadratic thrust law, a
Pierson-Moskowitz sea state supplies an equivalent inertia force, and the sum
excites a single-degree-of-freedom oscillator at the tower's first floating
frequency (1% structural damping).  The tower-base fore-aft moment is the
quasi-static thrust moment plus the dynamically amplified fluctuation; station
moments follow the cantilever lever reduction (H - z) / H.

Every output is a pure, bit-reproducible function of (state, tower, rotor,
config): randomness enters only through seeded generators.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import signal as _signal

from .errors import ConfigurationError, DomainError, RejectedStateError
from .sampling import EnvironmentalState
from .tower import Material, RnaProperties, TowerGeometry, first_natural_frequency

AIR_DENSITY = 1.225  # kg/m^3
WATER_DENSITY = 1025.0  # kg/m^3
STRUCTURAL_DAMPING = 0.01  # fraction of critical
KAIMAL_LENGTH = 340.2  # m, single-point turbulence length scale
WAVE_INERTIA_VOLUME = 100.0  # m^3, equivalent column volume for wave force
WAVE_INERTIA_CM = 1.0  # inertia coefficient
WAVE_BAND_FACTOR = 4.0  # spectrum truncated above this multiple of the peak frequency
BLADE_PASSING_FRACTION = 0.01  # 3P thrust ripple as a fraction of mean thrust
PITCH_STIFFNESS = 5.0e9  # N m / rad, hydrostatic restoring used for pitch channel
WATERPLANE_AREA = 800.0  # m^2, for the heave channel
ROTOR_MOMENT_COEFF = 0.02  # mean rotor moment = coeff * thrust * rotor diameter


@dataclass(frozen=True)
class SimulationConfig:
    """Run lengths and discretization for one simulation."""

    duration: float = 1000.0
    dt: float = 0.05
    trim: float = 400.0
    seed: int = 0
    n_stations: int = 31

    def __post_init__(self):
        if not self.duration > self.trim >= 0.0:
            raise ConfigurationError("need duration > trim >= 0")
        if self.dt <= 0.0:
            raise ConfigurationError("time step must be positive")
        n = self.duration / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ConfigurationError("duration must be an integer number of steps")
        if self.n_stations < 2:
            raise ConfigurationError("need at least two output stations")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def fs(self) -> float:
        return 1.0 / self.dt


#: Calibration runs are short: transients die out quickly under steady wind.
CALIBRATION_DURATION = 200.0
CALIBRATION_TRIM = 100.0


@dataclass(frozen=True)
class RotorModel:
    """Rotor and drivetrain constants for the steady schedules.

    The thrust coefficient is flat below the rated wind speed and rolls off
    as (u_rated / u)^2 above it, the standard pitch-regulated shape.  Rotor
    speed ramps linearly from min to max rpm between cut-in and rated, then
    stays at max.
    """

    rated_power: float = 22.0e6
    rotor_diameter: float = 284.0
    hub_height: float = 170.0
    rna_mass: float = 1218685.0
    cut_in: float = 3.0
    rated_speed: float = 11.0
    cut_out: float = 25.0
    min_rpm: float = 1.807
    max_rpm: float = 7.061
    ct_below_rated: float = 0.8

    def __post_init__(self):
        if not self.cut_in < self.rated_speed <= self.cut_out:
            raise ConfigurationError("need cut_in < rated_speed <= cut_out")
        if not 0 <= self.min_rpm < self.max_rpm:
            raise ConfigurationError("need 0 <= min_rpm < max_rpm")

    def thrust_coefficient(self, u):
        """Ct(u): flat below rated, quadratic roll-off above."""
        u = np.asarray(u, dtype=float)
        ct = np.full_like(u, self.ct_below_rated)
        above = u > self.rated_speed
        ct = np.where(above, self.ct_below_rated * (self.rated_speed / np.maximum(u, 1e-12)) ** 2, ct)
        return np.where(u <= 0.0, 0.0, ct)

    def rotor_speed_rpm(self, u):
        u = np.asarray(u, dtype=float)
        frac = (u - self.cut_in) / (self.rated_speed - self.cut_in)
        rpm = self.min_rpm + (self.max_rpm - self.min_rpm) * frac
        rpm = np.clip(rpm, self.min_rpm, self.max_rpm)
        return np.where(u <= 0.0, 0.0, rpm)

    @property
    def rotor_area(self) -> float:
        return float(np.pi * (self.rotor_diameter / 2.0) ** 2)


@dataclass(frozen=True)
class ResponseRecord:
    """Simulated time series for one environmental state."""

    time: np.ndarray
    station_heights: np.ndarray
    fore_aft_moment: np.ndarray  # (n_stations, n_samples)
    rotor_speed: np.ndarray
    platform_pitch: np.ndarray
    platform_heave: np.ndarray
    mean_thrust: float
    mean_rotor_moment: float

    def __post_init__(self):
        for name in ("time", "station_heights", "fore_aft_moment", "rotor_speed",
                     "platform_pitch", "platform_heave"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.time)
        if self.fore_aft_moment.shape != (len(self.station_heights), n):
            raise ConfigurationError("moment matrix must be (n_stations, n_samples)")
        for arr in (self.rotor_speed, self.platform_pitch, self.platform_heave):
            if len(arr) != n:
                raise ConfigurationError("all channels must share the time length")
        if np.any(np.diff(self.station_heights) <= 0):
            raise ConfigurationError("station heights must be strictly increasing")


def _rng(config_seed: int, state_seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([config_seed & 0x7FFFFFFF, state_seed & 0x7FFFFFFF, stream])


def _shaped_gaussian(psd_values: np.ndarray, n: int, rng) -> np.ndarray:
    """Zero-mean Gaussian series with the given one-sided spectral shape."""
    n_freq = n // 2 + 1
    coeff = np.zeros(n_freq, dtype=complex)
    amp = np.sqrt(psd_values[1:])
    coeff[1:] = (rng.standard_normal(n_freq - 1) + 1j * rng.standard_normal(n_freq - 1)) * amp
    x = np.fft.irfft(coeff, n=n)
    return x


def synth_wind_series(u: float, sigma_w: float, seed: int,
                      config: SimulationConfig) -> np.ndarray:
    """Stationary turbulent wind series with exact sample mean and deviation.

    The spectral shape is a single-point Kaimal form S(f) ~ (1 + 6 f L/u)^(-5/3);
    the realization is affinely normalized so the sample mean equals ``u`` and
    the sample standard deviation equals ``sigma_w``.  Zero turbulence returns
    the constant series.
    """
    if u < 0 or sigma_w < 0:
        raise DomainError("wind speed and turbulence deviation must be nonnegative")
    n = config.n_samples
    if sigma_w == 0.0:
        return np.full(n, u)
    freqs = np.fft.rfftfreq(n, d=config.dt)
    u_eff = max(u, 0.1)
    psd = (KAIMAL_LENGTH / u_eff) / (1.0 + 6.0 * freqs * KAIMAL_LENGTH / u_eff) ** (5.0 / 3.0)
    x = _shaped_gaussian(psd, n, _rng(config.seed, seed, 1))
    std = x.std()
    if std == 0.0:
        return np.full(n, u)
    return u + sigma_w * (x - x.mean()) / std


def synth_wave_force(hs: float, tp: float, seed: int, config: SimulationConfig,
                     regular: bool = False) -> np.ndarray:
    """Zero-mean equivalent wave inertia force on a single column [N].

    A Pierson-Moskowitz surface elevation spectrum parameterized by (hs, tp)
    is synthesized and normalized so the realized significant height (four
    standard deviations) matches ``hs``; the force is rho * Cm * V * eta_ddot.
    The spectrum is truncated above a few multiples of the peak frequency:
    surface energy there is negligible, but untruncated it would dominate the
    acceleration.  ``regular=True`` replaces the spectrum by a single
    component at 1/tp.
    """
    if hs < 0:
        raise DomainError(f"significant wave height must be nonnegative, got {hs}")
    n = config.n_samples
    if hs == 0.0:
        return np.zeros(n)
    if tp <= 0:
        raise DomainError(f"peak period must be positive, got {tp}")
    t = np.arange(n) * config.dt
    fp = 1.0 / tp
    if regular:
        eta = (hs / 2.0) * np.sin(2.0 * np.pi * fp * t)
        eta_ddot = -((2.0 * np.pi * fp) ** 2) * eta
    else:
        freqs = np.fft.rfftfreq(n, d=config.dt)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            psd = (5.0 / 16.0) * hs**2 * fp**4 * freqs**-5.0 \
                * np.exp(-1.25 * (fp / freqs) ** 4)
        psd[0] = 0.0
        psd[~np.isfinite(psd)] = 0.0
        psd[freqs > WAVE_BAND_FACTOR * fp] = 0.0
        rng = _rng(config.seed, seed, 2)
        n_freq = n // 2 + 1
        coeff = np.zeros(n_freq, dtype=complex)
        coeff[1:] = (rng.standard_normal(n_freq - 1)
                     + 1j * rng.standard_normal(n_freq - 1)) * np.sqrt(psd[1:])
        eta = np.fft.irfft(coeff, n=n)
        std = eta.std()
        if std == 0.0:
            return np.zeros(n)
        scale = (hs / 4.0) / std
        coeff *= scale
        eta_ddot = np.fft.irfft(coeff * -((2.0 * np.pi * freqs) ** 2), n=n)
    return WATER_DENSITY * WAVE_INERTIA_CM * WAVE_INERTIA_VOLUME * eta_ddot


def _sdof_filter(series: np.ndarray, f_nat: float, damping: float,
                 fs: float) -> np.ndarray:
    """Unity-DC-gain second-order resonator applied to a force series."""
    wn = 2.0 * np.pi * f_nat
    b, a = _signal.bilinear([wn * wn], [1.0, 2.0 * damping * wn, wn * wn], fs)
    return _signal.lfilter(b, a, series)


def _rotor_average(wind: np.ndarray, u_ref: float, diameter: float,
                   fs: float) -> np.ndarray:
    """First-order lag modelling rotor-disk averaging of point turbulence.

    Time constant = D / (2 u): gusts smaller than the rotor are smoothed out
    before they become thrust.
    """
    tau = diameter / (2.0 * max(u_ref, 1.0))
    b, a = _signal.bilinear([1.0], [tau, 1.0], fs)
    return _signal.lfilter(b, a, wind - wind[0]) + wind[0]


def simulate_response(state: EnvironmentalState, tower: TowerGeometry,
                      rotor: RotorModel, config: SimulationConfig,
                      steady: bool = False, material: Optional[Material] = None,
                      f1_floating_hz: Optional[float] = None) -> ResponseRecord:
    """Reduced-order response of the tower under one environmental state.

    ``steady=True`` runs constant wind at ``state.u`` with zero waves and is
    used for calibration (its mean thrust and rotor moment feed the platform
    pitch balance).  ``u = 0`` is accepted as a parked test mode.  The first
    floating frequency is computed from the tower unless ``f1_floating_hz``
    pins it (workflow cycles reuse the reference mode).
    """
    u0 = state.u
    if u0 != 0.0 and not rotor.cut_in <= u0 <= rotor.cut_out:
        raise RejectedStateError(
            f"wind speed {u0} m/s outside operating range "
            f"[{rotor.cut_in}, {rotor.cut_out}]"
        )
    n = config.n_samples
    t = np.arange(n) * config.dt
    if steady or state.sigma_w == 0.0:
        wind = np.full(n, u0)
    else:
        wind = synth_wind_series(u0, state.sigma_w, state.seed, config)
        wind = _rotor_average(wind, u0, rotor.rotor_diameter, config.fs)
        wind = np.clip(wind, 0.0, None)
    thrust = 0.5 * AIR_DENSITY * rotor.thrust_coefficient(wind) * rotor.rotor_area * wind**2
    wave = np.zeros(n) if steady else synth_wave_force(state.hs, state.tp, state.seed, config)
    rpm = rotor.rotor_speed_rpm(wind)

    if f1_floating_hz is None:
        _, f1_floating_hz = first_natural_frequency(
            tower, material or Material(), RnaProperties(mass=rotor.rna_mass),
            n_elements_per_section=2)
    mean_thrust_full = thrust.mean()
    if steady:
        blade_passing = np.zeros(n)
    else:
        # blade-passing thrust ripple at 3P, phase integrated through rpm(t)
        phase = 2.0 * np.pi * 3.0 * np.cumsum(rpm / 60.0) * config.dt
        blade_passing = BLADE_PASSING_FRACTION * mean_thrust_full * np.sin(phase)
    excitation = (thrust - mean_thrust_full) + blade_passing + wave
    amplified = _sdof_filter(excitation, f1_floating_hz, STRUCTURAL_DAMPING, config.fs)

    height = tower.total_height
    base_moment = height * (mean_thrust_full + amplified)
    stations = np.linspace(0.0, height, config.n_stations)
    lever = (height - stations) / height
    moments = np.outer(lever, base_moment)

    pitch = base_moment / PITCH_STIFFNESS
    heave = wave / (WATER_DENSITY * 9.81 * WATERPLANE_AREA)

    keep = t >= config.trim
    mean_thrust = float(thrust[keep].mean())
    mean_rotor_moment = ROTOR_MOMENT_COEFF * mean_thrust * rotor.rotor_diameter
    return ResponseRecord(time=t, station_heights=stations, fore_aft_moment=moments,
                          rotor_speed=rpm, platform_pitch=pitch, platform_heave=heave,
                          mean_thrust=mean_thrust, mean_rotor_moment=mean_rotor_moment)


def write_response_csv(record: ResponseRecord, path) -> None:
    """Per-state CSV: time_s, rotor_rpm, pitch_rad, heave_m, m_fa_<z>..."""
    header = ["time_s", "rotor_rpm", "pitch_rad", "heave_m"] + [
        f"m_fa_{z:.3f}" for z in record.station_heights]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, ti in enumerate(record.time):
            row = [repr(float(ti)), repr(float(record.rotor_speed[i])),
                   repr(float(record.platform_pitch[i])),
                   repr(float(record.platform_heave[i]))]
            row.extend(repr(float(m)) for m in record.fore_aft_moment[:, i])
            writer.writerow(row)


def read_response_csv(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back (time, station_heights, moments) from a response CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        stations = np.array([float(h.split("m_fa_")[1]) for h in header[4:]])
        rows = np.array([[float(v) for v in row] for row in reader])
    return rows[:, 0], stations, rows[:, 4:].T

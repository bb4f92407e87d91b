import numpy as np
import pytest

from towerfatigue import estimator as est
from towerfatigue import fatigue as fat
from towerfatigue import tower
from towerfatigue.errors import ConsistencyError
from towerfatigue.fatigue import SectionDamageProfile
from towerfatigue.response import ResponseRecord


def _one_section_tower(r, t):
    return tower.TowerGeometry([2 * r, 2 * r], [10.0], [t])


class TestCalibrate:
    def test_hand_computed_constant(self):
        geometry = _one_section_tower(5.0, 0.05)
        damages = SectionDamageProfile(geometry.section_midpoints, [2.0])
        cal = est.calibrate(geometry, damages, m=4.0, k=0.2, t_ref=0.025)
        assert cal.constants[0] == pytest.approx(2.804, abs=2e-3)

    def test_zero_damage_zero_constant(self):
        geometry = _one_section_tower(5.0, 0.05)
        damages = SectionDamageProfile(geometry.section_midpoints, [0.0])
        cal = est.calibrate(geometry, damages)
        assert cal.constants[0] == 0.0

    def test_k_zero_collapses_thickness_term(self):
        geometry = _one_section_tower(5.0, 0.05)
        damages = SectionDamageProfile(geometry.section_midpoints, [2.0])
        cal = est.calibrate(geometry, damages, m=4.0, k=0.0)
        assert cal.constants[0] == pytest.approx(2.0 * 5.0**8 * 0.05**4, rel=1e-12)

    def test_misaligned_profile(self):
        geometry = _one_section_tower(5.0, 0.05)
        damages = SectionDamageProfile([0.0, 1.0], [1.0, 2.0])
        with pytest.raises(ConsistencyError):
            est.calibrate(geometry, damages)


class TestPredict:
    def test_roundtrip_identity_bundled(self):
        for geometry in (tower.reference_tower(), tower.optimized_tower()):
            rng = np.random.default_rng(1)
            damages = SectionDamageProfile(geometry.section_midpoints,
                                           rng.uniform(0.1, 30.0, geometry.n_sections))
            cal = est.calibrate(geometry, damages)
            back = est.predict(cal, geometry)
            assert np.allclose(back.damage, damages.damage, rtol=1e-12, atol=0)

    def test_radius_doubling(self):
        g0 = _one_section_tower(5.0, 0.05)
        g1 = _one_section_tower(10.0, 0.05)
        cal = est.calibrate(g0, SectionDamageProfile(g0.section_midpoints, [1.0]),
                            m=4.0, k=0.0)
        pred = est.predict(cal, g1)
        assert pred.damage[0] == pytest.approx(2.0**-8, rel=1e-12)

    def test_thickness_doubling(self):
        g0 = _one_section_tower(5.0, 0.05)
        g1 = _one_section_tower(5.0, 0.10)
        cal = est.calibrate(g0, SectionDamageProfile(g0.section_midpoints, [1.0]),
                            m=4.0, k=0.2)
        pred = est.predict(cal, g1)
        assert pred.damage[0] == pytest.approx(2.0**-4 * 2.0**0.8, rel=1e-12)

    def test_monotone_in_radius_and_thickness(self):
        g0 = _one_section_tower(5.0, 0.05)
        cal = est.calibrate(g0, SectionDamageProfile(g0.section_midpoints, [1.0]),
                            m=4.0, k=0.2)
        radii = np.linspace(4.0, 7.0, 10)
        d_by_r = [est.predict(cal, _one_section_tower(r, 0.05)).damage[0]
                  for r in radii]
        assert np.all(np.diff(d_by_r) < 0)
        thicknesses = np.linspace(0.03, 0.12, 10)
        d_by_t = [est.predict(cal, _one_section_tower(5.0, t)).damage[0]
                  for t in thicknesses]
        assert np.all(np.diff(d_by_t) < 0)

    def test_section_count_mismatch(self):
        g0 = _one_section_tower(5.0, 0.05)
        cal = est.calibrate(g0, SectionDamageProfile(g0.section_midpoints, [1.0]))
        g1 = tower.TowerGeometry([10.0, 9.0, 8.0], [5.0, 5.0], [0.05, 0.05])
        with pytest.raises(ConsistencyError):
            est.predict(cal, g1)


def _record(base_series, geometry, n_stations=12):
    height = geometry.total_height
    stations = np.linspace(0.0, height, n_stations)
    lever = (height - stations) / height
    t = np.arange(len(base_series)) * 0.1
    return ResponseRecord(time=t, station_heights=stations,
                          fore_aft_moment=np.outer(lever, base_series),
                          rotor_speed=np.zeros_like(t),
                          platform_pitch=np.zeros_like(t),
                          platform_heave=np.zeros_like(t),
                          mean_thrust=0.0, mean_rotor_moment=0.0)


class TestExactScalingOracle:
    """With a single-slope curve and the estimator pinned to that slope, the
    surrogate must reproduce the full rainflow pipeline exactly under uniform
    per-section rescaling of (r, t) for a fixed moment history."""

    @pytest.mark.parametrize("slope,log_a", [(3.0, 12.010), (5.0, 15.350)])
    def test_exactness(self, slope, log_a):
        curve = fat.SNCurve.single_slope(log_a, slope, thickness_exponent_k=0.2,
                                         t_ref=0.025)
        base_d = np.array([9.0, 8.5, 8.0, 7.5, 7.0])
        heights = np.full(4, 12.0)
        base_t = np.array([0.065, 0.060, 0.055, 0.050])  # all above t_ref
        g0 = tower.TowerGeometry(base_d, heights, base_t)
        rng = np.random.default_rng(42)
        series = 4e8 * rng.standard_normal(600).cumsum() / 25.0 + 6e8
        record = _record(series, g0)
        d0 = fat.event_damage(record, g0, curve, trim=0.0)
        cal = est.calibrate(g0, SectionDamageProfile(g0.section_midpoints, d0),
                            m=slope, k=0.2, t_ref=0.025)
        for trial in range(25):
            lam = rng.uniform(0.85, 1.30)  # similarity factor on (r, t)
            g1 = tower.TowerGeometry(base_d * lam, heights, base_t * lam)
            d_pipe = fat.event_damage(record, g1, curve, trim=0.0)
            d_est = est.predict(cal, g1).damage
            assert np.allclose(d_est, d_pipe, rtol=1e-9, atol=0), \
                f"trial {trial}: {d_est} vs {d_pipe}"


class TestPersistence:
    def test_json_roundtrip(self, tmp_path):
        geometry = tower.reference_tower()
        damages = SectionDamageProfile(geometry.section_midpoints,
                                       np.linspace(30.0, 3.0, 30))
        cal = est.calibrate(geometry, damages)
        path = tmp_path / "calibration.json"
        est.save_calibration(cal, path)
        back = est.load_calibration(path)
        assert np.array_equal(back.constants, cal.constants)
        assert back.m == cal.m and back.k == cal.k and back.t_ref == cal.t_ref
        assert back.calibration_geometry_hash == cal.calibration_geometry_hash

import numpy as np
import pytest

from towerfatigue import response as resp
from towerfatigue import spectral, tower
from towerfatigue.errors import RejectedStateError
from towerfatigue.sampling import EnvironmentalState

ROTOR = resp.RotorModel()
MATERIAL = tower.Material()
SHORT = resp.SimulationConfig(duration=200.0, dt=0.05, trim=100.0, seed=77,
                              n_stations=12)


def state(u=12.5, seed=1, sigma=2.396, hs=2.0, tp=8.0):
    return EnvironmentalState(id=1, u=u, seed=seed, sigma_w=sigma, hs=hs, tp=tp,
                              m_ww=0.0, weight=1.0)


@pytest.fixture(scope="module")
def ref_tower():
    return tower.reference_tower()


@pytest.fixture(scope="module")
def f1_ref(ref_tower):
    _, f1f = tower.first_natural_frequency(ref_tower, MATERIAL,
                                           tower.RnaProperties(ROTOR.rna_mass), 2)
    return f1f


class TestWindSeries:
    def test_zero_turbulence_constant(self):
        series = resp.synth_wind_series(10.0, 0.0, 3, SHORT)
        assert np.all(series == 10.0)

    def test_sample_moments(self):
        long_cfg = resp.SimulationConfig(duration=3600.0, dt=0.1, trim=0.0, seed=5,
                                         n_stations=2)
        series = resp.synth_wind_series(12.5, 2.396, 1, long_cfg)
        assert series.mean() == pytest.approx(12.5, abs=1e-9)
        assert series.std() == pytest.approx(2.396, rel=0.05)

    def test_deterministic(self):
        a = resp.synth_wind_series(12.5, 2.0, 9, SHORT)
        b = resp.synth_wind_series(12.5, 2.0, 9, SHORT)
        assert np.array_equal(a, b)

    def test_seed_changes_series(self):
        a = resp.synth_wind_series(12.5, 2.0, 1, SHORT)
        b = resp.synth_wind_series(12.5, 2.0, 2, SHORT)
        assert not np.array_equal(a, b)

    def test_low_frequency_dominated(self):
        # spectral shape falls with frequency: first decade holds most power
        long_cfg = resp.SimulationConfig(duration=3600.0, dt=0.1, trim=0.0, seed=2,
                                         n_stations=2)
        series = resp.synth_wind_series(12.0, 2.0, 4, long_cfg)
        est = spectral.welch_psd(series, fs=10.0, segment_length=4096)
        low = np.trapezoid(est.values[est.frequencies <= 0.1],
                           est.frequencies[est.frequencies <= 0.1])
        assert low > 0.5 * series.var()


class TestWaveForce:
    def test_calm_sea(self):
        assert np.all(resp.synth_wave_force(0.0, 8.0, 1, SHORT) == 0.0)

    def test_regular_mode_psd_peak(self):
        cfg = resp.SimulationConfig(duration=800.0, dt=0.05, trim=0.0, seed=3,
                                    n_stations=2)
        tp = 8.0
        force = resp.synth_wave_force(2.0, tp, 1, cfg, regular=True)
        est = spectral.welch_psd(force, fs=cfg.fs, segment_length=4096)
        peak = est.frequencies[np.argmax(est.values)]
        assert abs(peak - 1.0 / tp) <= cfg.fs / 4096

    def test_zero_mean(self):
        force = resp.synth_wave_force(3.0, 9.0, 2, SHORT)
        assert abs(force.mean()) < 0.05 * force.std()

    def test_significant_height_normalization(self):
        cfg = resp.SimulationConfig(duration=2000.0, dt=0.1, trim=0.0, seed=8,
                                    n_stations=2)
        hs, tp = 3.0, 9.0
        fp = 1.0 / tp
        freqs = np.fft.rfftfreq(cfg.n_samples, d=cfg.dt)
        # reconstruct the surface elevation the force was built from
        force = resp.synth_wave_force(hs, tp, 4, cfg)
        spec = np.fft.rfft(force) / (resp.WATER_DENSITY * resp.WAVE_INERTIA_CM
                                     * resp.WAVE_INERTIA_VOLUME)
        with np.errstate(divide="ignore", invalid="ignore"):
            eta_spec = np.where(freqs > 0, -spec / (2 * np.pi * freqs) ** 2, 0.0)
        eta = np.fft.irfft(eta_spec, n=cfg.n_samples)
        assert 4.0 * eta.std() == pytest.approx(hs, rel=0.10)

    def test_deterministic(self):
        a = resp.synth_wave_force(2.0, 8.0, 5, SHORT)
        b = resp.synth_wave_force(2.0, 8.0, 5, SHORT)
        assert np.array_equal(a, b)


class TestSimulateResponse:
    def test_parked_zero_wind_constant_moment(self, ref_tower, f1_ref):
        parked = EnvironmentalState(id=1, u=0.0, seed=1, sigma_w=0.0, hs=1.0,
                                    tp=8.0, m_ww=0.0, weight=1.0)
        rec = resp.simulate_response(parked, ref_tower, ROTOR, SHORT, steady=True,
                                     f1_floating_hz=f1_ref)
        assert np.ptp(rec.fore_aft_moment[0]) == 0.0

    def test_steady_mean_thrust_matches_law(self, ref_tower, f1_ref):
        u = 9.0
        rec = resp.simulate_response(state(u=u, sigma=0.0), ref_tower, ROTOR, SHORT,
                                     steady=True, f1_floating_hz=f1_ref)
        expected = 0.5 * resp.AIR_DENSITY * 0.8 * ROTOR.rotor_area * u**2
        assert rec.mean_thrust == pytest.approx(expected, rel=1e-12)

    def test_determinism(self, ref_tower, f1_ref):
        a = resp.simulate_response(state(), ref_tower, ROTOR, SHORT,
                                   f1_floating_hz=f1_ref)
        b = resp.simulate_response(state(), ref_tower, ROTOR, SHORT,
                                   f1_floating_hz=f1_ref)
        assert np.array_equal(a.fore_aft_moment, b.fore_aft_moment)
        assert np.array_equal(a.rotor_speed, b.rotor_speed)

    def test_mean_moment_monotone_below_rated(self, ref_tower, f1_ref):
        means = []
        for u in (5.0, 7.0, 9.0, 10.5):
            rec = resp.simulate_response(state(u=u, sigma=0.0, seed=2), ref_tower,
                                         ROTOR, SHORT, f1_floating_hz=f1_ref)
            keep = rec.time >= SHORT.trim
            means.append(rec.fore_aft_moment[0, keep].mean())
        assert np.all(np.diff(means) > 0)

    def test_station_moments_lever_reduction(self, ref_tower, f1_ref):
        # every station row is the base row scaled by (H - z) / H, so moment
        # magnitudes are nonincreasing with height at every time step
        rec = resp.simulate_response(state(u=10.0, seed=3), ref_tower, ROTOR, SHORT,
                                     f1_floating_hz=f1_ref)
        height = ref_tower.total_height
        lever = (height - rec.station_heights) / height
        assert np.allclose(rec.fore_aft_moment,
                           np.outer(lever, rec.fore_aft_moment[0]), rtol=1e-12)
        keep = rec.time >= SHORT.trim
        m = np.abs(rec.fore_aft_moment[:, keep])
        assert np.all(np.diff(m, axis=0) <= 1e-9)

    def test_variance_grows_with_sigma(self, ref_tower, f1_ref):
        variances = []
        for sigma in (1.0, 2.0, 4.0):
            rec = resp.simulate_response(state(u=9.0, sigma=sigma, seed=4),
                                         ref_tower, ROTOR, SHORT,
                                         f1_floating_hz=f1_ref)
            keep = rec.time >= SHORT.trim
            variances.append(rec.fore_aft_moment[0, keep].var())
        assert variances[0] < variances[1] < variances[2]

    def test_rotor_speed_schedule(self, ref_tower, f1_ref):
        rec = resp.simulate_response(state(u=ROTOR.cut_in, sigma=0.0), ref_tower,
                                     ROTOR, SHORT, steady=True, f1_floating_hz=f1_ref)
        assert rec.rotor_speed[0] == pytest.approx(ROTOR.min_rpm)
        rec = resp.simulate_response(state(u=20.0, sigma=0.0), ref_tower, ROTOR,
                                     SHORT, steady=True, f1_floating_hz=f1_ref)
        assert rec.rotor_speed[0] == pytest.approx(ROTOR.max_rpm)

    def test_out_of_range_rejected(self, ref_tower, f1_ref):
        with pytest.raises(RejectedStateError):
            resp.simulate_response(state(u=30.0), ref_tower, ROTOR, SHORT,
                                   f1_floating_hz=f1_ref)

    def test_frequency_computed_when_not_pinned(self, ref_tower, f1_ref):
        rec_pinned = resp.simulate_response(state(seed=6), ref_tower, ROTOR, SHORT,
                                            material=MATERIAL,
                                            f1_floating_hz=f1_ref)
        rec_auto = resp.simulate_response(state(seed=6), ref_tower, ROTOR, SHORT,
                                          material=MATERIAL)
        assert np.allclose(rec_pinned.fore_aft_moment, rec_auto.fore_aft_moment)


class TestResponseCsv:
    def test_roundtrip(self, ref_tower, f1_ref, tmp_path):
        rec = resp.simulate_response(state(seed=8), ref_tower, ROTOR, SHORT,
                                     f1_floating_hz=f1_ref)
        path = tmp_path / "resp.csv"
        resp.write_response_csv(rec, path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("time_s,rotor_rpm,pitch_rad,heave_m,m_fa_0.000")
        t, stations, moments = resp.read_response_csv(path)
        assert np.allclose(t, rec.time)
        assert np.allclose(stations, rec.station_heights, atol=5e-4)
        assert np.allclose(moments, rec.fore_aft_moment)

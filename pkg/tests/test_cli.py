import json

import pytest
from click.testing import CliRunner

from towerfatigue import fatigue as fat
from towerfatigue.cli import main
from towerfatigue.config import desk_config, save_config
from towerfatigue.response import SimulationConfig
from towerfatigue.sampling import SamplingPlan


@pytest.fixture()
def tiny_config_path(tmp_path):
    cfg = desk_config(
        plan=SamplingPlan(n_u=2, n_hs=2, n_tp=1, n_seeds=1, v_in=3.0, v_out=25.0,
                          turbulent=True, iec_class="A"),
        simulation=SimulationConfig(duration=100.0, dt=0.1, trim=50.0, seed=4,
                                    n_stations=16),
        psd_segment_length=128,
    )
    path = tmp_path / "config.json"
    save_config(cfg, path)
    return str(path)


def run_cli(args, tmp_path, config_path):
    runner = CliRunner()
    result = runner.invoke(main, ["--config", config_path, "--out",
                                  str(tmp_path / "out"), *args])
    assert result.exit_code == 0, result.output
    return result


class TestCommands:
    def test_sample(self, tmp_path, tiny_config_path):
        result = run_cli(["sample"], tmp_path, tiny_config_path)
        assert "4 states" in result.output
        assert (tmp_path / "out" / "states.csv").exists()
        assert (tmp_path / "out" / "sampling.png").exists()

    def test_simulate_writes_responses(self, tmp_path, tiny_config_path):
        run_cli(["simulate", "--limit", "2"], tmp_path, tiny_config_path)
        files = sorted((tmp_path / "out" / "responses").glob("response_*.csv"))
        assert len(files) == 2
        header = files[0].read_text().splitlines()[0]
        assert header.startswith("time_s,rotor_rpm,pitch_rad,heave_m,m_fa_")

    def test_fatigue(self, tmp_path, tiny_config_path):
        result = run_cli(["fatigue"], tmp_path, tiny_config_path)
        assert "max damage" in result.output
        profile = fat.read_damage_csv(tmp_path / "out" / "damage.csv")
        assert len(profile.damage) == 30
        assert (tmp_path / "out" / "damage.png").exists()

    def test_psd(self, tmp_path, tiny_config_path):
        run_cli(["psd"], tmp_path, tiny_config_path)
        assert (tmp_path / "out" / "psd_heatmap.csv").exists()
        assert (tmp_path / "out" / "psd_heatmap.json").exists()
        assert (tmp_path / "out" / "psd_heatmap.png").exists()

    def test_calibrate_platform(self, tmp_path, tiny_config_path):
        run_cli(["calibrate-platform"], tmp_path, tiny_config_path)
        doc = json.loads((tmp_path / "out" / "platform_calibration.json").read_text())
        assert len(doc) == 2
        for entry in doc.values():
            assert entry["target_columns"] in ("upwind", "port_and_starboard", "none")

    def test_validate(self, tmp_path, tiny_config_path):
        out = tmp_path / "out"
        out.mkdir()
        hifi = fat.SectionDamageProfile([0.0, 1.0], [0.9, 0.8])
        estd = fat.SectionDamageProfile([0.0, 1.0], [0.88, 0.82])
        fat.write_damage_csv(hifi, out / "hifi.csv")
        fat.write_damage_csv(estd, out / "est.csv")
        result = run_cli(["validate", "--hifi", str(out / "hifi.csv"), "--est",
                          str(out / "est.csv")], tmp_path, tiny_config_path)
        assert "criterion 1" in result.output and "pass" in result.output
        doc = json.loads((out / "validation.json").read_text())
        assert doc["accepted"] is True

    def test_print_config(self, tmp_path, tiny_config_path):
        run_cli(["print-config"], tmp_path, tiny_config_path)
        doc = json.loads((tmp_path / "out" / "config.json").read_text())
        assert doc["sampling"]["n_wind_bins"] == 2

    def test_help_lists_subcommands(self):
        runner = CliRunner()
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for sub in ("sample", "simulate", "psd", "fatigue", "calibrate-platform",
                    "optimize", "validate", "pipeline"):
            assert sub in result.output

import math

import pytest

from noonring import calibrate, cli, config as configmod


FAST_CFG = "run.integration_time_s = 1.0\n"


@pytest.fixture
def fast_cfg_path(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST_CFG)
    return str(path)


def csv_body(path):
    """CSV content with '#' lines stripped (headers carry timestamps)."""
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


class TestConfig:
    def test_defaults_round_trip(self):
        cfg = configmod.default_config()
        text = configmod.serialize_config(cfg)
        assert configmod.parse_config_text(text) == cfg

    def test_digest_stable_and_sensitive(self):
        cfg = configmod.default_config()
        assert configmod.config_digest(cfg) == configmod.config_digest(cfg)
        other = configmod.parse_config_text("ring.loaded_q = 20000")
        assert configmod.config_digest(other) != configmod.config_digest(cfg)

    def test_override_layering(self):
        cfg = configmod.parse_config_text(
            "pumps.power1_w = 1e-3\n# comment\n\nring.fsr_nm = 4.0\n")
        assert cfg.pumps.power1 == 1e-3
        assert cfg.ring.fsr == 4.0
        default = configmod.default_config()
        assert cfg.pumps.power2 == default.pumps.power2

    def test_unknown_key_names_line(self):
        with pytest.raises(configmod.ConfigError, match="line 2.*ring.q_factor"):
            configmod.parse_config_text("ring.fsr_nm = 5\nring.q_factor = 1\n")

    def test_bad_value_reported(self):
        with pytest.raises(configmod.ConfigError, match="ring.fsr_nm"):
            configmod.parse_config_text("ring.fsr_nm = five\n")

    def test_invalid_physics_rejected(self):
        with pytest.raises(configmod.ConfigError):
            configmod.parse_config_text("ring.loaded_q = -1\n")

    def test_missing_file(self):
        with pytest.raises(configmod.ConfigError):
            configmod.load_config("/nonexistent/path.cfg")

    def test_shipped_config_matches_defaults(self):
        cfg = configmod.load_config("configs/defaults.cfg")
        assert cfg == configmod.default_config()


class TestCalibration:
    def test_default_targets_hit(self):
        cfg = configmod.default_config()
        rates, trace = calibrate.calibrate_rates(cfg)
        assert len(trace) >= 1
        import noonring.pairgen as pairgen
        car = pairgen.car_estimate(rates, cfg.pumps, cfg.ring,
                                   cfg.coincidence_window, cfg.detectors)
        assert 64.0 <= car <= 96.0

    def test_doubled_raman_prior_still_in_band(self):
        from dataclasses import replace
        cfg = configmod.default_config()
        cfg = replace(cfg, rates=replace(cfg.rates,
                                         raman_rate=2 * cfg.rates.raman_rate))
        rates, _ = calibrate.calibrate_rates(cfg)
        import noonring.pairgen as pairgen
        car = pairgen.car_estimate(rates, cfg.pumps, cfg.ring,
                                   cfg.coincidence_window, cfg.detectors)
        assert 64.0 <= car <= 96.0

    def test_unreachable_target(self):
        from dataclasses import replace
        cfg = configmod.default_config()
        dead = replace(cfg.detectors[0], efficiency=0.0)
        cfg = replace(cfg, detectors=(dead, cfg.detectors[1]))
        with pytest.raises(calibrate.CalibrationError):
            calibrate.calibrate_rates(cfg)


class TestCliPhaseSweep:
    def test_writes_rows_and_figures(self, fast_cfg_path, tmp_path):
        out = tmp_path / "run"
        status = cli.main(["phase-sweep", "--config", fast_cfg_path,
                           "--out", str(out), "--points", "9"])
        assert status == 0
        body = csv_body(out / "phase_sweep.csv")
        assert len(body) == 1 + 9
        assert (out / "phase_sweep.png").exists()

    def test_insufficient_points(self, fast_cfg_path, tmp_path):
        status = cli.main(["phase-sweep", "--config", fast_cfg_path,
                           "--out", str(tmp_path), "--points", "3"])
        assert status == 2

    def test_missing_config(self, tmp_path):
        status = cli.main(["phase-sweep", "--config", "no_such.cfg",
                           "--out", str(tmp_path)])
        assert status == 2

    def test_reproducible_bodies(self, fast_cfg_path, tmp_path):
        args = ["phase-sweep", "--config", fast_cfg_path, "--points", "7"]
        assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
        assert csv_body(tmp_path / "a" / "phase_sweep.csv") == \
            csv_body(tmp_path / "b" / "phase_sweep.csv")

    def test_seed_changes_output(self, fast_cfg_path, tmp_path):
        args = ["phase-sweep", "--config", fast_cfg_path, "--points", "7"]
        cli.main(args + ["--out", str(tmp_path / "a"), "--seed", "1"])
        cli.main(args + ["--out", str(tmp_path / "b"), "--seed", "2"])
        assert csv_body(tmp_path / "a" / "phase_sweep.csv") != \
            csv_body(tmp_path / "b" / "phase_sweep.csv")

    def test_env_seed_precedence(self, fast_cfg_path, tmp_path, monkeypatch):
        args = ["phase-sweep", "--config", fast_cfg_path, "--points", "5"]
        monkeypatch.setenv("NOONRING_SEED", "99")
        cli.main(args + ["--out", str(tmp_path / "env")])
        header = (tmp_path / "env" / "phase_sweep.csv").read_text()
        assert "# seed = 99" in header
        cli.main(args + ["--out", str(tmp_path / "flag"), "--seed", "7"])
        header = (tmp_path / "flag" / "phase_sweep.csv").read_text()
        assert "# seed = 7" in header

    def test_bad_env_seed(self, fast_cfg_path, tmp_path, monkeypatch):
        monkeypatch.setenv("NOONRING_SEED", "not-a-number")
        status = cli.main(["phase-sweep", "--config", fast_cfg_path,
                           "--out", str(tmp_path), "--points", "5"])
        assert status == 2

    def test_manifest_has_digest(self, fast_cfg_path, tmp_path):
        out = tmp_path / "run"
        cli.main(["phase-sweep", "--config", fast_cfg_path,
                  "--out", str(out), "--points", "5"])
        text = (out / "phase_sweep.csv").read_text()
        cfg = configmod.load_config(fast_cfg_path)
        assert f"# config_digest = {configmod.config_digest(cfg)}" in text


class TestCliWavelengthMap:
    def test_grid_row_count(self, fast_cfg_path, tmp_path):
        out = tmp_path / "map"
        status = cli.main(["wavelength-map", "--config", fast_cfg_path,
                           "--out", str(out), "--span", "0.6", "--step", "0.02"])
        assert status == 0
        assert len(csv_body(out / "wavelength_map.csv")) == 1 + 31 * 31
        assert (out / "wavelength_map.png").exists()

    def test_bad_step(self, fast_cfg_path, tmp_path):
        assert cli.main(["wavelength-map", "--config", fast_cfg_path,
                         "--out", str(tmp_path), "--step", "0"]) == 2
        assert cli.main(["wavelength-map", "--config", fast_cfg_path,
                         "--out", str(tmp_path), "--span", "0.01",
                         "--step", "0.02"]) == 2


class TestCliControl:
    def test_reports_zero_visibility_flag(self, fast_cfg_path, tmp_path, capsys):
        out = tmp_path / "ctrl"
        status = cli.main(["control", "--config", fast_cfg_path,
                           "--out", str(out), "--points", "9"])
        assert status == 0
        captured = capsys.readouterr().out
        assert "incoherent_visibility_consistent_with_zero=" in captured
        assert (out / "control_sweep.csv").exists()


class TestCliCalibrate:
    def test_writes_derived_config(self, tmp_path):
        out = tmp_path / "cal"
        status = cli.main(["calibrate", "--out", str(out)])
        assert status == 0
        derived = configmod.load_config(out / "calibrated.cfg")
        import noonring.pairgen as pairgen
        car = pairgen.car_estimate(derived.rates, derived.pumps, derived.ring,
                                   derived.coincidence_window, derived.detectors)
        assert car == pytest.approx(80.0, rel=1e-3)

    def test_unreachable_gives_exit_4(self, tmp_path):
        cfg_path = tmp_path / "dead.cfg"
        cfg_path.write_text("detector_a.efficiency = 0.0\n")
        status = cli.main(["calibrate", "--config", str(cfg_path),
                           "--out", str(tmp_path)])
        assert status == 4

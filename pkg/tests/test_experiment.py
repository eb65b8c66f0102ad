import math
from dataclasses import replace

import numpy as np
import pytest

from noonring import config as configmod, detector, experiment, resonator


@pytest.fixture
def default_cfg():
    return configmod.default_config()


@pytest.fixture
def ideal_cfg(default_cfg):
    """Lossless MZI, perfect noiseless detectors, no dead time."""
    clean = detector.DetectorSpec(efficiency=1.0, dark_rate=0.0,
                                  dead_time=0.0, jitter_sigma=50e-12)
    rates = replace(default_cfg.rates, gamma_self=0.0, raman_rate=0.0)
    return replace(default_cfg, rates=rates, detectors=(clean, clean),
                   arm_transmission=1.0, path_loss_ratio=1.0,
                   integration_time=2.0)


def fast_config(default_cfg, seconds=1.0):
    return replace(default_cfg, integration_time=seconds)


class TestHeaterPhase:
    def test_linear(self):
        assert experiment.heater_to_phase(0.0, 0.1) == 0.0
        assert experiment.heater_to_phase(12.5, 0.2) == pytest.approx(2.5)

    def test_rejects_negative_power(self):
        with pytest.raises(ValueError):
            experiment.heater_to_phase(-1.0, 0.1)


class TestClassicalPowers:
    def test_extremes(self, default_cfg):
        cfg = replace(default_cfg, path_loss_ratio=1.0, arm_transmission=1.0)
        p1, p2 = experiment.classical_port_powers(0.0, cfg)
        assert p1 == pytest.approx(0.0, abs=1e-12)
        assert p2 == pytest.approx(1.0, abs=1e-12)
        p1, p2 = experiment.classical_port_powers(math.pi, cfg)
        assert p1 == pytest.approx(1.0, abs=1e-12)
        assert p2 == pytest.approx(0.0, abs=1e-12)

    def test_period_two_pi(self, default_cfg):
        for theta in (0.3, 1.7, 4.0):
            a = experiment.classical_port_powers(theta, default_cfg)
            b = experiment.classical_port_powers(theta + 2 * math.pi, default_cfg)
            assert a[0] == pytest.approx(b[0], abs=1e-12)
            assert a[1] == pytest.approx(b[1], abs=1e-12)

    def test_coupler_imbalance_contrast(self, default_cfg):
        cfg = replace(default_cfg, mzi_reflectivity=0.4, path_loss_ratio=1.0,
                      arm_transmission=1.0)
        theta = np.linspace(0.0, 2 * math.pi, 721)
        p1, _ = experiment.classical_port_powers(theta, cfg)
        contrast = (p1.max() - p1.min()) / (p1.max() + p1.min())
        assert contrast == pytest.approx(2 * math.sqrt(0.24), abs=1e-3)

    def test_energy_balance(self, default_cfg):
        lossless = replace(default_cfg, path_loss_ratio=1.0,
                           arm_transmission=1.0)
        for theta in np.linspace(0.0, 2 * math.pi, 17):
            p1, p2 = experiment.classical_port_powers(theta, lossless)
            assert p1 + p2 == pytest.approx(1.0, abs=1e-12)
            q1, q2 = experiment.classical_port_powers(theta, default_cfg)
            assert q1 + q2 <= 1.0 + 1e-12


class TestOutcomeProbs:
    def test_lossless_is_cos_squared(self):
        for theta in np.linspace(0.0, 2 * math.pi, 13):
            probs = experiment.mzi_outcome_probs(theta, 0.5, 1.0)
            assert probs["p11"] == pytest.approx(math.cos(theta) ** 2, abs=1e-12)
            total = sum(probs.values())
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_lossy_probabilities_complete(self):
        for theta in (0.0, 0.9, 2.2):
            probs = experiment.mzi_outcome_probs(theta, 0.5, 0.744)
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(0.0 <= p <= 1.0 for p in probs.values())

    def test_bunching_at_half_pi(self):
        probs = experiment.mzi_outcome_probs(math.pi / 2, 0.5, 1.0)
        assert probs["p20"] == pytest.approx(0.5, abs=1e-12)
        assert probs["p02"] == pytest.approx(0.5, abs=1e-12)


class TestExpectedRates:
    def test_capture_fraction(self, default_cfg):
        # two 50 ps jitters -> 70.7 ps pair spread, erf(112/70.7/sqrt(2))
        assert experiment.pair_capture_fraction(default_cfg) == pytest.approx(
            0.88679, abs=1e-4)

    def test_singles_consistency(self, default_cfg):
        point = experiment.expected_rates(default_cfg, 0.7)
        assert point["singles_a"] == pytest.approx(
            point["attempt_a"] * point["survival_a"], rel=1e-12)
        assert point["singles_b"] == pytest.approx(
            point["attempt_b"] * point["survival_b"], rel=1e-12)
        assert 0.0 < point["survival_a"] < 1.0

    def test_wavelength_override_kills_offgrid(self, default_cfg):
        on = experiment.expected_rates(default_cfg, math.pi)
        off = experiment.expected_rates(default_cfg, math.pi,
                                        lambda1=default_cfg.pumps.lambda1 + 1.0)
        assert off["coincidence_rate"] < 1e-3 * on["coincidence_rate"]


class TestPhaseSweep:
    def test_noiseless_counts_track_cos_squared(self, ideal_cfg):
        phases = np.array([0.0, math.pi / 4, math.pi / 3, 1.2, 2.0, 3.0, 5.5])
        result = experiment.run_phase_sweep(ideal_cfg, phases)
        for theta, counts in zip(phases, result.peak_counts):
            mu = (experiment.expected_rates(ideal_cfg, theta)["coincidence_rate"]
                  * ideal_cfg.integration_time)
            assert abs(counts - mu) < 5 * math.sqrt(max(mu, 1.0))

    def test_seed_determinism(self, default_cfg):
        cfg = fast_config(default_cfg)
        phases = np.linspace(0.0, 2 * math.pi, 7)
        r1 = experiment.run_phase_sweep(cfg, phases)
        r2 = experiment.run_phase_sweep(cfg, phases)
        assert np.array_equal(r1.peak_counts, r2.peak_counts)
        assert np.array_equal(r1.accidental_mean, r2.accidental_mean)
        r3 = experiment.run_phase_sweep(replace(cfg, base_seed=1), phases)
        assert not np.array_equal(r1.peak_counts, r3.peak_counts)

    def test_phase_covariance_of_fit(self, ideal_cfg):
        delta = 0.37
        phases = np.linspace(0.0, 2 * math.pi, 41)
        mu = np.array([experiment.expected_rates(ideal_cfg, t)["coincidence_rate"]
                       for t in phases])
        shifted = np.array(
            [experiment.expected_rates(ideal_cfg, t + delta)["coincidence_rate"]
             for t in phases])
        fit_a = detector.fit_fringe(phases, mu, math.pi)
        fit_b = detector.fit_fringe(phases, shifted, math.pi)
        k = 2.0 * math.pi / fit_a.period
        wrap = (fit_b.phase - fit_a.phase - k * delta) % (2.0 * math.pi)
        assert min(wrap, 2.0 * math.pi - wrap) < 1e-6
        assert fit_b.visibility == pytest.approx(fit_a.visibility, abs=1e-9)

    def test_visibility_degrades_off_balanced_coupler(self, ideal_cfg):
        phases = np.linspace(0.0, 2 * math.pi, 41)
        vis = []
        for refl in (0.5, 0.45, 0.4, 0.3):
            cfg = replace(ideal_cfg, mzi_reflectivity=refl)
            mu = np.array(
                [experiment.expected_rates(cfg, t)["coincidence_rate"]
                 for t in phases])
            vis.append(detector.fit_fringe(phases, mu, math.pi).visibility)
        assert all(a >= b - 1e-9 for a, b in zip(vis, vis[1:]))

    def test_requires_two_phases(self, default_cfg):
        with pytest.raises(ValueError):
            experiment.run_phase_sweep(default_cfg, [0.0])


class TestControl:
    def test_shifted_config_moves_pump2_inward(self, default_cfg):
        control = experiment.shifted_control_config(default_cfg)
        grid = resonator.resonance_grid(default_cfg.ring)
        assert control.pumps.lambda2 == pytest.approx(grid.wavelength(3))
        assert control.pumps.lambda1 == default_cfg.pumps.lambda1

    def test_central_pump_rejected(self, default_cfg):
        grid = resonator.resonance_grid(default_cfg.ring)
        cfg = replace(default_cfg,
                      pumps=replace(default_cfg.pumps,
                                    lambda2=grid.wavelength(0)))
        with pytest.raises(ValueError):
            experiment.shifted_control_config(cfg)

    def test_zero_noise_control_is_near_silent(self, ideal_cfg):
        # the Lorentzian tail leaves a tiny residual pair rate, so counts
        # sit at its Poisson level rather than exactly zero
        phases = np.linspace(0.0, 2 * math.pi, 9)
        result = experiment.run_incoherent_control(ideal_cfg, phases)
        control = experiment.shifted_control_config(ideal_cfg)
        mu = (experiment.expected_rates(control, 0.0)["coincidence_rate"]
              * ideal_cfg.integration_time)
        assert result.peak_counts.max() <= mu + 5 * math.sqrt(mu + 1.0)
        assert result.summary["incoherent_visibility_consistent_with_zero"]


class TestWavelengthMap:
    def test_ridge_peaks_at_symmetric_pumps(self, default_cfg):
        offsets = np.linspace(-0.2, 0.2, 21)
        g1 = default_cfg.pumps.lambda1 + offsets
        g2 = default_cfg.pumps.lambda2 + offsets
        result = experiment.run_wavelength_map(default_cfg, g1, g2)
        counts = result.peak_counts.reshape(21, 21)
        i, j = np.unravel_index(counts.argmax(), counts.shape)
        assert abs(offsets[i]) < 0.05 and abs(offsets[j]) < 0.05
        # off-ridge corner sits at the accidental floor
        floor = result.accidental_mean.reshape(21, 21)[0, -1]
        assert counts[0, -1] < floor + 5 * math.sqrt(floor + 1.0)

    def test_mode_pair_configs(self, default_cfg):
        for m in (2, 6):
            cfg = experiment.pumps_for_mode_pair(default_cfg, m)
            sep = cfg.pumps.lambda2 - cfg.pumps.lambda1
            assert sep == pytest.approx(10.0 * m, abs=0.2)
        with pytest.raises(ValueError):
            experiment.pumps_for_mode_pair(default_cfg, 0)

    def test_empty_grid_rejected(self, default_cfg):
        with pytest.raises(ValueError):
            experiment.run_wavelength_map(default_cfg, [], [1551.0])


class TestCsvExport:
    def test_phase_sweep_csv(self, ideal_cfg, tmp_path):
        phases = np.linspace(0.0, 2 * math.pi, 7)
        result = experiment.run_phase_sweep(ideal_cfg, phases)
        path = tmp_path / "sweep.csv"
        experiment.sweep_to_csv(result, path, header_lines=["digest = abc"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# digest = abc"
        assert lines[1].split(",") == [
            "theta_rad", "classical_p1", "classical_p2",
            "peak_counts", "accidental_mean", "accidental_std"]
        data = [l for l in lines if not l.startswith("#")]
        assert len(data) == 1 + 7
        footer = [l for l in lines if l.startswith("#")]
        assert any("v_raw" in l for l in footer)

    def test_wavelength_map_csv(self, default_cfg, tmp_path):
        g = default_cfg.pumps.lambda1 + np.linspace(-0.05, 0.05, 3)
        g2 = default_cfg.pumps.lambda2 + np.linspace(-0.05, 0.05, 3)
        result = experiment.run_wavelength_map(default_cfg, g, g2)
        path = tmp_path / "map.csv"
        experiment.sweep_to_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0].split(",") == ["lambda1_nm", "lambda2_nm", "peak_counts"]
        assert len([l for l in lines if not l.startswith("#")]) == 1 + 9

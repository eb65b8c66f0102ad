"""Composition layer: source + interferometer + rates + detectors.

Three runs are supported: the phase sweep (classical fringes and
coincidence fringes at twice their frequency), the incoherent-pump
control (pump 2 moved one resonance toward center, killing the
degenerate channel), and the two-dimensional pump-wavelength map.

Pair events are not propagated photon by photon; the pair rate is
thinned into (1,1)/(2,0)/(0,2)/single-survivor outcome streams using
the Fock-state probabilities, which is statistically exact for
Poissonian generation.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

from . import detector, fock, pairgen, resonator


@dataclass
class CircuitConfig:
    """Full experiment configuration (paper-anchored defaults live in
    noonring.config.default_config)."""

    ring: resonator.RingSpec
    pumps: pairgen.PumpConfig
    rates: pairgen.RateModel
    detectors: tuple                      # (DetectorSpec port 1, DetectorSpec port 2)
    mzi_reflectivity: float = 0.5         # output coupler cross ratio
    arm_transmission: float = 1.0         # heated-arm power transmission
    static_phase: float = 0.0             # rad, fixed offset between arms
    phase_per_heater_mw: float = 0.1      # rad/mW, linear heater calibration
    phase_walk_sigma: float = 0.0         # rad/point, probe-drift random walk
    path_loss_ratio: float = 1.0 / 1.67   # port-1 transmission relative to port 2
    integration_time: float = 90.0        # s per sweep point
    base_seed: int = 20160831
    coincidence_window: float = 224e-12
    bin_width: float = 32e-12
    delay_range: float = 400e-9
    accidental_offset: float = 10e-9
    accidental_span: float = 320e-9

    def __post_init__(self):
        if not 0.0 <= self.mzi_reflectivity <= 1.0:
            raise ValueError("mzi_reflectivity must lie in [0, 1]")
        if not 0.0 < self.path_loss_ratio <= 1.0:
            raise ValueError("path_loss_ratio must lie in (0, 1]")
        if not 0.0 < self.arm_transmission <= 1.0:
            raise ValueError("arm_transmission must lie in (0, 1]")
        if self.integration_time <= 0:
            raise ValueError("integration_time must be positive")


@dataclass
class SweepResult:
    """Per-point records plus fitted summary for one run."""

    kind: str                       # "phase" | "wavelength"
    phases: np.ndarray = None
    lambda1: np.ndarray = None
    lambda2: np.ndarray = None
    classical_p1: np.ndarray = None
    classical_p2: np.ndarray = None
    peak_counts: np.ndarray = None
    accidental_mean: np.ndarray = None
    accidental_std: np.ndarray = None
    visibility: detector.VisibilityResult = None
    classical_fit_p1: detector.FringeFit = None
    classical_fit_p2: detector.FringeFit = None
    car: float = None
    summary: dict = field(default_factory=dict)


def heater_to_phase(heater_power_mw, calibration):
    """Linear heater model: theta = calibration * power."""
    if heater_power_mw < 0:
        raise ValueError("heater power must be non-negative")
    return calibration * heater_power_mw


def mzi_outcome_probs(theta, reflectivity=0.5, arm_transmission=1.0):
    """Photon-number outcome probabilities for the ring pair after the MZI.

    The heated arm carries amplitude transmission sqrt(arm_transmission)
    and phase e^{-i theta}; the lost fraction goes to an environment
    mode, so single-survivor probabilities come out alongside p11/p20/p02.
    """
    t = math.sqrt(1.0 - reflectivity)
    r = math.sqrt(reflectivity)
    g = math.sqrt(arm_transmission)
    mu = math.sqrt(1.0 - arm_transmission)
    ph = g * np.exp(-1j * theta)
    vec_cw = np.array([ph * t, ph * 1j * r, mu])
    vec_ccw = np.array([1j * r, t, 0.0])
    amps = {}
    for vec in (vec_cw, vec_ccw):
        for i in range(3):
            for j in range(i, 3):
                occ = [0, 0, 0]
                occ[i] += 1
                occ[j] += 1
                coeff = 0.5 * vec[i] * vec[j] * (2.0 if i != j else 1.0)
                norm = math.sqrt(math.prod(math.factorial(n) for n in occ))
                key = tuple(occ)
                amps[key] = amps.get(key, 0.0) + coeff * norm
    probs = {}
    for (na, nb, ne), amp in amps.items():
        probs[(na, nb)] = probs.get((na, nb), 0.0) + abs(amp) ** 2
    return {
        "p11": probs.get((1, 1), 0.0),
        "p20": probs.get((2, 0), 0.0),
        "p02": probs.get((0, 2), 0.0),
        "p10": probs.get((1, 0), 0.0),
        "p01": probs.get((0, 1), 0.0),
        "p00": probs.get((0, 0), 0.0),
    }


def classical_port_powers(theta, config):
    """Normalized classical output powers of the two ports (period 2 pi).

    Fringe contrast is 2 sqrt(R(1-R)) for coupler cross ratio R, further
    reduced by the heated-arm transmission; port 1 is scaled by
    path_loss_ratio.
    """
    big_r = config.mzi_reflectivity
    big_t = 1.0 - big_r
    g = config.arm_transmission
    c = np.cos(theta + 2.0 * config.static_phase)
    p1 = 0.5 * (g * big_t + big_r - 2.0 * math.sqrt(g * big_t * big_r) * c)
    p2 = 0.5 * (g * big_r + big_t + 2.0 * math.sqrt(g * big_r * big_t) * c)
    return p1 * config.path_loss_ratio, p2


def _effective_detectors(config):
    """Fold the port-1 path loss into that detector's efficiency."""
    det_a, det_b = config.detectors
    det_a = replace(det_a, efficiency=det_a.efficiency * config.path_loss_ratio)
    return det_a, det_b


def pair_capture_fraction(config):
    """Fraction of true pair delays falling inside the peak window,
    from the Gaussian jitter of the two detectors."""
    det_a, det_b = config.detectors
    sigma = math.hypot(det_a.jitter_sigma, det_b.jitter_sigma)
    if sigma == 0:
        return 1.0
    return float(erf(config.coincidence_window / 2.0 / (sigma * math.sqrt(2.0))))


def expected_rates(config, theta, lambda1=None, lambda2=None):
    """Analytic detected rates for one operating point.

    Returns a dict with the optical pair rate, outcome probabilities,
    detection attempt rates, dead-time survivals, detected singles, the
    expected peak-window coincidence rate and the accidental rate per
    coincidence window.
    """
    pumps = config.pumps
    if lambda1 is not None or lambda2 is not None:
        pumps = replace(pumps,
                        lambda1=pumps.lambda1 if lambda1 is None else lambda1,
                        lambda2=pumps.lambda2 if lambda2 is None else lambda2)
    probs = mzi_outcome_probs(theta, config.mzi_reflectivity, config.arm_transmission)
    pair_rate = pairgen.signal_pair_rate(config.rates, pumps, config.ring)
    noise_a, noise_b = pairgen.noise_singles_rate(config.rates, pumps)
    det_a, det_b = _effective_detectors(config)
    inc_a = pair_rate * (probs["p11"] + 2 * probs["p20"] + probs["p10"]) + noise_a
    inc_b = pair_rate * (probs["p11"] + 2 * probs["p02"] + probs["p01"]) + noise_b
    q_a = det_a.efficiency * inc_a + det_a.dark_rate
    q_b = det_b.efficiency * inc_b + det_b.dark_rate
    f_a = 1.0 / (1.0 + q_a * det_a.dead_time)
    f_b = 1.0 / (1.0 + q_b * det_b.dead_time)
    s_a = q_a * f_a
    s_b = q_b * f_b
    capture = pair_capture_fraction(config)
    coinc = (pair_rate * probs["p11"] * det_a.efficiency * det_b.efficiency
             * f_a * f_b * capture)
    accidental = s_a * s_b * config.coincidence_window
    return {
        "pair_rate": pair_rate,
        "probs": probs,
        "singles_a": s_a,
        "singles_b": s_b,
        "attempt_a": q_a,
        "attempt_b": q_b,
        "survival_a": f_a,
        "survival_b": f_b,
        "capture": capture,
        "coincidence_rate": coinc,
        "accidental_rate": accidental,
    }


def _point_rng(config, *key):
    return np.random.default_rng(
        np.random.SeedSequence([config.base_seed & 0x7FFFFFFF, *key])
    )


def _simulate_point(config, theta, index, stream_tag=0):
    """Monte-Carlo tag streams and histogram analysis for one sweep point."""
    rng = _point_rng(config, stream_tag, index)
    duration = config.integration_time
    probs = mzi_outcome_probs(theta, config.mzi_reflectivity, config.arm_transmission)
    pair_rate = pairgen.signal_pair_rate(config.rates, config.pumps, config.ring)
    noise_a, noise_b = pairgen.noise_singles_rate(config.rates, config.pumps)
    det_a, det_b = _effective_detectors(config)
    expected = (2 * pair_rate
                + det_a.efficiency * noise_a + det_b.efficiency * noise_b
                + det_a.dark_rate + det_b.dark_rate) * duration
    if expected > detector.MAX_EXPECTED_EVENTS:
        raise ValueError("expected event count exceeds simulation guard")

    pair_times = detector.poisson_times(pair_rate, duration, rng, sort=False)
    u = rng.random(pair_times.size)
    edges = np.cumsum([probs[k] for k in ("p11", "p20", "p02", "p10", "p01")])
    kind = np.searchsorted(edges, u)  # 0..4 as ordered above, 5 = both lost
    to_a = np.concatenate([pair_times[kind == 0],
                           np.repeat(pair_times[kind == 1], 2),
                           pair_times[kind == 3]])
    to_b = np.concatenate([pair_times[kind == 0],
                           np.repeat(pair_times[kind == 2], 2),
                           pair_times[kind == 4]])
    # efficiency is applied here (pair photons per-photon, noise by exact
    # Poisson thinning) so the detector stage only adds darks, jitter and
    # dead time; the port-1 path loss is folded into det_a.efficiency
    surv_a = to_a[rng.random(to_a.size) < det_a.efficiency]
    surv_b = to_b[rng.random(to_b.size) < det_b.efficiency]
    inc_a = np.concatenate(
        [surv_a,
         detector.poisson_times(det_a.efficiency * noise_a, duration, rng, sort=False)])
    inc_b = np.concatenate(
        [surv_b,
         detector.poisson_times(det_b.efficiency * noise_b, duration, rng, sort=False)])
    unit_a = replace(det_a, efficiency=1.0)
    unit_b = replace(det_b, efficiency=1.0)
    stream_a = detector.detect_arrivals(inc_a, unit_a, duration, rng, channel="A")
    stream_b = detector.detect_arrivals(inc_b, unit_b, duration, rng, channel="B")
    hist = detector.histogram(stream_a, stream_b, config.bin_width,
                              config.delay_range)
    peak = detector.integrate_peak(hist, config.coincidence_window)
    acc_mean, acc_std = detector.estimate_accidentals(
        hist, config.accidental_offset, config.accidental_span,
        config.coincidence_window)
    return peak, acc_mean, acc_std


def _phase_offsets(config, n_points):
    """Optional probe-drift model: Gaussian random walk over the sweep."""
    if config.phase_walk_sigma <= 0:
        return np.zeros(n_points)
    rng = _point_rng(config, 0xD21F7)
    return np.cumsum(rng.normal(0.0, config.phase_walk_sigma, n_points))


def run_phase_sweep(config, phases, stream_tag=0):
    """Coincidence and classical fringes across a list of MZI phases."""
    phases = np.asarray(phases, dtype=float)
    if phases.size < 2:
        raise ValueError("need at least 2 phases")
    offsets = _phase_offsets(config, phases.size)
    peaks = np.zeros(phases.size)
    acc_m = np.zeros(phases.size)
    acc_s = np.zeros(phases.size)
    for i, theta in enumerate(phases):
        peaks[i], acc_m[i], acc_s[i] = _simulate_point(
            config, theta + offsets[i], i, stream_tag)
    p1, p2 = classical_port_powers(phases, config)
    result = SweepResult(
        kind="phase", phases=phases, classical_p1=p1, classical_p2=p2,
        peak_counts=peaks, accidental_mean=acc_m, accidental_std=acc_s)
    _attach_phase_fits(result, config)
    return result


def _attach_phase_fits(result, config):
    """Fit fringes and summarize; sweeps too short for a given fit simply
    omit that part instead of failing the whole run."""
    phases = result.phases
    acc = (float(result.accidental_mean.mean()), float(result.accidental_std.mean()))
    result.car = (float(result.peak_counts.max() / acc[0])
                  if acc[0] > 0 else math.inf)
    result.summary = {
        "car": result.car,
        "car_analytic": pairgen.car_estimate(
            config.rates, config.pumps, config.ring,
            config.coincidence_window, config.detectors),
    }
    try:
        result.visibility = detector.visibility_raw_and_corrected(
            phases, result.peak_counts, acc, period=math.pi)
    except ValueError:
        return
    vis = result.visibility
    result.summary.update({
        "v_raw": vis.raw.visibility,
        "v_raw_err": vis.raw.visibility_err,
        "v_corrected": vis.corrected.visibility,
        "v_corrected_err": vis.corrected.visibility_err,
    })
    try:
        result.classical_fit_p1 = detector.fit_fringe(
            phases, result.classical_p1, 2.0 * math.pi)
        result.classical_fit_p2 = detector.fit_fringe(
            phases, result.classical_p2, 2.0 * math.pi)
    except ValueError:
        return
    coinc_period, coinc_ratio = best_period(phases, result.peak_counts,
                                            (math.pi, 2.0 * math.pi))
    cls_period, cls_ratio = best_period(phases, result.classical_p1,
                                        (math.pi, 2.0 * math.pi))
    result.summary.update({
        "coincidence_period_rad": coinc_period,
        "coincidence_period_residual_ratio": coinc_ratio,
        "classical_period_rad": cls_period,
        "classical_period_residual_ratio": cls_ratio,
    })


def best_period(phases, counts, candidates):
    """Pick the fringe period with the smallest fit residual.

    Returns (best_period, ratio of the worst to the best residual sum of
    squares); a ratio >> 1 means the period is unambiguous.
    """
    rss = []
    for period in candidates:
        fit = detector.fit_fringe(phases, counts, period)
        rss.append(max(fit.residual_rms**2 * len(phases), 0.0))
    order = int(np.argmin(rss))
    best = candidates[order]
    worst = max(rss)
    ratio = worst / max(min(rss), 1e-300)
    return best, float(ratio)


def shifted_control_config(config):
    """Pump 2 moved one resonance toward center: energy conservation then
    misses the comb and degenerate pair generation collapses."""
    grid = resonator.resonance_grid(config.ring)
    lam2 = config.pumps.lambda2
    m2 = int(np.abs(grid.wavelengths - lam2).argmin()) - grid.mode_span
    if m2 == 0:
        raise ValueError("pump 2 already sits on the central resonance")
    m_new = m2 - int(np.sign(m2))
    pumps = replace(config.pumps, lambda2=grid.wavelength(m_new))
    return replace(config, pumps=pumps)


def run_incoherent_control(config, phases, stream_tag=1):
    """Phase sweep with asymmetrically tuned pumps (incoherent control)."""
    control = shifted_control_config(config)
    result = run_phase_sweep(control, phases, stream_tag=stream_tag)
    if result.visibility is None:
        raise ValueError("control sweep too short to fit a fringe")
    vis = result.visibility.raw
    result.summary["incoherent_visibility_consistent_with_zero"] = bool(
        vis.degenerate or vis.visibility < 3.0 * vis.visibility_err)
    return result


def pumps_for_mode_pair(config, m):
    """Config copy with the pumps on the symmetric resonance pair (-m, +m)."""
    if m == 0:
        raise ValueError("mode offset must be nonzero")
    grid = resonator.resonance_grid(config.ring)
    pumps = replace(config.pumps, lambda1=grid.wavelength(-abs(m)),
                    lambda2=grid.wavelength(abs(m)))
    return replace(config, pumps=pumps)


def run_wavelength_map(config, grid1, grid2, fixed_theta=math.pi):
    """Peak coincidences over a 2D pump-wavelength grid at fixed phase.

    Expected peak-window counts are computed analytically per grid point
    and Poisson-sampled; a full tag-level simulation at every grid point
    would add nothing statistically to a single window-integrated count.
    """
    grid1 = np.asarray(grid1, dtype=float)
    grid2 = np.asarray(grid2, dtype=float)
    if grid1.size == 0 or grid2.size == 0:
        raise ValueError("wavelength grids must be non-empty")
    duration = config.integration_time
    l1 = np.repeat(grid1, grid2.size)
    l2 = np.tile(grid2, grid1.size)
    mu_peak = np.zeros(l1.size)
    mu_acc = np.zeros(l1.size)
    for i in range(l1.size):
        rates = expected_rates(config, fixed_theta, l1[i], l2[i])
        mu_acc[i] = rates["accidental_rate"] * duration
        mu_peak[i] = rates["coincidence_rate"] * duration + mu_acc[i]
    rng = _point_rng(config, 2, 0)
    counts = rng.poisson(mu_peak).astype(float)
    result = SweepResult(
        kind="wavelength", lambda1=l1, lambda2=l2, peak_counts=counts,
        accidental_mean=mu_acc, accidental_std=np.sqrt(mu_acc))
    fwhm = ridge_fwhm(grid1, grid2, counts.reshape(grid1.size, grid2.size),
                      mu_acc.reshape(grid1.size, grid2.size))
    result.summary = {"ridge_fwhm_nm": fwhm,
                      "fixed_theta_rad": fixed_theta,
                      "max_counts": float(counts.max())}
    return result


def ridge_fwhm(grid1, grid2, counts, accidentals=None):
    """FWHM (nm) of the pump-1 cut through the map maximum.

    Mirrors the measurement procedure: scan one pump across the
    energy-conservation ridge with the other pump fixed.  Half-maximum
    crossings are linearly interpolated; accidentals are subtracted
    when supplied.
    """
    net = counts.astype(float)
    if accidentals is not None:
        net = np.maximum(net - accidentals, 0.0)
    imax, jmax = np.unravel_index(int(net.argmax()), net.shape)
    cut = net[:, jmax]
    peak = cut[imax]
    if peak <= 0:
        return math.nan
    half = 0.5 * peak
    lo = hi = math.nan
    for i in range(imax, 0, -1):
        if cut[i - 1] < half <= cut[i]:
            frac = (half - cut[i - 1]) / (cut[i] - cut[i - 1])
            lo = grid1[i - 1] + frac * (grid1[i] - grid1[i - 1])
            break
    for i in range(imax, len(cut) - 1):
        if cut[i + 1] < half <= cut[i]:
            frac = (cut[i] - half) / (cut[i] - cut[i + 1])
            hi = grid1[i] + frac * (grid1[i + 1] - grid1[i])
            break
    return float(hi - lo)


def sweep_to_csv(result, path, header_lines=()):
    """Write a SweepResult as CSV with a '#' header and summary footer."""
    if result.kind == "phase":
        columns = ["theta_rad", "classical_p1", "classical_p2",
                   "peak_counts", "accidental_mean", "accidental_std"]
        data = [result.phases, result.classical_p1, result.classical_p2,
                result.peak_counts, result.accidental_mean, result.accidental_std]
    elif result.kind == "wavelength":
        columns = ["lambda1_nm", "lambda2_nm", "peak_counts"]
        data = [result.lambda1, result.lambda2, result.peak_counts]
    else:
        raise ValueError(f"unknown sweep kind {result.kind!r}")
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in zip(*data):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
        for key, value in result.summary.items():
            fh.write(f"# {key} = {value}\n")

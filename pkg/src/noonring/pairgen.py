"""Photon-pair production rates, noise budget and CAR optimization.

The degenerate bi-photon signal needs one photon from each pump, so its
rate is bilinear in the two pump powers.  Each pump alone also drives
four-wave mixing whose comb drops one photon per pair into the
bi-photon filter window; that noise is quadratic per pump.  A flat
Raman background is added per output channel.
"""

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from . import resonator


@dataclass
class PumpConfig:
    """Pump wavelengths (nm) and at-chip powers (W)."""

    lambda1: float
    lambda2: float
    power1: float
    power2: float

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("pump wavelengths must be positive")
        if self.power1 < 0 or self.power2 < 0:
            raise ValueError("pump powers must be non-negative")


@dataclass
class RateModel:
    """Calibrated rate coefficients.

    gamma_pair : Hz/W^2, degenerate-pair rate coefficient
    gamma_self : Hz/W^2, single-pump noise photons in the filter window, per pump
    raman_rate : Hz, flat background per output channel
    extraction_efficiency : pair survival through the ring ports
    """

    gamma_pair: float
    gamma_self: float
    raman_rate: float = 0.0
    extraction_efficiency: float = 0.5

    def __post_init__(self):
        if min(self.gamma_pair, self.gamma_self, self.raman_rate) < 0:
            raise ValueError("rate coefficients must be non-negative")
        if not 0.0 < self.extraction_efficiency <= 1.0:
            raise ValueError("extraction_efficiency must lie in (0, 1]")


def signal_pair_rate(model, pumps, spec):
    """Degenerate pair rate (Hz) leaving the ring, bilinear in pump powers."""
    weight = resonator.pair_generation_weight(spec, pumps.lambda1, pumps.lambda2)
    return (
        model.gamma_pair
        * pumps.power1
        * pumps.power2
        * weight
        * model.extraction_efficiency
    )


def noise_singles_rate(model, pumps):
    """Incoherent photon rate (Hz) per output channel.

    Single-pump four-wave mixing consumes two photons from the same
    pump, hence the quadratic terms.
    """
    quad = 0.5 * model.gamma_self * (pumps.power1**2 + pumps.power2**2)
    rate = quad + model.raman_rate
    return (rate, rate)


def _detected_rates(model, pumps, spec, detectors):
    """Analytic detected pair-coincidence and singles rates.

    With detector specs, photon streams are thinned by efficiency, dark
    counts added, and the non-paralyzable dead-time survival 1/(1 + r tau)
    applied per channel.  Without detectors the raw optical rates are used.
    """
    pair = signal_pair_rate(model, pumps, spec)
    noise_a, noise_b = noise_singles_rate(model, pumps)
    if detectors is None:
        s_a = pair + noise_a
        s_b = pair + noise_b
        return pair, s_a, s_b
    det_a, det_b = detectors
    # each pair sends one photon to each channel at peak coincidence
    q_a = det_a.efficiency * (pair + noise_a) + det_a.dark_rate
    q_b = det_b.efficiency * (pair + noise_b) + det_b.dark_rate
    f_a = 1.0 / (1.0 + q_a * det_a.dead_time)
    f_b = 1.0 / (1.0 + q_b * det_b.dead_time)
    coinc = pair * det_a.efficiency * det_b.efficiency * f_a * f_b
    return coinc, q_a * f_a, q_b * f_b


def car_estimate(model, pumps, spec, window, detectors=None):
    """Coincidence-to-accidental ratio for a given coincidence window (s).

    Accidentals are s_a * s_b * window from the two singles rates
    (signal, noise and, when detector specs are supplied, dark counts
    and dead-time losses).  Returns +inf when the accidental rate is 0.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    coinc, s_a, s_b = _detected_rates(model, pumps, spec, detectors)
    accidental = s_a * s_b * window
    if accidental == 0:
        return math.inf
    return coinc / accidental


def optimal_power_split(model, total_power, spec, detectors=None, window=224e-12):
    """Pump power fraction f (power1 = f * total) maximizing the CAR.

    The objective rates the signal, proportional to f(1-f), against the
    noise-driven accidental floor, proportional to f^2 + (1-f)^2 (plus
    Raman and darks).  The signal's own singles are left out of the
    accidentals here: they scale with the signal itself, so including
    them would reward simply turning the source down instead of
    balancing the pumps.  Symmetric models peak at f = 1/2; a flat
    objective (no noise at all) tie-breaks to 1/2.
    """
    if total_power <= 0:
        raise ValueError("total_power must be positive")
    lam = spec.center_wavelength

    def neg_car(f):
        pumps = PumpConfig(lam, lam, f * total_power, (1.0 - f) * total_power)
        signal = signal_pair_rate(model, pumps, spec)
        noise_a, noise_b = noise_singles_rate(model, pumps)
        if detectors is not None:
            det_a, det_b = detectors
            signal = signal * det_a.efficiency * det_b.efficiency
            noise_a = det_a.efficiency * noise_a + det_a.dark_rate
            noise_b = det_b.efficiency * noise_b + det_b.dark_rate
        accidental = noise_a * noise_b * window
        if accidental == 0:
            return -1e300
        return -signal / accidental

    res = minimize_scalar(neg_car, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-6})
    best = float(res.x)
    # symmetry tie-break: a flat objective returns the midpoint
    if abs(neg_car(best) - neg_car(0.5)) <= 1e-9 * max(1.0, abs(neg_car(0.5))):
        return 0.5
    return best

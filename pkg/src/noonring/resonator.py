"""Spectral model of the ring resonator.

The resonance comb is equally spaced in optical frequency (the zero
dispersion design), so a symmetric pump pair (+m, -m) satisfies the
energy conservation relation 1/lambda1 + 1/lambda2 = 2/lambda_center
exactly and the degenerate bi-photon lands on the central resonance.
Near the center the wavelength spacing equals `fsr`; far modes deviate
by O(m^2 fsr^2 / lambda) from an arithmetic wavelength grid.

Each resonance has a Lorentzian response with FWHM lambda/Q, evaluated
against the nearest comb line only (fsr/linewidth ~ 50, so neighbor
contributions are negligible).
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RingSpec:
    """Ring resonator parameters (wavelengths in nm)."""

    center_wavelength: float = 1551.0   # bi-photon resonance
    fsr: float = 5.0                    # wavelength spacing near center
    loaded_q: float = 15000.0
    extinction: float = 0.95            # on-resonance transmission dip depth
    dispersion_quadratic: float = 0.0   # extra nm per mode-index^2
    mode_span: int = 8                  # resonances on each side of center

    def __post_init__(self):
        if self.center_wavelength <= 0 or self.fsr <= 0 or self.loaded_q <= 0:
            raise ValueError("center_wavelength, fsr and loaded_q must be positive")
        if not 0.0 < self.extinction <= 1.0:
            raise ValueError("extinction must lie in (0, 1]")
        if self.mode_span < 1:
            raise ValueError("mode_span must be >= 1")

    @property
    def linewidth_fwhm(self):
        """Lorentzian FWHM in nm, lambda/Q."""
        return self.center_wavelength / self.loaded_q


@dataclass
class ResonanceGrid:
    """Resonance wavelengths indexed by signed mode offset from center."""

    wavelengths: np.ndarray
    mode_span: int = field(default=0)

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=float)
        if np.any(np.diff(self.wavelengths) <= 0):
            raise ValueError("resonance wavelengths must be strictly increasing")
        if self.mode_span == 0:
            self.mode_span = (len(self.wavelengths) - 1) // 2

    def wavelength(self, m):
        """Resonance wavelength at signed mode offset m."""
        return float(self.wavelengths[m + self.mode_span])


def resonance_grid(spec):
    """Comb of resonance wavelengths for m in [-mode_span, +mode_span].

    Frequencies are equally spaced: 1/lambda_m = 1/center - m * fsr/center^2,
    plus an optional quadratic wavelength-domain dispersion term.
    """
    m = np.arange(-spec.mode_span, spec.mode_span + 1)
    dnu = spec.fsr / spec.center_wavelength**2  # mode spacing in 1/nm
    lam = 1.0 / (1.0 / spec.center_wavelength - m * dnu)
    lam = lam + spec.dispersion_quadratic * m**2
    return ResonanceGrid(lam, mode_span=spec.mode_span)


def nearest_resonance(spec, wavelength):
    """Wavelength of the comb line closest to `wavelength` (vectorized)."""
    grid = resonance_grid(spec).wavelengths
    lam = np.asarray(wavelength, dtype=float)
    idx = np.abs(lam[..., None] - grid).argmin(axis=-1)
    out = grid[idx]
    return out if lam.ndim else float(out)


def lorentzian_response(spec, wavelength):
    """Intra-cavity enhancement 1 / (1 + (2 detuning / FWHM)^2) in (0, 1]."""
    lam = np.asarray(wavelength, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("wavelength must be positive")
    det = lam - nearest_resonance(spec, lam)
    out = 1.0 / (1.0 + (2.0 * det / spec.linewidth_fwhm) ** 2)
    return out if lam.ndim else float(out)


def transmission(spec, wavelength):
    """Through-port power transmission 1 - extinction * L(lambda)."""
    return 1.0 - spec.extinction * lorentzian_response(spec, wavelength)


def biphoton_wavelength(lambda1, lambda2):
    """Degenerate pair wavelength from energy conservation:
    2/lambda_bi = 1/lambda1 + 1/lambda2 (the harmonic mean)."""
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    if np.any(l1 <= 0) or np.any(l2 <= 0):
        raise ValueError("wavelengths must be positive")
    out = 2.0 * l1 * l2 / (l1 + l2)
    return out if (l1.ndim or l2.ndim) else float(out)


def pair_generation_weight(spec, lambda1, lambda2):
    """Spectral weight L(l1) * L(l2) * L(l_biphoton) in [0, 1].

    Unity when both pumps sit on symmetric resonances; collapses to ~0
    when the energy-conservation wavelength misses the comb.
    """
    l_bi = biphoton_wavelength(lambda1, lambda2)
    return (
        lorentzian_response(spec, lambda1)
        * lorentzian_response(spec, lambda2)
        * lorentzian_response(spec, l_bi)
    )

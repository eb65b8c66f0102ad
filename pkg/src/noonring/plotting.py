"""Figure rendering for sweep results.

Everything here draws to files via the Agg backend so the command line
works headless; nothing below is needed to consume the CSV output.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_phase_sweep(result, path):
    """Classical fringes (top) and coincidence fringe (bottom) vs phase."""
    fig, (ax_cls, ax_q) = plt.subplots(2, 1, figsize=(6.0, 6.4), sharex=True)
    theta = result.phases
    ax_cls.plot(theta, result.classical_p1, "o-", ms=4, label="port 1")
    ax_cls.plot(theta, result.classical_p2, "s-", ms=4, label="port 2")
    ax_cls.set_ylabel("classical power (norm.)")
    ax_cls.legend(loc="upper right", fontsize=8)

    net = result.peak_counts - result.accidental_mean
    err = np.sqrt(np.maximum(result.peak_counts, 1.0))
    ax_q.errorbar(theta, net, yerr=err, fmt="o", ms=4, capsize=2,
                  label="peak - accidentals")
    fit = getattr(result, "visibility", None)
    if fit is not None and not fit.corrected.degenerate:
        dense = np.linspace(theta.min(), theta.max(), 400)
        f = fit.raw
        k = 2.0 * np.pi / f.period
        ax_q.plot(dense, f.offset + f.amplitude * np.cos(k * dense + f.phase)
                  - result.accidental_mean.mean(), "-", lw=1)
    ax_q.set_xlabel("MZI phase (rad)")
    ax_q.set_ylabel("coincidences / point")
    ax_q.legend(loc="upper right", fontsize=8)

    v = result.summary.get("v_raw")
    if v is not None:
        ax_q.set_title(f"V_raw = {v:.3f}, V_corr = "
                       f"{result.summary['v_corrected']:.3f}", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_wavelength_map(result, path):
    """Coincidence counts over the two pump wavelengths as a heat map."""
    l1 = np.unique(result.lambda1)
    l2 = np.unique(result.lambda2)
    counts = result.peak_counts.reshape(l1.size, l2.size)
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    mesh = ax.pcolormesh(l2, l1, counts, shading="nearest", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label="coincidences / point")
    ax.set_xlabel("pump 2 wavelength (nm)")
    ax.set_ylabel("pump 1 wavelength (nm)")
    fwhm = result.summary.get("ridge_fwhm_nm")
    if fwhm is not None and np.isfinite(fwhm):
        ax.set_title(f"ridge FWHM = {fwhm * 1e3:.0f} pm", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

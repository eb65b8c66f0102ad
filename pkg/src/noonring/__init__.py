"""Simulator for an on-chip two-photon N00N interference experiment.

A single ring resonator pumped on two symmetric resonances generates
degenerate photon pairs; a Mach-Zehnder interferometer and a pair of
gated single-photon detectors turn the phase sweep into classical and
quantum fringes, the latter at twice the classical frequency.
"""

__version__ = "1.0.0"

from . import calibrate, config, detector, experiment, fock, pairgen, resonator

__all__ = [
    "calibrate",
    "config",
    "detector",
    "experiment",
    "fock",
    "pairgen",
    "resonator",
]

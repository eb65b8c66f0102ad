"""Flat key-value configuration for the simulator.

The on-disk format is diff-friendly text, one `section.key = value` per
line, '#' comments.  Units are encoded in the key names: wavelengths in
nm, powers in W, rates in Hz, times in s.
"""

import hashlib
from dataclasses import replace

from . import detector, experiment, pairgen, resonator


class ConfigError(Exception):
    """Raised for unreadable or inconsistent configuration input."""


# Rate coefficients calibrated with `noonring calibrate`: analytic CAR = 80
# at 350 uW per pump in the 224 ps window, ~300 peak counts per 90 s point.
GAMMA_PAIR_DEFAULT = 3.5737205618e10   # Hz/W^2
GAMMA_SELF_DEFAULT = 2.5274944390e12   # Hz/W^2
RAMAN_RATE_DEFAULT = 2.5e4             # Hz


def default_config():
    """Paper-anchored defaults: Q=15k, FSR=5 nm, pumps on the (-4, +4)
    resonance pair at 350 uW each, ID210/ID230-like detectors."""
    ring = resonator.RingSpec()
    grid = resonator.resonance_grid(ring)
    pumps = pairgen.PumpConfig(
        lambda1=grid.wavelength(-4), lambda2=grid.wavelength(+4),
        power1=350e-6, power2=350e-6)
    rates = pairgen.RateModel(
        gamma_pair=GAMMA_PAIR_DEFAULT, gamma_self=GAMMA_SELF_DEFAULT,
        raman_rate=RAMAN_RATE_DEFAULT, extraction_efficiency=0.5)
    return experiment.CircuitConfig(
        ring=ring, pumps=pumps, rates=rates,
        detectors=(detector.ID210, detector.ID230),
        arm_transmission=0.744)


# key -> (object path, attribute, type)
_SCHEMA = {
    "ring.center_wavelength_nm": ("ring", "center_wavelength", float),
    "ring.fsr_nm": ("ring", "fsr", float),
    "ring.loaded_q": ("ring", "loaded_q", float),
    "ring.extinction": ("ring", "extinction", float),
    "ring.dispersion_quadratic_nm": ("ring", "dispersion_quadratic", float),
    "ring.mode_span": ("ring", "mode_span", int),
    "pumps.lambda1_nm": ("pumps", "lambda1", float),
    "pumps.lambda2_nm": ("pumps", "lambda2", float),
    "pumps.power1_w": ("pumps", "power1", float),
    "pumps.power2_w": ("pumps", "power2", float),
    "rates.gamma_pair_hz_per_w2": ("rates", "gamma_pair", float),
    "rates.gamma_self_hz_per_w2": ("rates", "gamma_self", float),
    "rates.raman_rate_hz": ("rates", "raman_rate", float),
    "rates.extraction_efficiency": ("rates", "extraction_efficiency", float),
    "detector_a.efficiency": ("det_a", "efficiency", float),
    "detector_a.dark_rate_hz": ("det_a", "dark_rate", float),
    "detector_a.dead_time_s": ("det_a", "dead_time", float),
    "detector_a.jitter_sigma_s": ("det_a", "jitter_sigma", float),
    "detector_b.efficiency": ("det_b", "efficiency", float),
    "detector_b.dark_rate_hz": ("det_b", "dark_rate", float),
    "detector_b.dead_time_s": ("det_b", "dead_time", float),
    "detector_b.jitter_sigma_s": ("det_b", "jitter_sigma", float),
    "mzi.reflectivity": (None, "mzi_reflectivity", float),
    "mzi.arm_transmission": (None, "arm_transmission", float),
    "mzi.static_phase_rad": (None, "static_phase", float),
    "mzi.phase_per_heater_mw": (None, "phase_per_heater_mw", float),
    "mzi.phase_walk_sigma_rad": (None, "phase_walk_sigma", float),
    "mzi.path_loss_ratio": (None, "path_loss_ratio", float),
    "timing.coincidence_window_s": (None, "coincidence_window", float),
    "timing.bin_width_s": (None, "bin_width", float),
    "timing.delay_range_s": (None, "delay_range", float),
    "timing.accidental_offset_s": (None, "accidental_offset", float),
    "timing.accidental_span_s": (None, "accidental_span", float),
    "run.integration_time_s": (None, "integration_time", float),
    "run.base_seed": (None, "base_seed", int),
}


def parse_config_text(text):
    """Parse key-value text into a CircuitConfig layered on the defaults."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        _, _, cast = _SCHEMA[key]
        try:
            overrides[key] = cast(float(value)) if cast is int else cast(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return _apply_overrides(default_config(), overrides)


def _apply_overrides(config, overrides):
    parts = {
        "ring": config.ring,
        "pumps": config.pumps,
        "rates": config.rates,
        "det_a": config.detectors[0],
        "det_b": config.detectors[1],
    }
    top = {}
    try:
        for key, value in overrides.items():
            section, attr, _ = _SCHEMA[key]
            if section is None:
                top[attr] = value
            else:
                parts[section] = replace(parts[section], **{attr: value})
        return replace(
            config, ring=parts["ring"], pumps=parts["pumps"], rates=parts["rates"],
            detectors=(parts["det_a"], parts["det_b"]), **top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(config):
    """Render a CircuitConfig back to the flat text format."""
    parts = {
        "ring": config.ring,
        "pumps": config.pumps,
        "rates": config.rates,
        "det_a": config.detectors[0],
        "det_b": config.detectors[1],
    }
    lines = []
    for key in sorted(_SCHEMA):
        section, attr, cast = _SCHEMA[key]
        obj = parts[section] if section is not None else config
        value = getattr(obj, attr)
        lines.append(f"{key} = {int(value) if cast is int else repr(float(value))}")
    return "\n".join(lines) + "\n"


def config_digest(config):
    """Short stable digest of the resolved configuration."""
    return hashlib.sha1(serialize_config(config).encode()).hexdigest()[:12]

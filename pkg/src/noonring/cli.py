"""Command-line front end.

Four commands: phase-sweep, wavelength-map, control and calibrate.
Each run writes CSV records with a '#' manifest header (command, config
digest, seed, timestamp) and a key-value summary footer, plus a PNG
figure next to the CSV.

Exit codes: 0 success, 2 usage or config problem, 3 simulation error,
4 calibration non-convergence.
"""

import argparse
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import calibrate, config as configmod, experiment, plotting

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SIMULATION = 3
EXIT_CALIBRATION = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noonring",
        description="Simulate a ring-resonator two-photon interference "
                    "experiment and write sweep CSVs and figures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="config file (flat key = value text); defaults used if omitted")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the run seed (beats NOONRING_SEED and the config)")

    p = sub.add_parser("phase-sweep", help="MZI phase sweep: classical and coincidence fringes")
    common(p)
    p.add_argument("--points", type=int, default=25, help="sweep points (>= 5)")
    p.add_argument("--theta-max", type=float, default=2.0 * math.pi,
                   help="sweep upper limit in rad (from 0)")

    p = sub.add_parser("wavelength-map", help="2D pump-wavelength coincidence map")
    common(p)
    p.add_argument("--span", type=float, default=0.6, help="scan span per pump (nm)")
    p.add_argument("--step", type=float, default=0.02, help="scan step (nm)")

    p = sub.add_parser("control", help="incoherent-pump control sweep")
    common(p)
    p.add_argument("--points", type=int, default=13, help="sweep points (>= 5)")
    p.add_argument("--theta-max", type=float, default=2.0 * math.pi,
                   help="sweep upper limit in rad (from 0)")

    p = sub.add_parser("calibrate", help="fit rate coefficients to the CAR and count targets")
    common(p)
    p.add_argument("--car-target", type=float, default=80.0)
    p.add_argument("--peak-counts-target", type=float, default=300.0)
    return parser


def _load(args):
    """Resolve config and seed; raises ConfigError for anything unusable."""
    if args.config is None:
        cfg = configmod.default_config()
    else:
        cfg = configmod.load_config(args.config)
    seed = cfg.base_seed
    env = os.environ.get("NOONRING_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise configmod.ConfigError(
                f"NOONRING_SEED must be an integer, got {env!r}")
    if args.seed is not None:
        seed = args.seed
    return replace(cfg, base_seed=seed)


def _manifest(args, cfg):
    return [
        f"command = {args.command}",
        f"config = {args.config or '<defaults>'}",
        f"out = {args.out}",
        f"seed = {cfg.base_seed}",
        f"config_digest = {configmod.config_digest(cfg)}",
        f"timestamp = {datetime.now(timezone.utc).isoformat()}",
    ]


def _write_outputs(result, args, cfg, stem, plot):
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, stem + ".csv")
    png_path = os.path.join(args.out, stem + ".png")
    experiment.sweep_to_csv(result, csv_path, header_lines=_manifest(args, cfg))
    plot(result, png_path)
    print(f"wrote {csv_path}")
    print(f"wrote {png_path}")
    for key, value in result.summary.items():
        print(f"{key} = {value}")


def cmd_phase_sweep(args):
    cfg = _load(args)
    if args.points < 5:
        print("error: insufficient points (need at least 5)", file=sys.stderr)
        return EXIT_USAGE
    phases = np.linspace(0.0, args.theta_max, args.points)
    result = experiment.run_phase_sweep(cfg, phases)
    _write_outputs(result, args, cfg, "phase_sweep", plotting.plot_phase_sweep)
    return EXIT_OK


def cmd_control(args):
    cfg = _load(args)
    if args.points < 5:
        print("error: insufficient points (need at least 5)", file=sys.stderr)
        return EXIT_USAGE
    phases = np.linspace(0.0, args.theta_max, args.points)
    result = experiment.run_incoherent_control(cfg, phases)
    _write_outputs(result, args, cfg, "control_sweep", plotting.plot_phase_sweep)
    flag = result.summary["incoherent_visibility_consistent_with_zero"]
    print(f"incoherent_visibility_consistent_with_zero={str(flag).lower()}")
    return EXIT_OK


def cmd_wavelength_map(args):
    cfg = _load(args)
    if args.step <= 0:
        print("error: step must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.span < 2 * args.step:
        print("error: span must cover at least 3 steps", file=sys.stderr)
        return EXIT_USAGE
    half = args.span / 2.0
    offsets = np.arange(-half, half + 1e-12, args.step)
    grid1 = cfg.pumps.lambda1 + offsets
    grid2 = cfg.pumps.lambda2 + offsets
    result = experiment.run_wavelength_map(cfg, grid1, grid2)
    _write_outputs(result, args, cfg, "wavelength_map", plotting.plot_wavelength_map)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _load(args)
    try:
        rates, trace = calibrate.calibrate_rates(
            cfg, car_target=args.car_target,
            peak_counts_target=args.peak_counts_target)
    except calibrate.CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    for it, gp, gs, car_err, peak_err in trace:
        print(f"iter {it:2d}  gamma_pair {gp:.6e}  gamma_self {gs:.6e}  "
              f"car_err {car_err:+.2e}  peak_err {peak_err:+.2e}")
    print(f"gamma_pair = {float(rates.gamma_pair)!r}")
    print(f"gamma_self = {float(rates.gamma_self)!r}")
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "calibrated.cfg")
    derived = replace(cfg, rates=rates)
    with open(out_path, "w") as fh:
        for line in _manifest(args, derived):
            fh.write(f"# {line}\n")
        fh.write(configmod.serialize_config(derived))
    print(f"wrote {out_path}")
    return EXIT_OK


_COMMANDS = {
    "phase-sweep": cmd_phase_sweep,
    "wavelength-map": cmd_wavelength_map,
    "control": cmd_control,
    "calibrate": cmd_calibrate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except configmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())

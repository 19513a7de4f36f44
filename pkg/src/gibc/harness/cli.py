"""Command line interface ``gibc-scatter``.

Exit status is 0 on success, 2 on configuration or usage errors (including
an unwritable output directory) and 3 on numerical failures.
"""

import argparse
import logging
import os
import sys

import numpy as np

from ..assembly import ImpedanceField
from ..errors import ConfigError, GibcError, InvalidArgument
from ..geometry import make_ellipse
from .builders import discretize, resolutions
from .config import ExperimentConfig, convert_value, load_config
from .experiments import mie_comparison, reciprocity_defect, run_experiment
from .presets import PRESETS, preset_config
from .report import emit_report
from .synth import generate_synthetic, relative_deviation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", key)
        out[key.strip()] = convert_value(key.strip(), raw.strip())
    if args.seed is not None:
        out["seed"] = args.seed
    if args.same_mesh:
        out["same_mesh"] = True
    return out


def _config(args) -> ExperimentConfig:
    if args.command == "preset":
        if args.name not in PRESETS:
            raise ConfigError(f"unknown preset {args.name!r}; choose from {', '.join(sorted(PRESETS))}",
                              "preset")
        return preset_config(args.name, **_overrides(args))
    return load_config(args.config, **_overrides(args))


def _out_dir(args, cfg: ExperimentConfig) -> str:
    return args.out_dir or os.path.join("gibc-out", cfg.name)


def _print_metrics(metrics: dict) -> None:
    for key in sorted(metrics):
        print(f"{key} = {metrics[key]}")


def cmd_run(args, kind=None) -> int:
    cfg = _config(args)
    if kind is not None:
        cfg = cfg.with_overrides(kind=kind)
    result = run_experiment(cfg)
    paths = emit_report(result, _out_dir(args, cfg))
    _print_metrics(result.metrics)
    print(f"wrote {len(paths)} files to {_out_dir(args, cfg)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    syn = generate_synthetic(cfg, out_dir=out)
    dev = relative_deviation(syn.noisy, syn.clean)
    print(f"noise level per aperture: min {dev.min()!r} max {dev.max()!r}")
    print(f"wrote clean and noisy far-field files to {out}")
    return EXIT_OK


def selftest() -> bool:
    """Quick forward checks; prints one line per check and returns overall success."""
    cfg = preset_config("mie-selftest")
    ok = True
    err, *_ = mie_comparison(cfg, 128, 12)
    ok &= _report("mie far-field error (128x12) <= 6%", err, err <= 0.06)
    res, _ = resolutions(cfg.with_overrides(nb=128, nr=12), cfg.k)
    curve = make_ellipse(0.4, 0.3, 128)
    disc = discretize(cfg, curve, res, cfg.k)
    defect = reciprocity_defect(disc, ImpedanceField.constant(128, 0.5j, 1.0), np.linspace(0.1, 6.0, 4))
    ok &= _report("reciprocity defect <= 1e-6", defect, defect <= 1e-6)
    syn_cfg = preset_config("table1-row1", nb=128, nr=12, n_waves=4)
    syn = generate_synthetic(syn_cfg)
    dev = np.max(np.abs(relative_deviation(syn.noisy, syn.clean) - syn_cfg.sigma))
    ok &= _report("noise level exact within 1e-12", dev, dev <= 1e-12)
    return bool(ok)


def _report(label: str, value: float, passed: bool) -> bool:
    print(f"{'PASS' if passed else 'FAIL'}  {label}: {value:.3e}")
    return passed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gibc-scatter",
                                description="GIBC scattering: forward solves, synthetic data, reconstruction.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="noise seed (overrides the config)")
        sp.add_argument("--out-dir", default=None, help="output directory (default gibc-out/<name>)")
        sp.add_argument("--same-mesh", action="store_true",
                        help="generate data on the inversion mesh (fixed-point tests only)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    for name, text in (("forward", "far-field of the configured truth"),
                       ("synth", "write clean and noisy synthetic data"),
                       ("invert", "run the reconstruction")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="key = value configuration file")
        common(sp)
    sp = sub.add_parser("preset", help="run a named experiment")
    sp.add_argument("name", help="one of: " + ", ".join(sorted(PRESETS)))
    common(sp)
    sub.add_parser("selftest", help="quick forward-solver checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return EXIT_OK if selftest() else EXIT_NUMERICAL
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "forward":
            return cmd_run(args, kind="forward")
        if args.command == "invert":
            return cmd_run(args, kind="inversion")
        return cmd_run(args)
    except (ConfigError, InvalidArgument) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GibcError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

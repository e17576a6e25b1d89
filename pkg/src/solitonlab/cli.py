"""Command-line entry point.

    soliton-lab profile  --config study.toml [--out DIR]
    soliton-lab spectrum --config study.toml [--out DIR]
    soliton-lab run      --config study.toml [--out DIR]
    soliton-lab sweep    --config study.toml --parameter eps_V --values 0.1 0.05 0.025

Exit codes: 0 ok, 2 configuration error, 3 certification failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core.config import get_settings
from .core.exceptions import SolitonLabError
from .core.logging import configure_logging
from .core.tracing import configure_tracing
from .harness.loader import load_config, run_id
from .harness.outputs import RunDirectory, dumps
from .harness.runner import certify, run_experiment
from .harness.sweep import OBSERVABLES, PARAMETERS, sweep_orders
from .profile.family import mass_curve
from .profile.solver import export_profile, solve_profile

logger = logging.getLogger(__name__)


def _profile(args: argparse.Namespace) -> int:
    config = load_config(args.config, strict=args.strict)
    settings = get_settings()
    spec = config.build_nonlinearity()
    mu = config.initial.mu
    profile = solve_profile(
        spec,
        mu,
        config.dimension,
        radial_points=config.spectrum.radial_points or settings.radial_points,
        plane_points=config.spectrum.plane_points or settings.plane_points,
    )
    root = args.out or config.run.output or settings.output_root
    directory = RunDirectory(root, config.run.name, run_id(config)).prepare()
    export_profile(profile, directory.file("profile.txt"), spec)
    curve = mass_curve(spec, [mu], config.dimension, profiles=[profile])
    directory.write_json("mass.json", curve.as_dict())
    print(dumps({"profile": profile.summary(), "mass_curve": curve.as_dict()}, indent=2))
    return 0


def _spectrum(args: argparse.Namespace) -> int:
    config = load_config(args.config, strict=args.strict)
    summary = certify(config, output_root=args.out)
    print(dumps(summary.spectrum, indent=2))
    return summary.exit_code


def _run(args: argparse.Namespace) -> int:
    config = load_config(args.config, strict=args.strict)
    summary = run_experiment(config, output_root=args.out)
    print(dumps({"status": summary.status, "output_dir": summary.output_dir, **summary.observables}, indent=2))
    return summary.exit_code


def _sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config, strict=args.strict)
    report = sweep_orders(
        config,
        args.parameter,
        args.values,
        args.observables or OBSERVABLES,
        workers=args.workers,
        output_root=args.out,
    )
    print(report.to_text(), end="")
    failed = [member.exit_code for member in report.members if not member.ok]
    return max(failed) if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soliton-lab", description="Soliton Newton lab")
    parser.add_argument("--log-level", default=None, help="Override SOLITON_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, required=True)
        sub.add_argument("--out", type=Path, default=None, help="Output root directory")
        sub.add_argument(
            "--strict",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="Reject unknown config keys (default from SOLITON_STRICT_CONFIG)",
        )
        return sub

    common("profile", "Solve and export the profile at the configured frequency").set_defaults(handler=_profile)
    common("spectrum", "Run the certification stages only").set_defaults(handler=_spectrum)
    common("run", "Run one experiment").set_defaults(handler=_run)
    sweep = common("sweep", "Order-of-convergence study")
    sweep.add_argument("--parameter", choices=PARAMETERS, required=True)
    sweep.add_argument("--values", type=float, nargs="+", required=True)
    sweep.add_argument("--observables", nargs="+", choices=OBSERVABLES, default=None)
    sweep.add_argument("--workers", type=int, default=None)
    sweep.set_defaults(handler=_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or get_settings().log_level)
    configure_tracing()
    try:
        return int(args.handler(args))
    except SolitonLabError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

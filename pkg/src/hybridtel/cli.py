"""Command-line entry point: subcommand per experiment runner."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import ExperimentConfig, apply_overrides, load_config
from .errors import HybridTelError
from .experiments import (
    run_bell_figure,
    run_noise_montecarlo,
    run_resource_figure,
    run_teleport_sweep,
    run_tomography_roundtrip,
)

RUNNERS = {
    "resource": run_resource_figure,
    "bell": run_bell_figure,
    "teleport": run_teleport_sweep,
    "montecarlo": run_noise_montecarlo,
    "tomography": run_tomography_roundtrip,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridtel",
        description="Emit figure data for the post-selected hybrid teleporter.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in RUNNERS.items():
        p = sub.add_parser(name, help=(runner.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", help="JSON config file (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted-path config override")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        if args.overrides:
            config = apply_overrides(config, args.overrides)
        if args.seed is not None:
            config = replace(config, rng_seed=args.seed)
        out_dir = args.out if args.out is not None else config.out_dir
        report = RUNNERS[args.command](config, out_dir)
    except HybridTelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, sort_keys=True, indent=2, default=str))
    return 0 if report.get("ok", True) else 1


if __name__ == "__main__":
    sys.exit(main())

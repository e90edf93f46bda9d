"""Command-line entry point: ``tgrsim run`` and ``tgrsim presets``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import yaml

from .config import ConfigError
from .scenario import list_presets, load_scenario, run_scenario

OUT_ENV = "TGRSIM_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tgrsim", description="XR downlink simulator with tethered UE groups")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or a built-in preset")
    run.add_argument("--scenario", required=True, help="YAML scenario file or preset name")
    run.add_argument("--seed", type=int, help="master seed (overrides the scenario)")
    run.add_argument("--drops", type=int, help="drops per sweep point")
    run.add_argument("--parallel", type=int, default=1, help="worker processes")
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="patch a config key, or a sweep axis as sweep.KEY=[...]; repeatable")

    sub.add_parser("presets", help="list built-in scenarios")
    return p


def _out_dir(arg: str | None, spec_out: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or spec_out or "results")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "presets":
        for name in list_presets():
            print(name)
        return EXIT_OK

    try:
        if args.drops is not None and args.drops < 1:
            raise ConfigError("drops", "must be >= 1")
        if args.parallel < 1:
            raise ConfigError("parallel", "must be >= 1")
        spec = load_scenario(args.scenario, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _out_dir(args.out, spec.output)
    try:
        summary = run_scenario(spec, out, seed=args.seed, drops=args.drops, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any simulation failure as a runtime error
        logging.getLogger(__name__).debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for label, cap in summary["capacity"].items():
        mark = " (approximate)" if cap["approximate"] else ""
        print(f"{spec.name} {label}: capacity {cap['users_per_cell']:.2f} users/cell{mark}")
    print(f"wrote {out / f'metrics_{spec.name}.csv'} and {out / f'summary_{spec.name}.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

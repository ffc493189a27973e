"""Command-line entry point: run / sweep / plot / validate.

Exit codes: 0 success, 2 configuration error, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import SCENARIOS, load_config, load_scenario
from .errors import ConfigurationError, RisFeelError
from .plots import PLOT_KINDS, plot
from .simulate import run, scenario_sweep


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", help="config file")
    parser.add_argument(
        "--scenario", choices=SCENARIOS, help="shipped scenario preset"
    )
    parser.add_argument(
        "--seed", type=int, action="append", default=[],
        metavar="N", help="append a seed to the seed list (repeatable)"
    )
    parser.add_argument("--out", metavar="DIR", help="output directory")


def _resolve_config(args):
    if args.config and args.scenario:
        raise ConfigurationError("give either --config or --scenario, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        cfg = load_scenario(args.scenario)
    else:
        raise ConfigurationError("one of --config or --scenario is required")
    if args.seed:
        cfg = replace(cfg, seeds=cfg.seeds + tuple(args.seed))
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg.validate()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risfeel",
        description="RIS-assisted over-the-air federated learning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run", "sweep", "validate"):
        p = sub.add_parser(name)
        _add_common(p)
    p_plot = sub.add_parser("plot")
    p_plot.add_argument("--traces", required=True, metavar="DIR",
                        help="directory holding trace CSVs")
    p_plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p_plot.add_argument("--out", required=True, metavar="PATH",
                        help="output image file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            _resolve_config(args)
            print("config ok")
        elif args.command == "run":
            for path in run(_resolve_config(args)):
                print(path)
        elif args.command == "sweep":
            for path in scenario_sweep(_resolve_config(args)):
                print(path)
        else:  # plot
            print(plot(args.traces, args.kind, args.out))
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RisFeelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""``abc-rates <experiment> --config FILE [--seed N] [--workers N] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .core import ConfigurationError, DegenerateError
from .experiments import COMMANDS, EXIT_CONFIG, EXIT_DEGENERATE, ExperimentConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abc-rates", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config, experiment=args.command, seed=args.seed,
                                    workers=args.workers, out=args.out)
        results, code = COMMANDS[args.command](cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateError as exc:
        print(f"degenerate outcome: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    print(json.dumps(results, indent=2, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())

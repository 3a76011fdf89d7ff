"""Command line entry point: ``affinecurve {measure,restrict,probe,all}``."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, CurveError
from .harness import ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affinecurve",
        description="Affine arclength, covering measures and maximal restriction experiments on convex curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "measure": "compare covering costs with the affine arclength measure",
        "restrict": "estimate restriction norm ratios and dump extension fields",
        "probe": "probe convergence of maximal averages at curve points",
        "all": "run every stage and every acceptance criterion",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON config file (defaults are used when omitted)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed-override", type=int, help="replace the config seed")
        p.add_argument("--no-checks", action="store_true", help="skip the acceptance criteria")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.seed_override is not None:
            config.seed = args.seed_override
        if args.out:
            config.out = args.out
        result = run_experiment(config, commands=(args.command,), checks=not args.no_checks)
    except (ConfigError, CurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out}; exit status {result.exit_code}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    stepadapt --config run.cfg --out results/
    stepadapt --out results/ --set algorithm=oneplusone --set objective=sphere \
              --set n=10 --seed 42

Exit codes: 0 success; 1 configuration error; 2 target or check not met;
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import MODES, ConfigError, parse_config
from .core import InternalInvariantError
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepadapt",
        description="Run step-size adaptive search experiments with "
                    "file-based, seed-reproducible outputs.",
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="path to a key=value configuration file")
    parser.add_argument("--mode", choices=MODES, default=None,
                        help="override the run mode")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the seed")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override any config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    overrides = list(args.overrides)
    if args.mode is not None:
        overrides.append(f"mode={args.mode}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")

    try:
        config = parse_config(text, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        result = run_experiment(config, args.out)
    except InternalInvariantError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 3

    for summary in result.summaries:
        parts = [f"replicate {summary['replicate']}"]
        parts.append(f"final_f={summary['final_f']:.6g}")
        parts.append(f"evals={summary['evals']}")
        if summary["evals_to_target"] == summary["evals_to_target"]:
            parts.append(f"evals_to_target={int(summary['evals_to_target'])}")
        if summary["cr"] == summary["cr"]:
            parts.append(
                f"cr={summary['cr']:.6g} +- {summary['cr_half_width']:.2g}"
            )
        print("  ".join(parts))
    for report in result.reports:
        print(report if isinstance(report, str) else str(report))
    print(f"wrote {result.out_dir}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())

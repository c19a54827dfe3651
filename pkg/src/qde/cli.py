"""Command line entry point ``qde``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import QDEError
from .experiments import ExperimentConfig, run_suite

COMMANDS = ("bound", "rate", "cone", "lemma2", "converge", "velocity", "entropy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qde", description="Dynamical entropy bounds for quantum spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("suite",):
        p = sub.add_parser(name, help=f"run the {name} item" if name != "suite" else "run every configured item")
        p.add_argument("--config", help="JSON config file; built-in defaults when omitted")
        p.add_argument("--seed", type=int)
        p.add_argument("--radius", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--m-max", dest="M_max", type=int)
        p.add_argument("--budget", type=int)
        if name == "suite":
            p.add_argument("--parallel", action="store_true", default=None, help="run items concurrently")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k, None) for k in ("seed", "radius", "out", "M_max", "budget", "parallel")}
    if args.command != "suite":
        overrides["suite"] = [args.command]
    return cfg.replace(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        bundle = run_suite(cfg)
    except (QDEError, OSError, json.JSONDecodeError) as exc:
        print(f"qde: error: {exc}", file=sys.stderr)
        return 2
    for item in bundle.items:
        print(f"{item.name}: {item.status} {json.dumps(item.summary, default=float)}")
    print(f"outputs in {bundle.out}")
    return 0 if bundle.ok else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``convexity-testbed <subcommand> [--flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .grid import GridInfeasible
from .harness import (COMMANDS, EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION, ConfigError,
                      ExperimentConfig, dumps, report_csv, run, sweep)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", default=0, help="64-bit RNG seed")
    p.add_argument("--output", default=None, help="report path (written atomically)")
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.add_argument("--config", default=None,
                   help="JSON config or earlier report whose params seed this run; flags override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convexity-testbed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, schema) in COMMANDS.items():
        p = sub.add_parser(name)
        for key, param in schema.items():
            if param.kind is bool:
                p.add_argument(_flag(key), dest=key, action="store_const", const=True, default=None)
            else:
                p.add_argument(_flag(key), dest=key, default=None)
        _add_common(p)
    s = sub.add_parser("sweep", help="run one command over a list of values of a numeric parameter")
    s.add_argument("--command", dest="base_command", required=True, choices=sorted(COMMANDS))
    s.add_argument("--axis", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="fixed parameter of the base command (repeatable)")
    s.add_argument("--jobs", type=int, default=None)
    _add_common(s)
    return parser


def _load_config(path):
    if path is None:
        return {}, None
    obj = json.loads(Path(path).read_text())
    obj = obj.get("config", obj)
    return dict(obj.get("params", {})), obj.get("seed")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params, cfg_seed = _load_config(args.config)
    seed = cfg_seed if cfg_seed is not None and args.seed == 0 else args.seed
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        pass
    try:
        if args.command == "sweep":
            for item in args.param:
                key, _, value = item.partition("=")
                params[key] = _parse_value(value)
            base = ExperimentConfig(args.base_command, params, seed, args.output, args.format)
            values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
            reports = sweep(base, args.axis, values, args.jobs)
            if not args.output:
                sys.stdout.write(report_csv(reports) if args.format == "csv" else dumps(reports))
            return EXIT_OK
        schema = COMMANDS[args.command][1]
        for key in schema:
            value = getattr(args, key)
            if value is not None:
                params[key] = value
        config = ExperimentConfig(args.command, params, seed, args.output, args.format)
        report = run(config)
        if not args.output:
            sys.stdout.write(report_csv([report]) if args.format == "csv" else dumps(report))
        return EXIT_OK
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except GridInfeasible as exc:
        print(f"error: {exc} (count={exc.count})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

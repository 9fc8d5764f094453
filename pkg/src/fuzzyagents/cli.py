"""Command line: run a scenario, infer one duration, or validate a config.

Exit codes: 0 success, 1 invalid configuration or scenario, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, SystemConfig, load_config
from .fuzzy import EmptyAggregateError
from .runtime import Scenario, ScenarioError
from .trace import export_trace
from .watering import (
    build_watering_system,
    infer,
    reference_config,
    reference_scenario,
    run_scenario,
    validate_config,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Invalid(Exception):
    pass


def _config(path: Optional[str]) -> SystemConfig:
    try:
        return reference_config() if path is None else load_config(path)
    except (OSError, ConfigError) as exc:
        raise _Invalid(str(exc)) from None


def _cmd_run(args) -> int:
    cfg = _config(args.config)
    try:
        scenario = reference_scenario() if args.scenario is None else Scenario.load(args.scenario)
        system = build_watering_system(cfg, parallel=args.parallel, seed=args.seed)
    except (OSError, ValueError, KeyError) as exc:
        raise _Invalid(str(exc)) from None
    duration, trace = run_scenario(system, scenario)
    data = export_trace(trace, args.format)
    if args.out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(args.out).write_bytes(data)
    print("duration: none" if duration is None else f"duration: {duration:.6g}",
          file=sys.stderr if args.out == "-" else sys.stdout)
    return EXIT_OK


def _cmd_infer(args) -> int:
    cfg = _config(args.config)
    print(f"{infer(cfg, args.temperature, args.humidity):.6g}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _config(args.config)
    problems = validate_config(cfg, required=("temperature", "humidity", "duration"))
    if problems:
        raise _Invalid("; ".join(problems))
    print(f"{cfg.name}: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzyagents", description="Fuzzy agent smart-watering system")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario through the agents and write the trace")
    run.add_argument("--config", help="configuration file (default: packaged reference)")
    run.add_argument("--scenario", help="scenario file (default: packaged reference)")
    run.add_argument("--out", default="-", help="trace destination, '-' for stdout")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--parallel", action="store_true", help="step agents on a thread pool")
    run.set_defaults(func=_cmd_run)

    inf = sub.add_parser("infer", help="one-shot Mamdani inference, bypassing the agents")
    inf.add_argument("--config")
    inf.add_argument("--temperature", type=float, required=True, help="degrees Celsius")
    inf.add_argument("--humidity", type=float, required=True, help="percent")
    inf.set_defaults(func=_cmd_infer)

    val = sub.add_parser("validate", help="check structure and calibration of a configuration")
    val.add_argument("--config")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Invalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EmptyAggregateError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

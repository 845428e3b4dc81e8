"""Command line: ``gridbroker run --scenario FILE ...`` and ``gridbroker validate FILE``.

Exit codes: 0 every job done, 2 otherwise, 3 engine fault, 4 scenario error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .asm import EngineFault
from .model import InitializationError
from .scenario import MATCHMAKING, MODES, ScenarioError, load_scenario, validate_scenario
from .sim import ScenarioInvalid, compute_metrics, emit_trace, exit_code, format_report, run

EXIT_ENGINE_FAULT = 3
EXIT_SCENARIO_ERROR = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridbroker",
                                     description="Step-based grid broker simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario")
    r.add_argument("--scenario", required=True, metavar="FILE")
    r.add_argument("--seed", type=int, help="seed for seeded choose (switches choose to seeded)")
    r.add_argument("--max-steps", type=int)
    r.add_argument("--trace", metavar="FILE", help="write the TSV trace here ('-' for stdout)")
    r.add_argument("--report", metavar="FILE", help="write the report here instead of stdout")
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--matchmaking", choices=MATCHMAKING, help="both matchmaking levels")

    v = sub.add_parser("validate", help="parse and validate a scenario")
    v.add_argument("scenario", metavar="FILE")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
        changes["choose"] = "seeded"
    if args.max_steps is not None:
        changes["max_steps"] = args.max_steps
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.matchmaking is not None:
        changes["broker_matchmaking"] = args.matchmaking
        changes["host_matchmaking"] = args.matchmaking
    return changes


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario).with_config(**_overrides(args))
        report, trace = run(scenario)
    except (ScenarioError, ScenarioInvalid, InitializationError, ValueError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    except EngineFault as exc:
        print(f"engine fault: {exc}", file=sys.stderr)
        return EXIT_ENGINE_FAULT
    if args.trace:
        if args.trace == "-":
            emit_trace(trace, sys.stdout)
        else:
            with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
                emit_trace(trace, fh)
    _write(args.report, format_report(report, compute_metrics(report)))
    return exit_code(report)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_ERROR
    issues = validate_scenario(scenario)
    for issue in issues:
        print(issue, file=sys.stderr)
    if issues:
        return EXIT_SCENARIO_ERROR
    print(f"ok: {len(scenario.jobs)} jobs, {len(scenario.hosts)} hosts, "
          f"{len(scenario.brokers)} brokers")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())

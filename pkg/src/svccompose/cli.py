"""Command-line entry point.

Exit status: 0 when a plan is found, 2 when composition fails, 1 on errors
(bad scenario, unreadable or corrupt transcript).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .errors import ComposeError
from .runtime import RunResult, Transcript, load_scenario, replay, run

EXIT_PLAN, EXIT_ERROR, EXIT_FAILURE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="compose",
        description="Compose services by multi-agent refinement of partial plans.",
    )
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None,
                   help="scheduler seed (defaults to the scenario's)")
    p.add_argument("--max-cycles", type=int, default=None,
                   help="refinement cycle budget (defaults to the scenario's)")
    p.add_argument("--trace", metavar="OUT.jsonl", help="write the run transcript here")
    p.add_argument("--replay", metavar="IN.jsonl",
                   help="re-derive the result from a transcript instead of running")
    p.add_argument("-v", "--verbose", action="store_true", help="log agent activity")
    return p


def _report(result: RunResult) -> int:
    if not result.ok:
        print(f"composition failed: {result.reason}", file=sys.stderr)
        return EXIT_FAILURE
    for action in result.plan:
        print(action)
    if result.total is not None:
        print(f"total payment: {result.total}", file=sys.stderr)
    return EXIT_PLAN


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.replay is None and args.scenario is None:
        parser.error("one of --scenario or --replay is required")
    if args.max_cycles is not None and args.max_cycles < 1:
        parser.error("--max-cycles must be positive")
    try:
        if args.replay is not None:
            return _report(replay(Transcript.read(args.replay)))
        scenario = load_scenario(args.scenario)
        result, transcript = run(scenario, seed=args.seed, max_cycles=args.max_cycles)
        if args.trace:
            transcript.write(args.trace)
    except (ComposeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return _report(result)


if __name__ == "__main__":
    sys.exit(main())

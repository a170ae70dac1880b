"""Command line front end for scenario runs and baseline comparisons."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .harness import (
    ExperimentSpec,
    ResultTable,
    compare_access,
    compare_association,
    compare_channels,
    load_spec,
    run_experiment,
)
from .topology import validate_config


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--spec", required=True, help="scenario JSON file")
    sub.add_argument(
        "--seeds",
        default=None,
        help="override seeds: a count (10 -> 0..9) or a comma list (3,7,11)",
    )
    sub.add_argument("--out", default=None, help="write per-run rows to this CSV")
    sub.add_argument("--json", default=None, help="write rows and summary to this JSON")
    sub.add_argument("--workers", type=int, default=1, help="parallel runs")
    sub.add_argument(
        "--strict",
        action="store_true",
        help="exit with status 2 if any point is infeasible",
    )


def _parse_seeds(text: str) -> tuple[int, ...]:
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip())
    return tuple(range(int(text)))


def _load(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_spec(args.spec)
    if args.seeds is not None:
        spec = dataclasses.replace(spec, seeds=_parse_seeds(args.seeds))
    return spec


def _emit(table: ResultTable, args: argparse.Namespace) -> int:
    if args.out:
        table.to_csv(args.out)
    if args.json:
        table.to_json(args.json)
    for line in table.summary():
        print(
            f"{line['variable']}={line['value']} access={line['access']} "
            f"fading={line['fading']} assoc={line['association']}: "
            f"mean {line['mean_sum_rate_bps_hz']:.4f} bps/Hz "
            f"(stderr {line['stderr_bps_hz']:.4f}, "
            f"{line['feasible']}/{line['seeds']} feasible)"
        )
    if args.strict and not table.all_feasible():
        print("at least one point infeasible", file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="scmaran",
        description="Robust beamforming / codebook scheduling experiments",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare-access", "compare-channel", "compare-assoc"):
        _add_common(subs.add_parser(name))
    val = subs.add_parser("validate", help="check a scenario file")
    val.add_argument("--spec", required=True)
    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            spec = load_spec(args.spec)
        except (ValueError, KeyError, json.JSONDecodeError) as err:
            print(f"invalid scenario: {err}", file=sys.stderr)
            return 1
        problems = validate_config(spec.config)
        if problems:
            for p in problems:
                print(p, file=sys.stderr)
            return 1
        print(
            f"ok: {spec.name} sweeps {spec.variable} over {list(spec.values)} "
            f"with {len(spec.seeds)} seeds"
        )
        return 0

    spec = _load(args)
    runner = {
        "run": run_experiment,
        "compare-access": compare_access,
        "compare-channel": compare_channels,
        "compare-assoc": compare_association,
    }[args.command]
    table = runner(spec, workers=args.workers)
    return _emit(table, args)


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Four subcommands: gen-stream writes a reproducible stream file, bench runs
the full benchmark matrix and writes records.csv plus summary.csv, pareto
extracts the non-dominated rows of a summary for one delta, and simulate
runs a named or file-defined scenario against the broker simulation.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 safety invariant
violated during a simulation.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ScenarioError, UnknownDelta
from .harness import (
    ExperimentPlan,
    SummaryRow,
    run_plan,
    write_records_csv,
    write_summary_csv,
    read_summary_csv,
)
from .metrics import CostPoint, pareto_front
from .model import DEFAULT_CAPACITY, Algorithm
from .scenarios import BUILTIN_SCENARIOS, builtin_scenario, load_scenario, run_scenario
from .controller import write_event_log
from .streams import InitMode, StreamSpec, generate, save_stream

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _parse_algorithms(text: str) -> tuple[Algorithm, ...]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise _UsageError("--algorithms needs at least one name")
    return tuple(Algorithm.parse(n) for n in names)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser() -> _Parser:
    parser = _Parser(prog="scalepack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-stream", help="generate a measurement stream file")
    g.add_argument("--delta", type=float, default=5.0)
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--partitions", type=int, default=100)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--init", type=InitMode.parse, default=InitMode.UNIFORM)
    g.add_argument("--capacity", type=float, default=DEFAULT_CAPACITY)
    g.add_argument("--out", default="stream.json")
    g.set_defaults(func=_cmd_gen_stream)

    b = sub.add_parser("bench", help="run the benchmark matrix")
    b.add_argument("--deltas", type=_parse_floats, default=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0))
    b.add_argument("--seeds", type=_parse_ints, default=(1, 2, 3, 4, 5))
    b.add_argument("--n", type=int, default=500)
    b.add_argument("--partitions", type=int, default=100)
    b.add_argument("--init", type=InitMode.parse, default=InitMode.UNIFORM)
    b.add_argument("--capacity", type=float, default=DEFAULT_CAPACITY)
    b.add_argument("--algorithms", type=_parse_algorithms, default=tuple(Algorithm))
    b.add_argument("--out", default=".")
    b.set_defaults(func=_cmd_bench)

    p = sub.add_parser("pareto", help="extract one delta's Pareto front")
    p.add_argument("summary", help="summary.csv written by bench")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out", default="pareto.csv")
    p.set_defaults(func=_cmd_pareto)

    s = sub.add_parser("simulate", help="run a broker scenario")
    s.add_argument("--scenario", required=True, help="built-in name or JSON file path")
    s.add_argument("--algorithms", type=_parse_algorithms, default=None, help="exactly one algorithm")
    s.add_argument("--ticks", type=int, default=None)
    s.add_argument("--capacity", type=float, default=None)
    s.add_argument("--ack-timeout", type=int, default=None, dest="ack_timeout")
    s.add_argument("--hysteresis", type=int, default=None)
    s.add_argument("--out", default=".")
    s.set_defaults(func=_cmd_simulate)
    return parser


def _cmd_gen_stream(args: argparse.Namespace) -> int:
    spec = StreamSpec(
        partitions=args.partitions,
        length=args.n,
        delta=args.delta,
        capacity=args.capacity,
        init=args.init,
        seed=args.seed,
    )
    stream = generate(spec)
    out = Path(args.out)
    save_stream(stream, out)
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    print(f"{out} sha256={digest}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    plan = ExperimentPlan(
        deltas=args.deltas,
        seeds=args.seeds,
        algorithms=args.algorithms,
        stream_length=args.n,
        partitions=args.partitions,
        capacity=args.capacity,
        init=args.init,
    )
    result = run_plan(plan)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(result.records, out / "records.csv")
    write_summary_csv(result.summary, out / "summary.csv")
    for delta in plan.deltas:
        print(f"delta={delta:g}")
        for row in result.summary:
            if row.delta == delta:
                star = " *" if row.on_pareto else ""
                print(
                    f"  {row.algorithm.label:<5} cbs={row.cbs:.6f} "
                    f"avg_rscore={row.avg_rscore:.6f}{star}"
                )
    print(f"wrote {out / 'records.csv'} and {out / 'summary.csv'}")
    return 0


def _cmd_pareto(args: argparse.Namespace) -> int:
    rows = read_summary_csv(args.summary)
    chosen = [r for r in rows if r.delta == args.delta]
    if not chosen:
        raise UnknownDelta(
            f"delta {args.delta:g} not present in {args.summary}; "
            f"available: {sorted({r.delta for r in rows})}"
        )
    points = [CostPoint(r.algorithm, r.cbs, r.avg_rscore) for r in chosen]
    front = {(p.algorithm, p.cbs, p.avg_rscore) for p in pareto_front(points)}
    winners = [
        SummaryRow(r.delta, r.algorithm, r.cbs, r.avg_rscore, True)
        for r in chosen
        if (r.algorithm, r.cbs, r.avg_rscore) in front
    ]
    winners.sort(key=lambda r: (r.cbs, r.avg_rscore, r.algorithm.label))
    write_summary_csv(winners, args.out)
    for r in winners:
        print(f"{r.algorithm.label:<5} cbs={r.cbs:.6f} avg_rscore={r.avg_rscore:.6f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    name = args.scenario
    if name in BUILTIN_SCENARIOS:
        scenario = builtin_scenario(name, args.capacity or DEFAULT_CAPACITY)
    elif Path(name).exists():
        scenario = load_scenario(name)
        if args.capacity is not None:
            scenario = replace(scenario, capacity=args.capacity)
    else:
        raise ScenarioError(f"no built-in or file named {name!r}")

    if args.algorithms is not None:
        algos = args.algorithms
        if len(algos) != 1:
            raise _UsageError("simulate takes exactly one algorithm")
        scenario = replace(scenario, algorithm=algos[0])
    if args.ticks is not None:
        scenario = replace(scenario, ticks=args.ticks)
    if args.ack_timeout is not None:
        scenario = replace(scenario, ack_timeout_ticks=args.ack_timeout)
    if args.hysteresis is not None:
        scenario = replace(
            scenario, policy=replace(scenario.policy, hysteresis_cycles=args.hysteresis)
        )

    result = run_scenario(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_event_log(result.events, out / "events.jsonl")
    with open(out / "lag.jsonl", "w") as fh:
        for tick, lag in enumerate(result.lag_series):
            fh.write(f'{{"tick": {tick}, "total_lag": {lag}}}\n')
    print(
        f"{scenario.name}: {result.reassign_count} reassignments over "
        f"{scenario.ticks} ticks, final lag {result.lag_series[-1]:.0f} bytes"
    )
    print(f"wrote {out / 'events.jsonl'} and {out / 'lag.jsonl'}")
    problems = result.safety_problems
    if problems:
        for line in problems[:10]:
            print(f"violation: {line}", file=sys.stderr)
        if len(problems) > 10:
            print(f"... and {len(problems) - 10} more", file=sys.stderr)
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

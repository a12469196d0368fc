"""Benchmark harness: run packing algorithms over streams and aggregate.

Every algorithm is evaluated independently on the same stream: it sees the
measurements in order, always chaining from its own previous assignment.
Per iteration the harness records the bin count and the rscore of the
transition.  Aggregation turns those records into per-delta cbs and average
rscore tables and flags the Pareto-optimal algorithms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IncompleteRecords, ParseError
from .metrics import CostPoint, IterationRecord, avg_rscore, cbs, pareto_front, rebalanced_set, rscore
from .model import DEFAULT_CAPACITY, Algorithm, Assignment, Measurement
from .packing import lower_bound, pack_classic, pack_modified
from .streams import InitMode, Stream, StreamSpec, generate

__all__ = [
    "ExperimentPlan",
    "BenchRecord",
    "SummaryRow",
    "ExperimentResult",
    "run_stream",
    "run_plan",
    "summarize",
    "write_records_csv",
    "write_summary_csv",
    "read_summary_csv",
]

DEFAULT_DELTAS = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
DEFAULT_SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentPlan:
    """Cartesian product of deltas, seeds and algorithms over one stream shape."""

    deltas: tuple[float, ...] = DEFAULT_DELTAS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    algorithms: tuple[Algorithm, ...] = tuple(Algorithm)
    stream_length: int = 500
    partitions: int = 100
    capacity: float = DEFAULT_CAPACITY
    init: InitMode = InitMode.UNIFORM

    def validate(self) -> None:
        if not self.deltas or not self.seeds or not self.algorithms:
            raise ValueError("plan needs at least one delta, seed and algorithm")


@dataclass(frozen=True)
class BenchRecord:
    """One row of records.csv."""

    delta: float
    seed: int
    algorithm: Algorithm
    iteration: int
    bins: int
    rscore: float


@dataclass(frozen=True)
class SummaryRow:
    """One row of summary.csv."""

    delta: float
    algorithm: Algorithm
    cbs: float
    avg_rscore: float
    on_pareto: bool


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[BenchRecord, ...] = field(repr=False)
    summary: tuple[SummaryRow, ...]


def run_stream(
    algorithms: Iterable[Algorithm],
    stream: Stream,
    capacity: float | None = None,
) -> list[IterationRecord]:
    """Evaluate each algorithm over `stream`, independently of the others.

    Iteration 0 packs from scratch (empty previous assignment, everything
    unassigned) and scores 0 by convention.  Iteration i chains from the
    same algorithm's iteration i-1 output; its rscore charges the current
    speed of every partition whose owner changed.
    """
    c = stream.spec.capacity if capacity is None else capacity
    out: list[IterationRecord] = []
    for algo in algorithms:
        prev = Assignment.empty()
        for i, m in enumerate(stream.measurements):
            if algo.modified:
                nxt = pack_modified(
                    algo, m, prev, stream.partition_ids if i == 0 else (), c
                )
            else:
                nxt = pack_classic(algo, m, prev, c)
            score = 0.0 if i == 0 else rscore(rebalanced_set(prev, nxt), m, c)
            out.append(IterationRecord(i, algo, nxt.bin_count, score))
            prev = nxt
    return out


def run_plan(plan: ExperimentPlan) -> ExperimentResult:
    """Run the full plan and aggregate.  Deterministic for a given plan."""
    plan.validate()
    records: list[BenchRecord] = []
    for delta in plan.deltas:
        for seed in plan.seeds:
            stream = generate(
                StreamSpec(
                    partitions=plan.partitions,
                    length=plan.stream_length,
                    delta=delta,
                    capacity=plan.capacity,
                    init=plan.init,
                    seed=seed,
                )
            )
            for rec in run_stream(plan.algorithms, stream, plan.capacity):
                records.append(
                    BenchRecord(
                        delta, seed, rec.algorithm, rec.iteration, rec.bins, rec.rscore
                    )
                )
    return ExperimentResult(
        records=tuple(records),
        summary=tuple(summarize(records, plan.algorithms)),
    )


def summarize(
    records: Iterable[BenchRecord],
    algorithms: Sequence[Algorithm],
) -> list[SummaryRow]:
    """Aggregate bench records into one row per (delta, algorithm).

    cbs is computed per (delta, seed) with the per-iteration minimum taken
    over `algorithms`, then averaged over seeds; average rscore likewise.
    The Pareto front is computed per delta on the seed-averaged points.
    Raises IncompleteRecords when any (delta, seed, algorithm) series is
    missing or ragged.
    """
    algos = list(algorithms)
    by_run: dict[tuple[float, int], dict[Algorithm, list[BenchRecord]]] = {}
    for rec in records:
        by_run.setdefault((rec.delta, rec.seed), {}).setdefault(
            rec.algorithm, []
        ).append(rec)

    if not by_run:
        raise IncompleteRecords("no records supplied")

    # per (delta, seed, algorithm) -> (cbs, avg rscore)
    per_seed: dict[tuple[float, int, Algorithm], tuple[float, float]] = {}
    for (delta, seed), groups in sorted(by_run.items()):
        counts: dict[Algorithm, list[int]] = {}
        scores: dict[Algorithm, list[float]] = {}
        length = None
        for algo in algos:
            series = sorted(groups.get(algo, []), key=lambda r: r.iteration)
            if not series:
                raise IncompleteRecords(
                    f"no records for {algo.label} at delta={delta} seed={seed}"
                )
            if [r.iteration for r in series] != list(range(len(series))):
                raise IncompleteRecords(
                    f"gaps in iterations for {algo.label} at delta={delta} seed={seed}"
                )
            if length is None:
                length = len(series)
            elif len(series) != length:
                raise IncompleteRecords(
                    f"ragged series for {algo.label} at delta={delta} seed={seed}"
                )
            counts[algo] = [r.bins for r in series]
            scores[algo] = [r.rscore for r in series]
        scored = cbs(counts)
        for algo in algos:
            per_seed[(delta, seed, algo)] = (scored[algo], avg_rscore(scores[algo]))

    deltas = sorted({d for d, _ in by_run})
    seeds = sorted({s for _, s in by_run})
    rows: list[SummaryRow] = []
    for delta in deltas:
        points = []
        for algo in algos:
            vals = [per_seed[(delta, seed, algo)] for seed in seeds]
            points.append(
                CostPoint(
                    algo,
                    sum(v[0] for v in vals) / len(vals),
                    sum(v[1] for v in vals) / len(vals),
                )
            )
        front = {(p.cbs, p.avg_rscore) for p in pareto_front(points)}
        for p in points:
            rows.append(
                SummaryRow(
                    delta,
                    p.algorithm,
                    p.cbs,
                    p.avg_rscore,
                    (p.cbs, p.avg_rscore) in front,
                )
            )
    return rows


def write_records_csv(records: Iterable[BenchRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "seed", "algorithm", "iteration", "bins", "rscore"])
        for r in records:
            w.writerow(
                [r.delta, r.seed, r.algorithm.label, r.iteration, r.bins, r.rscore]
            )


def write_summary_csv(rows: Iterable[SummaryRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "algorithm", "cbs", "avg_rscore", "on_pareto"])
        for r in rows:
            w.writerow(
                [r.delta, r.algorithm.label, r.cbs, r.avg_rscore, int(r.on_pareto)]
            )


def read_summary_csv(path: str | Path) -> list[SummaryRow]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = []
            for line in reader:
                rows.append(
                    SummaryRow(
                        delta=float(line["delta"]),
                        algorithm=Algorithm.parse(line["algorithm"]),
                        cbs=float(line["cbs"]),
                        avg_rscore=float(line["avg_rscore"]),
                        on_pareto=bool(int(line["on_pareto"])),
                    )
                )
    except OSError as exc:
        raise ParseError(f"cannot read summary file {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed summary file {path}: {exc}") from exc
    return rows

"""Rebalance cost and bin usage metrics.

A rebalance interrupts consumption, so the partitions that change owner
between two assignments carry a cost proportional to their current write
speed.  These helpers quantify that cost (rscore), the relative bin usage of
competing algorithms (cbs), and the trade-off frontier between the two
(pareto_front).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence, TypeVar

from .errors import (
    EmptyList,
    EmptySet,
    InconsistentInput,
    LengthMismatch,
    UnknownPartition,
)
from .model import Algorithm, Assignment, Measurement

__all__ = [
    "IterationRecord",
    "CostPoint",
    "rebalanced_set",
    "rscore",
    "cbs",
    "avg_rscore",
    "pareto_front",
]

K = TypeVar("K", bound=Hashable)


@dataclass(frozen=True)
class IterationRecord:
    """One algorithm's outcome for one stream iteration."""

    iteration: int
    algorithm: Algorithm
    bins: int
    rscore: float


@dataclass(frozen=True)
class CostPoint:
    """An algorithm's position in (bin usage, rebalance cost) space."""

    algorithm: Algorithm
    cbs: float
    avg_rscore: float


def rebalanced_set(prev: Assignment, next: Assignment) -> set[str]:
    """Partitions assigned in both configurations whose owner changed.

    Partitions appearing only in one side are excluded: nothing has to stop
    consuming for a partition that is brand new or gone.
    """
    np = next.placement
    return {p for p, k in prev.placement.items() if p in np and np[p] != k}


def rscore(rebalanced: Iterable[str], m: Measurement, c: float) -> float:
    """Normalized rate at which data piles up while `rebalanced` moves.

    Sums the current write speed of every rebalanced partition and divides
    by the consumer capacity `c`.  An empty set costs exactly 0.0.
    """
    if not c > 0:
        raise ValueError(f"capacity must be positive, got {c!r}")
    total = 0.0
    speeds = m.speeds
    for p in rebalanced:
        if p not in speeds:
            raise UnknownPartition(p)
        total += speeds[p]
    return total / c


def cbs(bin_counts: Mapping[K, Sequence[int]]) -> dict[K, float]:
    """Cardinal bin score: mean relative excess over the per-iteration best.

    For each iteration the minimum bin count over the supplied algorithms is
    the baseline; an algorithm's score is the average of
    (own − baseline) / baseline across iterations.  The per-iteration winner
    therefore contributes 0, and a lone algorithm scores 0 everywhere.
    """
    if not bin_counts:
        raise EmptySet("cbs needs at least one algorithm")
    lengths = {len(v) for v in bin_counts.values()}
    if len(lengths) != 1:
        raise LengthMismatch(f"bin count lists differ in length: {sorted(lengths)}")
    n = lengths.pop()
    if n == 0:
        raise EmptyList("bin count lists must have at least one entry")
    series = list(bin_counts.values())
    mins = [min(col) for col in zip(*series)]
    for lo in mins:
        if lo < 1:
            raise InconsistentInput(f"bin counts must be >= 1, found {lo}")
    return {
        a: math.fsum((counts[i] - mins[i]) / mins[i] for i in range(n)) / n
        for a, counts in bin_counts.items()
    }


def avg_rscore(rscores: Sequence[float]) -> float:
    """Arithmetic mean of per-iteration rscores."""
    if not rscores:
        raise EmptyList("avg_rscore needs at least one value")
    return math.fsum(rscores) / len(rscores)


def pareto_front(points: Sequence[CostPoint]) -> list[CostPoint]:
    """Non-dominated subset of `points`, sorted by ascending cbs.

    q dominates p when q is no worse on both axes and strictly better on at
    least one.  Points with identical coordinates never dominate each other,
    so co-located points are all retained.
    """
    if not points:
        raise EmptyList("pareto_front needs at least one point")
    front = [
        p
        for p in points
        if not any(
            q.cbs <= p.cbs
            and q.avg_rscore <= p.avg_rscore
            and (q.cbs < p.cbs or q.avg_rscore < p.avg_rscore)
            for q in points
        )
    ]
    front.sort(key=lambda p: (p.cbs, p.avg_rscore, p.algorithm.label))
    return front

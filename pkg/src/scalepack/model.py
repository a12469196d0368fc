"""Core value types: partitions, measurements, assignments, algorithm ids.

Partition ids are opaque strings (a topic-partition pair rendered as
"topic:index").  Consumer indices are non-negative ints and double as bin
indices: bin k belongs to consumer k.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .errors import UnknownPartition

#: Default consumer capacity in bytes/s.
DEFAULT_CAPACITY = 2_300_000.0


class Fit(enum.Enum):
    NEXT = "next"
    FIRST = "first"
    BEST = "best"
    WORST = "worst"


class Rank(enum.Enum):
    """How the stateful heuristics order consumers before repacking."""

    #: by total assigned write speed, descending
    CUMULATIVE = "cumulative"
    #: by the largest single assigned partition speed, descending
    PEAK = "peak"


class Algorithm(enum.Enum):
    """All supported packing heuristics.

    The classic family treats every iteration as an independent instance;
    the modified family (M prefix) reuses the previous assignment to keep
    partitions near their current consumer.
    """

    NF = ("NF", Fit.NEXT, False, None)
    NFD = ("NFD", Fit.NEXT, True, None)
    FF = ("FF", Fit.FIRST, False, None)
    FFD = ("FFD", Fit.FIRST, True, None)
    BF = ("BF", Fit.BEST, False, None)
    BFD = ("BFD", Fit.BEST, True, None)
    WF = ("WF", Fit.WORST, False, None)
    WFD = ("WFD", Fit.WORST, True, None)
    MWF = ("MWF", Fit.WORST, True, Rank.CUMULATIVE)
    MBF = ("MBF", Fit.BEST, True, Rank.CUMULATIVE)
    MWFP = ("MWFP", Fit.WORST, True, Rank.PEAK)
    MBFP = ("MBFP", Fit.BEST, True, Rank.PEAK)

    def __init__(self, label: str, fit: Fit, decreasing: bool, rank: Rank | None):
        self.label = label
        self.fit = fit
        self.decreasing = decreasing
        self.rank = rank

    @property
    def modified(self) -> bool:
        return self.rank is not None

    @property
    def classic(self) -> bool:
        return self.rank is None

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown algorithm {name!r}") from None


CLASSIC_ALGORITHMS = tuple(a for a in Algorithm if a.classic)
MODIFIED_ALGORITHMS = tuple(a for a in Algorithm if a.modified)


@dataclass(frozen=True)
class Measurement:
    """One monitor snapshot: write speed in bytes/s per partition.

    Speeds are non-negative; the packing entry points validate this on the
    single pass they already make over the items.
    """

    speeds: Mapping[str, float]
    taken_at: float = 0.0

    def __len__(self) -> int:
        return len(self.speeds)


@dataclass(frozen=True)
class Assignment:
    """A packing outcome: partition id -> consumer (bin) index.

    Treated as immutable once built.  Bin count is the number of distinct
    indices in use; indices need not be contiguous because bins inherit
    labels from the previous configuration.
    """

    placement: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "Assignment":
        return cls({})

    @property
    def consumers(self) -> frozenset[int]:
        return frozenset(self.placement.values())

    @property
    def bin_count(self) -> int:
        return len(set(self.placement.values()))

    def by_consumer(self) -> dict[int, list[str]]:
        """Group partition ids by consumer, ids sorted for determinism."""
        groups: dict[int, list[str]] = {}
        for p in sorted(self.placement):
            groups.setdefault(self.placement[p], []).append(p)
        return groups

    def loads(self, m: Measurement) -> dict[int, float]:
        """Per-consumer total speed under measurement `m`."""
        out: dict[int, float] = {}
        speeds = m.speeds
        for p, k in self.placement.items():
            if p not in speeds:
                raise UnknownPartition(f"assignment covers {p!r} but the measurement does not")
            out[k] = out.get(k, 0.0) + speeds[p]
        return out

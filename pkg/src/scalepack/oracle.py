"""Exhaustive reference packer used by the test suite.

Finds the true minimum bin count by branch and bound over all ways of
grouping items into bins.  Deliberately independent of the heuristics in
`packing`: it shares no placement code with them, so it can serve as an
oracle for their approximation bounds.
"""

from __future__ import annotations

import math

from .errors import OversizeItem, TooLarge
from .model import Measurement
from .packing import _check_capacity

#: Above this many items the search space is too big to enumerate.
MAX_ITEMS = 12


def exact_pack(m: Measurement, capacity: float) -> int:
    """Minimum number of bins that can hold every item of `m`.

    Raises TooLarge for more than MAX_ITEMS items and OversizeItem (via the
    size check) when an item exceeds capacity.
    """
    _check_capacity(capacity)
    sizes = sorted(m.speeds.values(), reverse=True)
    if len(sizes) > MAX_ITEMS:
        raise TooLarge(f"exact search limited to {MAX_ITEMS} items, got {len(sizes)}")
    if not sizes:
        return 0
    for s in sizes:
        if s < 0:
            raise ValueError(f"negative item size {s!r}")
        if s > capacity:
            raise OversizeItem("<oracle>", s, capacity)

    n = len(sizes)
    total = math.fsum(sizes)
    floor_bins = max(1, math.ceil(total / capacity))
    best = n  # one bin per item always works

    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + sizes[i]

    bins: list[float] = []

    def search(i: int) -> None:
        nonlocal best
        if best == floor_bins:
            return
        if i == n:
            best = min(best, len(bins))
            return
        # Even spreading the rest perfectly cannot beat `best` from here.
        needed = math.ceil((suffix[i] - sum(capacity - b for b in bins)) / capacity)
        if len(bins) + max(0, needed) >= best:
            return
        s = sizes[i]
        seen: set[float] = set()
        for j, load in enumerate(bins):
            # Bins with equal load are interchangeable for the remainder.
            if load + s <= capacity and load not in seen:
                seen.add(load)
                bins[j] = load + s
                search(i + 1)
                bins[j] = load
        if len(bins) + 1 < best:
            bins.append(s)
            search(i + 1)
            bins.pop()

    search(0)
    return best

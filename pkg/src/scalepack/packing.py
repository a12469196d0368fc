"""Bin packing heuristics over partition write speeds.

Two families share one bin model: bins are consumers with a fixed byte/s
capacity, items are partitions sized by their current measured write speed.

* ``pack_classic`` runs the textbook any-fit heuristics (next, first, best,
  worst fit, each optionally on items sorted by decreasing size).  They are
  stateless except for one adaptation: when no open bin fits an item, the
  new bin reuses the item's previous consumer index when that index is still
  free, so an unchanged packing keeps its labels instead of being renumbered.

* ``pack_modified`` reuses the previous assignment as its starting point and
  only moves partitions when consolidation or overflow requires it.  See the
  function docstring for the exact three-phase procedure.

Determinism: classic online variants process items in ascending partition id;
decreasing variants sort by (speed desc, id asc).  All fit ties resolve to the
lowest bin index.  Two calls with equal inputs return equal assignments.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from typing import Iterable, Mapping

from .errors import InconsistentInput, OversizeItem, PackingError
from .model import Algorithm, Assignment, Fit, Measurement, Rank

__all__ = ["pack_classic", "pack_modified", "lower_bound"]


def lower_bound(m: Measurement, capacity: float) -> int:
    """Fewest bins any packing of `m` could use: ceil(total speed / capacity)."""
    _check_capacity(capacity)
    if not m.speeds:
        return 0
    return math.ceil(math.fsum(m.speeds.values()) / capacity)


def _check_capacity(capacity: float) -> None:
    if not capacity > 0:
        raise PackingError(f"capacity must be positive, got {capacity!r}")


def _checked_speeds(m: Measurement, capacity: float) -> dict[str, float]:
    speeds = dict(m.speeds)
    for p, s in speeds.items():
        if s < 0:
            raise PackingError(f"partition {p!r} has negative speed {s!r}")
        if s > capacity:
            raise OversizeItem(p, s, capacity)
    return speeds


def _fresh_index(created: set[int], prev_owner: int | None) -> int:
    # Bin-creation adaptation: reuse the item's previous consumer index if
    # that bin does not exist yet, otherwise take the lowest free index.
    if prev_owner is not None and prev_owner not in created:
        return prev_owner
    k = 0
    while k in created:
        k += 1
    return k


def pack_classic(
    algorithm: Algorithm,
    m: Measurement,
    prev: Assignment,
    capacity: float,
) -> Assignment:
    """Pack every partition of `m` with a classic any-fit heuristic.

    `prev` only influences the labels of newly created bins (see module
    docstring); it never constrains where items go.  Raises OversizeItem if
    any speed exceeds `capacity`.
    """
    if not algorithm.classic:
        raise PackingError(f"{algorithm.label} is not a classic heuristic")
    _check_capacity(capacity)
    speeds = _checked_speeds(m, capacity)
    if not speeds:
        return Assignment.empty()

    if algorithm.decreasing:
        order = sorted(speeds, key=lambda p: (-speeds[p], p))
    else:
        order = sorted(speeds)

    prev_placement = prev.placement
    placement: dict[str, int] = {}
    created: set[int] = set()

    if algorithm.fit is Fit.NEXT:
        # Single open bin: the one created most recently.
        open_idx = -1
        open_load = 0.0
        have_open = False
        for p in order:
            s = speeds[p]
            if have_open and open_load + s <= capacity:
                open_load += s
            else:
                open_idx = _fresh_index(created, prev_placement.get(p))
                created.add(open_idx)
                open_load = s
                have_open = True
            placement[p] = open_idx
        return Assignment(placement)

    # All created bins stay open.  Parallel lists sorted by bin index keep
    # first-fit scans and tie-breaks (lowest index) in one pass.
    idxs: list[int] = []
    loads: list[float] = []
    fit = algorithm.fit
    for p in order:
        s = speeds[p]
        chosen = -1
        if fit is Fit.FIRST:
            for i, ld in enumerate(loads):
                if ld + s <= capacity:
                    chosen = i
                    break
        elif fit is Fit.BEST:
            best = math.inf
            for i, ld in enumerate(loads):
                if ld + s <= capacity and capacity - ld < best:
                    best = capacity - ld
                    chosen = i
        else:  # worst fit
            best = -math.inf
            for i, ld in enumerate(loads):
                if ld + s <= capacity and capacity - ld > best:
                    best = capacity - ld
                    chosen = i
        if chosen >= 0:
            loads[chosen] += s
            placement[p] = idxs[chosen]
        else:
            j = _fresh_index(created, prev_placement.get(p))
            created.add(j)
            pos = bisect_left(idxs, j)
            idxs.insert(pos, j)
            loads.insert(pos, s)
            placement[p] = j
    return Assignment(placement)


def pack_modified(
    algorithm: Algorithm,
    m: Measurement,
    prev: Assignment,
    unassigned: Iterable[str],
    capacity: float,
) -> Assignment:
    """Repack `m` starting from the previous assignment.

    Preconditions: `prev`'s partitions and `unassigned` are disjoint and
    together cover exactly the ids of `m` (InconsistentInput otherwise); no
    speed exceeds `capacity` (OversizeItem).

    Three phases, in order:

    1. Consumers of `prev` are visited by descending total assigned speed
       (MWF/MBF) or descending largest single partition speed (MWFP/MBFP),
       ties to the lower index.  For each consumer its partitions are
       offered smallest-first to the bins created so far using the fit rule
       (best fit for MBF/MBFP, worst fit for MWF/MWFP).  The transfer is
       atomic: if every partition finds a bin the consumer dissolves, and if
       any partition fits nowhere the trial placements are rolled back and
       the consumer keeps everything it had.  Partial dissolution would leak
       single partitions between surviving consumers on every repack, so an
       unchanged workload would never reach a fixed point.

    2. A consumer that survived phase 1 gets its own bin back and refills it
       largest-first; the first overflow sends that partition and every
       smaller one to the unassigned pool.

    3. The pool (input `unassigned` plus overflow), sorted by descending
       speed, is placed by the same fit rule; when nothing fits, a bin is
       created with the partition's previous index if free, else the lowest
       free index.

    A consumer whose partitions all fit elsewhere in phase 1 is dropped,
    which is how the consumer count scales down.

    The three phases repeat on their own output until a pass changes
    nothing, so the returned assignment is a fixed point: repacking it with
    the same measurement returns it unchanged.
    """
    if not algorithm.modified:
        raise PackingError(f"{algorithm.label} is not a stateful heuristic")
    _check_capacity(capacity)
    speeds = _checked_speeds(m, capacity)

    prev_placement = prev.placement
    pool = list(unassigned)
    covered = set(prev_placement)
    covered.update(pool)
    if len(pool) + len(prev_placement) != len(covered):
        raise InconsistentInput("unassigned overlaps the previous assignment")
    if covered != speeds.keys():
        raise InconsistentInput(
            "previous assignment plus unassigned must cover the measurement exactly"
        )

    # One pass can unlock another: a consumer that absorbs partitions moves
    # up the processing order, and on the next pass consumers scanned after
    # it may suddenly dissolve into it.  Repeating the pass until nothing
    # changes settles that.  Termination is guaranteed because a follow-up
    # pass on a valid assignment can only dissolve whole consumers (the fill
    # step cannot overflow when every bin already fits), so each extra pass
    # strictly reduces the bin count or stops.
    out = _modified_pass(algorithm, speeds, prev_placement, pool, capacity)
    for _ in range(len(set(prev_placement.values())) + 1):
        again = _modified_pass(algorithm, speeds, out, [], capacity)
        if again == out:
            return Assignment(out)
        out = again
    raise PackingError("repacking failed to reach a fixed point")


def _modified_pass(
    algorithm: Algorithm,
    speeds: dict[str, float],
    prev_placement: Mapping[str, int],
    unassigned: list[str],
    capacity: float,
) -> dict[str, int]:
    pool = list(unassigned)
    groups: dict[int, list[str]] = {}
    for p, k in prev_placement.items():
        groups.setdefault(k, []).append(p)

    if algorithm.rank is Rank.CUMULATIVE:
        def metric(parts: list[str]) -> float:
            return sum(speeds[p] for p in parts)
    else:
        def metric(parts: list[str]) -> float:
            return max(speeds[p] for p in parts)

    ranked = sorted(groups.items(), key=lambda kv: (-metric(kv[1]), kv[0]))

    best_fit = algorithm.fit is Fit.BEST
    idxs: list[int] = []
    loads: list[float] = []
    created: set[int] = set()
    placement: dict[str, int] = {}

    def choose(s: float) -> int:
        """Position of the fit-rule bin for size s among created bins, -1 if none."""
        chosen = -1
        if best_fit:
            best = math.inf
            for i, ld in enumerate(loads):
                if ld + s <= capacity and capacity - ld < best:
                    best = capacity - ld
                    chosen = i
        else:
            best = -math.inf
            for i, ld in enumerate(loads):
                if ld + s <= capacity and capacity - ld > best:
                    best = capacity - ld
                    chosen = i
        return chosen

    for k, parts in ranked:
        pset = sorted(parts, key=lambda p: (-speeds[p], p))
        n = len(pset)
        # Phase 1: trial dissolution, small end first, all or nothing.
        # Rolling back via subtraction would leave floating point dust on
        # the bins, so the loads are snapshotted and restored instead.
        saved = loads[:]
        trial: list[int] = []
        for t in range(n - 1, -1, -1):
            i = choose(speeds[pset[t]])
            if i < 0:
                break
            loads[i] += speeds[pset[t]]
            trial.append(i)
        if len(trial) == n:
            for t, i in enumerate(trial):
                placement[pset[n - 1 - t]] = idxs[i]
            continue
        loads[:] = saved
        # Phase 2: recreate this consumer's bin, fill from the large end.
        created.add(k)
        pos = bisect_left(idxs, k)
        idxs.insert(pos, k)
        loads.insert(pos, 0.0)
        load = 0.0
        j = 0
        while j < n:
            s = speeds[pset[j]]
            if load + s > capacity:
                break
            load += s
            placement[pset[j]] = k
            j += 1
        loads[pos] = load
        pool.extend(pset[j:n])

    # Phase 3: leftovers, largest first.
    pool.sort(key=lambda p: (-speeds[p], p))
    for p in pool:
        s = speeds[p]
        i = choose(s)
        if i >= 0:
            loads[i] += s
            placement[p] = idxs[i]
        else:
            j = _fresh_index(created, prev_placement.get(p))
            created.add(j)
            pos = bisect_left(idxs, j)
            idxs.insert(pos, j)
            loads.insert(pos, s)
            placement[p] = j
    return placement

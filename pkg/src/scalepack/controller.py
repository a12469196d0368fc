"""Assignment controller: watch, decide, rebalance, verify.

The control loop cycles through four phases.  The sentinel watches monitor
output and decides whether the current assignment still holds up.  When it
does not, the configured packing algorithm computes a desired assignment,
the group-management phase turns the difference into control traffic, and
the synchronize phase re-reads ground truth from the consumers themselves.

Safety rule enforced throughout: a partition's new owner never receives its
start message before the old owner acknowledged the stop.  The event log
records every message and acknowledgment so the rule is checkable after the
fact with `verify_event_log`.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .broker import Ack, ControlMessage, MessageKind, SimBrokerPort
from .errors import AckTimeout
from .model import Algorithm, Assignment, Measurement
from .packing import lower_bound, pack_classic, pack_modified

__all__ = [
    "Decision",
    "SentinelPolicy",
    "Sentinel",
    "GroupState",
    "StateDiff",
    "LogEvent",
    "compute_diff",
    "apply_diff",
    "synchronize",
    "control_loop",
    "verify_event_log",
    "write_event_log",
]

ACK_TIMEOUT_TICKS = 30


class Decision(enum.Enum):
    HOLD = "hold"
    REASSIGN = "reassign"


@dataclass(frozen=True)
class SentinelPolicy:
    """When to recompute the assignment.

    Three independent triggers: a partition with no owner, a consumer whose
    measured load exceeds capacity (if `overload_enabled`), and a sustained
    opportunity to scale down.  The last one is hysteretic: the lower bound
    must stay at least `scale_down_margin` below the live consumer count for
    `hysteresis_cycles` consecutive checks before it fires, so a transient
    dip never triggers a rebalance.
    """

    overload_enabled: bool = True
    scale_down_margin: int = 1
    hysteresis_cycles: int = 30

    def validate(self) -> None:
        if self.scale_down_margin < 1:
            raise ValueError("scale_down_margin must be >= 1")
        if self.hysteresis_cycles < 1:
            raise ValueError("hysteresis_cycles must be >= 1")


@dataclass
class GroupState:
    """The controller's picture of the consumer group."""

    assignment: Assignment
    live_consumers: set[int]
    pending_acks: dict[str, MessageKind] = field(default_factory=dict)


class Sentinel:
    """Holds the hysteresis streak between calls."""

    def __init__(self, policy: SentinelPolicy) -> None:
        policy.validate()
        self.policy = policy
        self.streak = 0

    def step(self, state: GroupState, m: Measurement, c: float) -> Decision:
        placement = state.assignment.placement
        if any(p not in placement for p in m.speeds):
            self.streak = 0
            return Decision.REASSIGN

        if self.policy.overload_enabled:
            loads: dict[int, float] = {}
            for p, k in placement.items():
                loads[k] = loads.get(k, 0.0) + m.speeds.get(p, 0.0)
            if any(load > c for load in loads.values()):
                self.streak = 0
                return Decision.REASSIGN

        if lower_bound(m, c) <= len(state.live_consumers) - self.policy.scale_down_margin:
            self.streak += 1
            if self.streak >= self.policy.hysteresis_cycles:
                self.streak = 0
                return Decision.REASSIGN
        else:
            self.streak = 0
        return Decision.HOLD


@dataclass(frozen=True)
class StateDiff:
    """What has to change to get from the current group to the desired one."""

    create: tuple[int, ...]
    stop: dict[int, frozenset[str]]
    start: dict[int, frozenset[str]]
    decommission: tuple[int, ...]

    @property
    def empty(self) -> bool:
        return not (self.create or self.stop or self.start or self.decommission)


@dataclass(frozen=True)
class LogEvent:
    tick: int
    event: str
    consumer: int | None = None
    partitions: tuple[str, ...] = ()
    token: str | None = None


def compute_diff(current: GroupState, desired: Assignment) -> StateDiff:
    """Set differences between the current and desired assignments.

    A partition whose owner is unchanged appears in neither stop nor start.
    Consumers present in `desired` but not live must be created; live
    consumers with nothing desired are decommissioned.
    """
    cur = current.assignment.placement
    des = desired.placement
    desired_consumers = set(des.values())
    create = tuple(sorted(desired_consumers - current.live_consumers))

    stop: dict[int, set[str]] = {}
    start: dict[int, set[str]] = {}
    for p, k in cur.items():
        if des.get(p) != k:
            stop.setdefault(k, set()).add(p)
    for p, k in des.items():
        if cur.get(p) != k:
            start.setdefault(k, set()).add(p)

    decommission = tuple(
        sorted(k for k in current.live_consumers if k not in desired_consumers)
    )
    return StateDiff(
        create=create,
        stop={k: frozenset(v) for k, v in stop.items()},
        start={k: frozenset(v) for k, v in start.items()},
        decommission=decommission,
    )


class _TokenSource:
    def __init__(self) -> None:
        self._it = itertools.count()

    def __call__(self, prefix: str) -> str:
        return f"{prefix}-{next(self._it)}"


def apply_diff(
    diff: StateDiff,
    port: SimBrokerPort,
    state: GroupState,
    ack_timeout_ticks: int = ACK_TIMEOUT_TICKS,
    tokens: Callable[[str], str] | None = None,
    log: list[LogEvent] | None = None,
) -> list[LogEvent]:
    """Drive the group to the diff'd state, advancing the world as needed.

    Order of operations: create consumers; send every stop; as each stop is
    acknowledged, send the start for the partitions that were waiting on it;
    starts for partitions nobody owned go out immediately; once every stop
    and start is acknowledged, send decommissions and wait for their acks.
    An acknowledgment that fails to arrive within `ack_timeout_ticks` raises
    AckTimeout; the caller is expected to resynchronize.

    Returns the event log (appended to `log` when given).  Unknown ack
    tokens are ignored: a resynchronized controller may legitimately receive
    acks for traffic it no longer tracks.
    """
    events = log if log is not None else []
    token = tokens or _TokenSource()

    def emit(event: str, consumer: int | None, parts: Iterable[str] = (), tok: str | None = None) -> None:
        events.append(LogEvent(port.now(), event, consumer, tuple(sorted(parts)), tok))

    for k in diff.create:
        port.create_consumer(k)
        state.live_consumers.add(k)
        emit("create", k)

    # start messages wait on the stop ack of their partitions' old owner
    new_owner: dict[str, int] = {}
    for k, parts in diff.start.items():
        for p in parts:
            new_owner[p] = k

    stopped = {p for parts in diff.stop.values() for p in parts}
    waiting: dict[str, tuple[int, frozenset[str]]] = {}
    deadline: dict[str, int] = {}

    for k in sorted(diff.stop):
        parts = diff.stop[k]
        tok = token("stop")
        port.send_control(k, ControlMessage(MessageKind.STOP, parts, tok))
        waiting[tok] = (k, parts)
        deadline[tok] = port.now() + ack_timeout_ticks
        state.pending_acks[tok] = MessageKind.STOP
        emit("stop", k, parts, tok)

    def send_start(k: int, parts: frozenset[str]) -> None:
        tok = token("start")
        port.send_control(k, ControlMessage(MessageKind.START, parts, tok))
        waiting[tok] = (k, parts)
        deadline[tok] = port.now() + ack_timeout_ticks
        state.pending_acks[tok] = MessageKind.START
        emit("start", k, parts, tok)

    # never-owned partitions have no stop to wait for
    for k in sorted(diff.start):
        fresh = frozenset(p for p in diff.start[k] if p not in stopped)
        if fresh:
            send_start(k, fresh)

    def handle(ack: Ack) -> None:
        if ack.token not in waiting:
            return
        k, parts = waiting.pop(ack.token)
        kind = state.pending_acks.pop(ack.token)
        deadline.pop(ack.token)
        emit(f"{kind.value}-ack", k, parts, ack.token)
        if kind is MessageKind.STOP:
            released: dict[int, set[str]] = {}
            for p in parts:
                if p in new_owner:
                    released.setdefault(new_owner[p], set()).add(p)
            for nk in sorted(released):
                send_start(nk, frozenset(released[nk]))
        elif kind is MessageKind.DECOMMISSION:
            port.delete_consumer(k)
            state.live_consumers.discard(k)
            emit("delete", k)

    def wait_for(done: Callable[[], bool]) -> None:
        while not done():
            for ack in port.poll_acks():
                handle(ack)
            if done():
                return
            late = [t for t, d in deadline.items() if port.now() >= d]
            if late:
                tok = min(late)
                k, _ = waiting[tok]
                raise AckTimeout(k, tok)
            port.advance(1)

    def transfers_done() -> bool:
        return not any(
            kind in (MessageKind.STOP, MessageKind.START)
            for kind in state.pending_acks.values()
        )

    wait_for(transfers_done)

    # every hand-off is acked: fold the diff into the perceived assignment
    placement = dict(state.assignment.placement)
    for parts in diff.stop.values():
        for p in parts:
            placement.pop(p, None)
    for k, parts in diff.start.items():
        for p in parts:
            placement[p] = k
    state.assignment = Assignment(placement)

    for k in diff.decommission:
        tok = token("decom")
        port.send_control(k, ControlMessage(MessageKind.DECOMMISSION, frozenset(), tok))
        waiting[tok] = (k, frozenset())
        deadline[tok] = port.now() + ack_timeout_ticks
        state.pending_acks[tok] = MessageKind.DECOMMISSION
        emit("decommission", k, (), tok)

    wait_for(lambda: not state.pending_acks)
    return events


def synchronize(state: GroupState, port: SimBrokerPort) -> GroupState:
    """Rebuild the perceived state from the consumers' own reports.

    Consumer reports win every disagreement.  Unreachable consumers are
    dropped from the live set and their partitions become unassigned (they
    simply vanish from the assignment; the sentinel will notice the gap).
    """
    placement: dict[str, int] = {}
    live: set[int] = set()
    for k in sorted(state.live_consumers):
        reported = port.query_assignment(k)
        if reported is None:
            continue
        live.add(k)
        for p in reported:
            placement[p] = k
    return GroupState(
        assignment=Assignment(placement),
        live_consumers=live,
        pending_acks={},
    )


def _desired_assignment(
    algorithm: Algorithm,
    m: Measurement,
    state: GroupState,
    c: float,
) -> Assignment:
    prev_placement = {
        p: k for p, k in state.assignment.placement.items() if p in m.speeds
    }
    prev = Assignment(prev_placement)
    if algorithm.modified:
        unassigned = {p for p in m.speeds if p not in prev_placement}
        return pack_modified(algorithm, m, prev, unassigned, c)
    return pack_classic(algorithm, m, prev, c)


def control_loop(
    algorithm: Algorithm,
    policy: SentinelPolicy,
    port: SimBrokerPort,
    ticks: int,
    capacity: float,
    ack_timeout_ticks: int = ACK_TIMEOUT_TICKS,
    state: GroupState | None = None,
) -> tuple[GroupState, list[LogEvent]]:
    """Run the four-phase loop until the world reaches the tick budget.

    Each tick: read the monitor, let the sentinel decide, and on a reassign
    decision pack a desired assignment, apply the diff (which advances the
    world while it waits on acks), then synchronize.  An AckTimeout during
    application falls through to synchronize, matching the recovery story:
    re-read ground truth rather than trust half-applied bookkeeping.
    """
    if state is None:
        # sim-only convenience: discover the group from the world itself
        live = {
            k for k, cons in port.world.consumers.items() if not cons.decommissioned
        }
        state = synchronize(GroupState(Assignment.empty(), live), port)
    sentinel = Sentinel(policy)
    events: list[LogEvent] = []
    tokens = _TokenSource()

    while port.now() < ticks:
        port.advance(1)
        m = Measurement(port.monitor_measurement(), taken_at=float(port.now()))
        if sentinel.step(state, m, capacity) is Decision.HOLD:
            continue
        events.append(LogEvent(port.now(), "reassign"))
        desired = _desired_assignment(algorithm, m, state, capacity)
        diff = compute_diff(state, desired)
        try:
            apply_diff(diff, port, state, ack_timeout_ticks, tokens, events)
            state.assignment = desired
        except AckTimeout as exc:
            events.append(
                LogEvent(port.now(), "ack-timeout", exc.consumer, (), exc.token)
            )
        state = synchronize(state, port)
    return state, events


def verify_event_log(events: Iterable[LogEvent]) -> list[str]:
    """Check the stop-before-start protocol over an event log.

    For every partition, a start message is legal only if every stop ever
    issued for that partition has already been acknowledged.  Returns the
    list of violations, empty when the log is clean.
    """
    problems: list[str] = []
    unacked: dict[str, set[str]] = {}
    for e in events:
        if e.event == "stop":
            for p in e.partitions:
                unacked.setdefault(p, set()).add(e.token or "")
        elif e.event == "stop-ack":
            for p in e.partitions:
                unacked.get(p, set()).discard(e.token or "")
        elif e.event == "start":
            for p in e.partitions:
                if unacked.get(p):
                    problems.append(
                        f"tick {e.tick}: start for {p} before stop ack "
                        f"(outstanding {sorted(unacked[p])})"
                    )
    return problems


def write_event_log(events: Iterable[LogEvent], path: str | Path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(
                json.dumps(
                    {
                        "tick": e.tick,
                        "event": e.event,
                        "consumer": e.consumer,
                        "partitions": list(e.partitions),
                        "token": e.token,
                    }
                )
                + "\n"
            )

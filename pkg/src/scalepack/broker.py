"""Discrete-time broker simulation.

The world advances in fixed ticks (default one simulated second).  Each tick:
producers append bytes to partitions at their current true speed, consumers
drain their assigned partitions under a shared capacity budget, control
messages are processed at gather-cycle boundaries, safety is checked, and
the monitor takes its periodic samples.

Consumers are deliberately dumb: they own partitions, drain bytes, and obey
stop/start/decommission messages, acknowledging each one.  All policy lives
in the controller module.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .model import DEFAULT_CAPACITY

__all__ = [
    "MessageKind",
    "ControlMessage",
    "Ack",
    "PartitionState",
    "ConsumerState",
    "MonitorWindow",
    "monitor_estimate",
    "evict_stale",
    "BrokerWorld",
    "SimBrokerPort",
]

MONITOR_HORIZON = 30.0
MONITOR_PERIOD = 5.0


class MessageKind(enum.Enum):
    STOP = "stop"
    START = "start"
    DECOMMISSION = "decommission"


@dataclass(frozen=True)
class ControlMessage:
    kind: MessageKind
    partitions: frozenset[str]
    ack_token: str


@dataclass(frozen=True)
class Ack:
    consumer: int
    token: str
    tick: int


@dataclass
class PartitionState:
    """One partition: a byte counter pair plus its current production rate."""

    id: str
    true_speed: float = 0.0
    total_bytes: float = 0.0
    consumed_bytes: float = 0.0
    paused: bool = True        # true while no consumer owns it

    @property
    def lag(self) -> float:
        return self.total_bytes - self.consumed_bytes


@dataclass
class ConsumerState:
    """One consumer: owned partitions, a capacity, and a control inbox.

    The inbox is only read at the end of a gather cycle, which closes when
    `batch_bytes` have been drained or `wait_time_ticks` ticks have elapsed,
    whichever comes first.  That models a poll loop that cannot react to
    control traffic mid-batch.
    """

    index: int
    capacity: float = DEFAULT_CAPACITY
    batch_bytes: float = DEFAULT_CAPACITY
    wait_time_ticks: int = 2
    assigned: set[str] = field(default_factory=set)
    inbox: deque[ControlMessage] = field(default_factory=deque)
    decommissioned: bool = False
    gathered: float = 0.0
    ticks_in_cycle: int = 0


class MonitorWindow:
    """Sliding window of (timestamp, total_bytes) samples per partition."""

    def __init__(self, horizon: float = MONITOR_HORIZON) -> None:
        self.horizon = horizon
        self.samples: dict[str, deque[tuple[float, float]]] = {}

    def append(self, partition: str, t: float, size: float) -> None:
        q = self.samples.setdefault(partition, deque())
        if q and t <= q[-1][0]:
            raise ValueError(f"non-increasing monitor timestamp for {partition}")
        q.append((t, size))


def evict_stale(w: MonitorWindow, now: float) -> MonitorWindow:
    """Drop every sample strictly older than `now` minus the horizon."""
    cutoff = now - w.horizon
    for q in w.samples.values():
        while q and q[0][0] < cutoff:
            q.popleft()
    return w


def monitor_estimate(w: MonitorWindow, partition: str) -> float:
    """Average write speed over the window, 0.0 when under two samples.

    Computed as the byte delta between the oldest and newest sample divided
    by their time span, floored at zero so shrinking logs never report a
    negative rate.
    """
    q = w.samples.get(partition)
    if not q or len(q) < 2:
        return 0.0
    (t0, s0), (t1, s1) = q[0], q[-1]
    return max(0.0, (s1 - s0) / (t1 - t0))


@dataclass
class Violation:
    tick: int
    detail: str


class BrokerWorld:
    """The closed simulation: partitions, consumers, monitor, safety log."""

    def __init__(
        self,
        capacity: float = DEFAULT_CAPACITY,
        dt: float = 1.0,
        monitor_period: float = MONITOR_PERIOD,
        wait_time_ticks: int = 2,
        batch_bytes: float | None = None,
        record_trace: bool = False,
    ) -> None:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.capacity = capacity
        self.dt = dt
        self.monitor_period = monitor_period
        self.wait_time_ticks = wait_time_ticks
        self.batch_bytes = capacity if batch_bytes is None else batch_bytes
        self.partitions: dict[str, PartitionState] = {}
        self.consumers: dict[int, ConsumerState] = {}
        self.monitor = MonitorWindow()
        self.acks: deque[Ack] = deque()
        self.violations: list[Violation] = []
        self.tick_index = 0
        self.time = 0.0
        self.record_trace = record_trace
        self.trace: list[dict] = []

    # -- setup ----------------------------------------------------------

    def add_partition(self, pid: str, true_speed: float) -> None:
        self.partitions[pid] = PartitionState(id=pid, true_speed=true_speed)

    def add_consumer(self, index: int, assigned: Iterable[str] = ()) -> None:
        if index in self.consumers:
            raise ValueError(f"consumer {index} already exists")
        cons = ConsumerState(
            index=index,
            capacity=self.capacity,
            batch_bytes=self.batch_bytes,
            wait_time_ticks=self.wait_time_ticks,
            assigned=set(assigned),
        )
        self.consumers[index] = cons
        for p in cons.assigned:
            self.partitions[p].paused = False

    def set_speed(self, pid: str, speed: float) -> None:
        self.partitions[pid].true_speed = max(0.0, speed)

    def total_lag(self) -> float:
        return sum(p.lag for p in self.partitions.values())

    # -- the tick -------------------------------------------------------

    def tick(self) -> None:
        dt = self.dt
        self.tick_index += 1
        self.time += dt

        for p in self.partitions.values():
            p.total_bytes += p.true_speed * dt

        for cons in sorted(self.consumers.values(), key=lambda c: c.index):
            if not cons.decommissioned:
                cons.gathered += self._drain(cons, cons.capacity * dt)
            cons.ticks_in_cycle += 1
            if cons.gathered >= cons.batch_bytes or cons.ticks_in_cycle >= cons.wait_time_ticks:
                self._process_inbox(cons)
                cons.gathered = 0.0
                cons.ticks_in_cycle = 0

        self._check_exclusion()

        if self.tick_index % max(1, round(self.monitor_period / dt)) == 0:
            for pid, p in self.partitions.items():
                self.monitor.append(pid, self.time, p.total_bytes)
            evict_stale(self.monitor, self.time)

        if self.record_trace:
            owner_of: dict[str, int] = {}
            for cons in self.consumers.values():
                for pid in cons.assigned:
                    owner_of[pid] = cons.index
            for pid, p in sorted(self.partitions.items()):
                self.trace.append(
                    {
                        "tick": self.tick_index,
                        "partition": pid,
                        "lag": p.lag,
                        "paused": p.paused,
                        "owner": owner_of.get(pid),
                    }
                )

    def _drain(self, cons: ConsumerState, budget: float) -> float:
        """Consume up to `budget` bytes, sharing equally across lagging partitions."""
        drained = 0.0
        active = sorted(
            p for p in cons.assigned if self.partitions[p].lag > 1e-9
        )
        while budget > 1e-9 and active:
            share = budget / len(active)
            still: list[str] = []
            for pid in active:
                part = self.partitions[pid]
                take = min(share, part.lag)
                part.consumed_bytes += take
                drained += take
                budget -= take
                if part.lag > 1e-9:
                    still.append(pid)
            if len(still) == len(active):
                break              # budget exhausted by equal shares
            active = still
        return drained

    def _process_inbox(self, cons: ConsumerState) -> None:
        while cons.inbox:
            msg = cons.inbox.popleft()
            if msg.kind is MessageKind.STOP:
                for p in msg.partitions:
                    cons.assigned.discard(p)
                    if p in self.partitions:
                        self.partitions[p].paused = True
            elif msg.kind is MessageKind.START:
                for p in msg.partitions:
                    cons.assigned.add(p)
                    if p in self.partitions:
                        self.partitions[p].paused = False
            else:
                if cons.assigned:
                    self.violations.append(
                        Violation(
                            self.tick_index,
                            f"consumer {cons.index} decommissioned while owning "
                            f"{sorted(cons.assigned)}",
                        )
                    )
                cons.decommissioned = True
            self.acks.append(Ack(cons.index, msg.ack_token, self.tick_index))

    def _check_exclusion(self) -> None:
        owners: dict[str, list[int]] = {}
        for cons in self.consumers.values():
            for p in cons.assigned:
                owners.setdefault(p, []).append(cons.index)
        for p, ks in owners.items():
            if len(ks) > 1:
                self.violations.append(
                    Violation(
                        self.tick_index,
                        f"partition {p} owned by consumers {sorted(ks)}",
                    )
                )

    def write_trace(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for row in self.trace:
                fh.write(json.dumps(row) + "\n")


class SimBrokerPort:
    """Controller-facing adapter over `BrokerWorld`.

    Exposes consumer lifecycle and control-message operations plus the clock
    (`now` and `advance`).  The controller owns the clock: the world only
    moves when the controller lets it.
    """

    def __init__(self, world: BrokerWorld) -> None:
        self.world = world

    def now(self) -> int:
        return self.world.tick_index

    def advance(self, ticks: int = 1) -> None:
        for _ in range(ticks):
            self.world.tick()

    def create_consumer(self, index: int) -> None:
        self.world.add_consumer(index)

    def delete_consumer(self, index: int) -> None:
        self.world.consumers.pop(index, None)

    def send_control(self, index: int, msg: ControlMessage) -> None:
        cons = self.world.consumers.get(index)
        if cons is None or cons.decommissioned:
            return            # message to the void; ack will never come
        cons.inbox.append(msg)

    def poll_acks(self) -> list[Ack]:
        out = list(self.world.acks)
        self.world.acks.clear()
        return out

    def query_assignment(self, index: int) -> set[str] | None:
        cons = self.world.consumers.get(index)
        if cons is None or cons.decommissioned:
            return None
        return set(cons.assigned)

    def measurement_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.world.partitions))

    def monitor_measurement(self) -> dict[str, float]:
        """Current monitor estimate for every partition."""
        return {
            p: monitor_estimate(self.world.monitor, p)
            for p in sorted(self.world.partitions)
        }

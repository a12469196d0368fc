"""Named simulation scenarios and their runner.

A scenario bundles a world setup (partitions, speeds, initial ownership),
a controller configuration, and optional scripted events: timed speed
steps, a seeded random drift, and adversarial control-message injections
that bypass the controller to probe the safety checker.

Built-ins:

* steady-60pct    stationary load at 60 percent of two consumers' capacity,
                  bootstrapped from a single overloaded consumer
* step-overload   one partition's speed jumps, forcing exactly one
                  rebalance cycle
* drop-to-idle    load collapses, the group scales down via hysteresis
* drift-25        ten thousand ticks of bounded random speed drift with
                  periodic rebalances
* double-start-bug  a forged start message gives one partition two owners;
                  the safety checker must catch it
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .broker import BrokerWorld, ControlMessage, MessageKind, SimBrokerPort
from .controller import (
    ACK_TIMEOUT_TICKS,
    GroupState,
    LogEvent,
    SentinelPolicy,
    control_loop,
    verify_event_log,
)
from .errors import ScenarioError
from .model import DEFAULT_CAPACITY, Algorithm, Assignment

__all__ = [
    "Scenario",
    "ScenarioResult",
    "ScriptedPort",
    "run_scenario",
    "load_scenario",
    "builtin_scenario",
    "BUILTIN_SCENARIOS",
]


@dataclass(frozen=True)
class SpeedEvent:
    tick: int
    partition: str
    speed: float


@dataclass(frozen=True)
class Drift:
    """Bounded random walk applied to every partition every `period` ticks."""

    delta_pct: float
    period: int
    seed: int


@dataclass(frozen=True)
class Injection:
    """A control message delivered behind the controller's back."""

    tick: int
    consumer: int
    kind: MessageKind
    partitions: tuple[str, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    partitions: dict[str, float]                 # id -> initial speed, bytes/s
    initial_assignment: dict[str, int]
    ticks: int
    algorithm: Algorithm = Algorithm.MBF
    capacity: float = DEFAULT_CAPACITY
    policy: SentinelPolicy = SentinelPolicy()
    extra_consumers: tuple[int, ...] = ()
    speed_events: tuple[SpeedEvent, ...] = ()
    drift: Drift | None = None
    injections: tuple[Injection, ...] = ()
    ack_timeout_ticks: int = ACK_TIMEOUT_TICKS

    def validate(self) -> None:
        if not self.partitions:
            raise ScenarioError(f"{self.name}: needs at least one partition")
        if self.ticks < 1:
            raise ScenarioError(f"{self.name}: ticks must be >= 1")
        unknown = set(self.initial_assignment) - set(self.partitions)
        if unknown:
            raise ScenarioError(f"{self.name}: assignment references {sorted(unknown)}")
        if set(self.initial_assignment) != set(self.partitions):
            raise ScenarioError(f"{self.name}: every partition needs an initial owner")
        for s in self.partitions.values():
            if s < 0 or s > self.capacity:
                raise ScenarioError(f"{self.name}: speeds must lie in [0, capacity]")


@dataclass
class ScenarioResult:
    scenario: Scenario
    state: GroupState
    events: list[LogEvent]
    lag_series: list[float]
    world: BrokerWorld = field(repr=False)

    @property
    def reassign_count(self) -> int:
        return sum(1 for e in self.events if e.event == "reassign")

    @property
    def safety_problems(self) -> list[str]:
        problems = [f"tick {v.tick}: {v.detail}" for v in self.world.violations]
        problems.extend(verify_event_log(self.events))
        return problems

    @property
    def exit_code(self) -> int:
        return 3 if self.safety_problems else 0


class ScriptedPort(SimBrokerPort):
    """Port whose clock also fires the scenario's scripted events.

    Speed steps, drift and injections happen just before their tick runs, so
    the controller observes their effects exactly as it would observe an
    external world changing on its own.
    """

    def __init__(self, world: BrokerWorld, scenario: Scenario) -> None:
        super().__init__(world)
        self.scenario = scenario
        self.lag_series: list[float] = [world.total_lag()]
        self._events = sorted(scenario.speed_events, key=lambda e: e.tick)
        self._injections = sorted(scenario.injections, key=lambda i: i.tick)
        self._rng = (
            np.random.Generator(np.random.PCG64(scenario.drift.seed))
            if scenario.drift
            else None
        )

    def advance(self, ticks: int = 1) -> None:
        for _ in range(ticks):
            upcoming = self.world.tick_index + 1
            while self._events and self._events[0].tick <= upcoming:
                ev = self._events.pop(0)
                self.world.set_speed(ev.partition, ev.speed)
            drift = self.scenario.drift
            if drift and upcoming % drift.period == 0:
                step = self.world.capacity * drift.delta_pct / 100.0
                for pid in sorted(self.world.partitions):
                    part = self.world.partitions[pid]
                    moved = part.true_speed + float(self._rng.uniform(-1, 1)) * step
                    part.true_speed = min(self.world.capacity, max(0.0, moved))
            while self._injections and self._injections[0].tick <= upcoming:
                inj = self._injections.pop(0)
                self.world.consumers[inj.consumer].inbox.append(
                    ControlMessage(
                        inj.kind, frozenset(inj.partitions), f"forged-{inj.tick}"
                    )
                )
            self.world.tick()
            self.lag_series.append(self.world.total_lag())


def run_scenario(scenario: Scenario) -> ScenarioResult:
    """Build the world, run the control loop for the tick budget, collect."""
    scenario.validate()
    world = BrokerWorld(capacity=scenario.capacity)
    for pid in sorted(scenario.partitions):
        world.add_partition(pid, scenario.partitions[pid])
    by_consumer: dict[int, list[str]] = {}
    for p, k in scenario.initial_assignment.items():
        by_consumer.setdefault(k, []).append(p)
    for k in sorted(set(by_consumer) | set(scenario.extra_consumers)):
        world.add_consumer(k, by_consumer.get(k, ()))
    port = ScriptedPort(world, scenario)
    state = GroupState(
        assignment=Assignment(dict(scenario.initial_assignment)),
        live_consumers=set(by_consumer) | set(scenario.extra_consumers),
    )
    state, events = control_loop(
        scenario.algorithm,
        scenario.policy,
        port,
        scenario.ticks,
        scenario.capacity,
        scenario.ack_timeout_ticks,
        state,
    )
    return ScenarioResult(
        scenario=scenario,
        state=state,
        events=events,
        lag_series=port.lag_series,
        world=world,
    )


# -- built-ins ------------------------------------------------------------


def _steady_60pct(c: float) -> Scenario:
    # eight equal partitions totalling 1.2 C: lower bound two consumers,
    # sixty percent of their joint capacity, bootstrapped all on consumer 0
    partitions = {f"p{i}": 0.15 * c for i in range(8)}
    return Scenario(
        name="steady-60pct",
        partitions=partitions,
        initial_assignment={p: 0 for p in partitions},
        ticks=10_000,
        capacity=c,
    )


def _step_overload(c: float) -> Scenario:
    return Scenario(
        name="step-overload",
        partitions={"p0": 0.5 * c, "p1": 0.5 * c, "p2": 0.4 * c, "p3": 0.4 * c},
        initial_assignment={"p0": 0, "p1": 0, "p2": 1, "p3": 1},
        ticks=400,
        capacity=c,
        speed_events=(SpeedEvent(100, "p3", 0.7 * c),),
    )


def _drop_to_idle(c: float) -> Scenario:
    partitions = {"p0": 0.45 * c, "p1": 0.45 * c, "p2": 0.45 * c}
    return Scenario(
        name="drop-to-idle",
        partitions=partitions,
        initial_assignment={"p0": 0, "p1": 0, "p2": 1},
        ticks=400,
        capacity=c,
        speed_events=tuple(
            SpeedEvent(150, p, 0.02 * c) for p in sorted(partitions)
        ),
    )


def _drift_25(c: float) -> Scenario:
    rng = np.random.Generator(np.random.PCG64(7))
    partitions = {f"p{i}": float(rng.uniform(0.0, c)) for i in range(10)}
    return Scenario(
        name="drift-25",
        partitions=partitions,
        initial_assignment={p: 0 for p in partitions},
        ticks=10_000,
        capacity=c,
        drift=Drift(delta_pct=25.0, period=10, seed=11),
    )


def _double_start_bug(c: float) -> Scenario:
    return Scenario(
        name="double-start-bug",
        partitions={"p0": 0.3 * c, "p1": 0.3 * c},
        initial_assignment={"p0": 0, "p1": 0},
        ticks=80,
        capacity=c,
        extra_consumers=(1,),
        policy=SentinelPolicy(hysteresis_cycles=1_000),
        injections=(Injection(30, 1, MessageKind.START, ("p1",)),),
    )


BUILTIN_SCENARIOS = {
    "steady-60pct": _steady_60pct,
    "step-overload": _step_overload,
    "drop-to-idle": _drop_to_idle,
    "drift-25": _drift_25,
    "double-start-bug": _double_start_bug,
}


def builtin_scenario(name: str, capacity: float = DEFAULT_CAPACITY) -> Scenario:
    if name not in BUILTIN_SCENARIOS:
        raise ScenarioError(
            f"unknown scenario {name!r}; built-ins: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        )
    return BUILTIN_SCENARIOS[name](capacity)


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario from a JSON file.

    Shape mirrors the Scenario fields; speeds are absolute bytes/s.  See the
    built-ins for working values.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        policy_doc = doc.get("policy", {})
        scenario = Scenario(
            name=str(doc["name"]),
            partitions={str(p): float(s) for p, s in doc["partitions"].items()},
            initial_assignment={
                str(p): int(k) for p, k in doc["initial_assignment"].items()
            },
            ticks=int(doc["ticks"]),
            algorithm=Algorithm.parse(doc.get("algorithm", "MBF")),
            capacity=float(doc.get("capacity", DEFAULT_CAPACITY)),
            policy=SentinelPolicy(
                overload_enabled=bool(policy_doc.get("overload_enabled", True)),
                scale_down_margin=int(policy_doc.get("scale_down_margin", 1)),
                hysteresis_cycles=int(policy_doc.get("hysteresis_cycles", 30)),
            ),
            extra_consumers=tuple(int(k) for k in doc.get("extra_consumers", ())),
            speed_events=tuple(
                SpeedEvent(int(e["tick"]), str(e["partition"]), float(e["speed"]))
                for e in doc.get("speed_events", ())
            ),
            drift=(
                Drift(
                    delta_pct=float(doc["drift"]["delta_pct"]),
                    period=int(doc["drift"]["period"]),
                    seed=int(doc["drift"]["seed"]),
                )
                if doc.get("drift")
                else None
            ),
            injections=tuple(
                Injection(
                    int(i["tick"]),
                    int(i["consumer"]),
                    MessageKind(str(i["kind"])),
                    tuple(str(p) for p in i["partitions"]),
                )
                for i in doc.get("injections", ())
            ),
            ack_timeout_ticks=int(doc.get("ack_timeout_ticks", ACK_TIMEOUT_TICKS)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario {path}: {exc}") from exc
    scenario.validate()
    return scenario

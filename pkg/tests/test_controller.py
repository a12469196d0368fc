"""Controller state machine: sentinel, diffing, rebalance protocol, recovery."""

import json

import pytest

from scalepack import (
    Algorithm,
    Assignment,
    BrokerWorld,
    Decision,
    GroupState,
    LogEvent,
    Measurement,
    Sentinel,
    SentinelPolicy,
    SimBrokerPort,
    StateDiff,
    apply_diff,
    compute_diff,
    control_loop,
    synchronize,
    verify_event_log,
    write_event_log,
)
from scalepack.errors import AckTimeout

C = 10.0


def state(placement, live=None):
    a = Assignment(placement)
    return GroupState(assignment=a, live_consumers=set(a.consumers if live is None else live))


# -- sentinel ------------------------------------------------------------


def test_sentinel_fires_on_unassigned_partition():
    s = Sentinel(SentinelPolicy())
    st = state({"p0": 0})
    m = Measurement({"p0": 1.0, "p1": 1.0})
    assert s.step(st, m, C) is Decision.REASSIGN


def test_sentinel_holds_when_everything_fits():
    s = Sentinel(SentinelPolicy())
    st = state({"p0": 0, "p1": 0})
    m = Measurement({"p0": 4.0, "p1": 4.0})
    assert s.step(st, m, C) is Decision.HOLD


def test_sentinel_fires_on_overload():
    s = Sentinel(SentinelPolicy())
    st = state({"p0": 0, "p1": 0})
    m = Measurement({"p0": 6.0, "p1": 5.0})
    assert s.step(st, m, C) is Decision.REASSIGN


def test_sentinel_overload_can_be_disabled():
    s = Sentinel(SentinelPolicy(overload_enabled=False, hysteresis_cycles=99))
    st = state({"p0": 0, "p1": 0})
    m = Measurement({"p0": 6.0, "p1": 5.0})
    assert s.step(st, m, C) is Decision.HOLD


def test_sentinel_hysteretic_scale_down_fires_on_third_call():
    # two consumers, tiny load: lower bound 1 = live 2 - margin 1
    s = Sentinel(SentinelPolicy(scale_down_margin=1, hysteresis_cycles=3))
    st = state({"p0": 0, "p1": 1})
    m = Measurement({"p0": 1.0, "p1": 1.0})
    assert s.step(st, m, C) is Decision.HOLD
    assert s.step(st, m, C) is Decision.HOLD
    assert s.step(st, m, C) is Decision.REASSIGN


def test_sentinel_streak_resets_when_condition_lapses():
    s = Sentinel(SentinelPolicy(scale_down_margin=1, hysteresis_cycles=2))
    st = state({"p0": 0, "p1": 1})
    low = Measurement({"p0": 1.0, "p1": 1.0})
    high = Measurement({"p0": 6.0, "p1": 6.0})
    assert s.step(st, low, C) is Decision.HOLD
    assert s.step(st, high, C) is Decision.HOLD     # needs both consumers
    assert s.step(st, low, C) is Decision.HOLD      # streak restarted
    assert s.step(st, low, C) is Decision.REASSIGN


def test_sentinel_policy_validation():
    with pytest.raises(ValueError):
        SentinelPolicy(hysteresis_cycles=0).validate()
    with pytest.raises(ValueError):
        SentinelPolicy(scale_down_margin=0).validate()


# -- diff ----------------------------------------------------------------


def test_compute_diff_worked_example():
    cur = state({"p0": 0, "p1": 0, "p2": 1})
    desired = Assignment({"p0": 0, "p1": 2, "p2": 2})
    d = compute_diff(cur, desired)
    assert d.create == (2,)
    assert d.stop == {0: frozenset({"p1"}), 1: frozenset({"p2"})}
    assert d.start == {2: frozenset({"p1", "p2"})}
    assert d.decommission == (1,)


def test_compute_diff_identity_is_empty():
    cur = state({"p0": 0, "p1": 1})
    d = compute_diff(cur, Assignment({"p0": 0, "p1": 1}))
    assert d.empty


def test_compute_diff_cold_start():
    cur = GroupState(assignment=Assignment.empty(), live_consumers=set())
    d = compute_diff(cur, Assignment({"p0": 0}))
    assert d.create == (0,)
    assert d.start == {0: frozenset({"p0"})}
    assert d.stop == {}
    assert d.decommission == ()


# -- apply_diff ----------------------------------------------------------


def build_world(placements, speeds=None):
    w = BrokerWorld(capacity=C, wait_time_ticks=1)
    speeds = speeds or {}
    for pid, owner in placements.items():
        w.add_partition(pid, speeds.get(pid, 0.0))
    for owner in sorted(set(placements.values())):
        w.add_consumer(owner, [p for p, o in placements.items() if o == owner])
    return w


def test_apply_diff_orders_stop_ack_start_decommission():
    w = build_world({"p0": 0, "p1": 0, "p2": 1})
    port = SimBrokerPort(w)
    cur = state({"p0": 0, "p1": 0, "p2": 1})
    d = compute_diff(cur, Assignment({"p0": 0, "p1": 2, "p2": 2}))
    events = apply_diff(d, port, cur)
    assert verify_event_log(events) == []

    names = [e.event for e in events]
    assert names.index("create") < names.index("stop")
    # per-partition chains
    for pid in ("p1", "p2"):
        stop_at = next(i for i, e in enumerate(events)
                       if e.event == "stop" and pid in e.partitions)
        ack_at = next(i for i, e in enumerate(events)
                      if e.event == "stop-ack" and pid in e.partitions)
        start_at = next(i for i, e in enumerate(events)
                        if e.event == "start" and pid in e.partitions)
        assert stop_at < ack_at < start_at
    decom = [i for i, e in enumerate(events) if e.event == "decommission"]
    starts = [i for i, e in enumerate(events) if e.event == "start"]
    assert decom and min(decom) > max(starts)

    # the world must agree with the final perceived state
    assert port.query_assignment(2) == {"p1", "p2"}
    assert port.query_assignment(0) == {"p0"}
    assert port.query_assignment(1) is None
    assert cur.live_consumers == {0, 2}


def test_apply_diff_empty_is_noop():
    w = build_world({"p0": 0})
    port = SimBrokerPort(w)
    cur = state({"p0": 0})
    d = StateDiff(create=(), stop={}, start={}, decommission=())
    assert apply_diff(d, port, cur) == []
    assert port.query_assignment(0) == {"p0"}


def test_apply_diff_cold_start_has_no_stops():
    w = BrokerWorld(capacity=C, wait_time_ticks=1)
    w.add_partition("p0", 0.0)
    port = SimBrokerPort(w)
    cur = GroupState(assignment=Assignment.empty(), live_consumers=set())
    d = compute_diff(cur, Assignment({"p0": 0}))
    events = apply_diff(d, port, cur)
    assert {e.event for e in events} <= {"create", "start", "start-ack"}
    assert port.query_assignment(0) == {"p0"}


def test_apply_diff_timeout_on_dead_consumer():
    w = build_world({"p0": 0})
    port = SimBrokerPort(w)
    # consumer 1 does not exist in the world: its stop can never be acked
    cur = state({"p0": 0, "p1": 1}, live={0, 1})
    w.add_partition("p1", 0.0)
    d = compute_diff(cur, Assignment({"p0": 0, "p1": 0}))
    with pytest.raises(AckTimeout):
        apply_diff(d, port, cur, ack_timeout_ticks=5)


def test_apply_diff_updates_state_assignment():
    w = build_world({"p0": 0, "p1": 1})
    port = SimBrokerPort(w)
    cur = state({"p0": 0, "p1": 1})
    d = compute_diff(cur, Assignment({"p0": 0, "p1": 0}))
    apply_diff(d, port, cur)
    assert cur.assignment.placement == {"p0": 0, "p1": 0}
    assert cur.live_consumers == {0}


# -- synchronize ---------------------------------------------------------


def test_synchronize_fixed_point():
    w = build_world({"p0": 0, "p1": 1})
    port = SimBrokerPort(w)
    cur = state({"p0": 0, "p1": 1})
    out = synchronize(cur, port)
    assert out.assignment.placement == cur.assignment.placement
    assert out.live_consumers == cur.live_consumers


def test_synchronize_consumer_report_wins():
    w = build_world({"p0": 0})
    w.consumers[0].assigned.clear()   # broker-side reality: c0 owns nothing
    port = SimBrokerPort(w)
    cur = state({"p0": 0})
    out = synchronize(cur, port)
    assert "p0" not in out.assignment.placement
    assert out.live_consumers == {0}


def test_synchronize_unreachable_consumer_orphans_partitions():
    w = build_world({"p0": 0})
    port = SimBrokerPort(w)
    cur = state({"p0": 0, "p1": 1}, live={0, 1})   # consumer 1 never existed
    out = synchronize(cur, port)
    assert out.live_consumers == {0}
    assert "p1" not in out.assignment.placement


# -- event log verifier and export ----------------------------------------


def test_verify_event_log_catches_start_before_ack():
    events = [
        LogEvent(tick=1, event="stop", consumer=0, partitions=("p0",), token="s0"),
        LogEvent(tick=2, event="start", consumer=1, partitions=("p0",), token="s1"),
        LogEvent(tick=3, event="stop-ack", consumer=0, partitions=("p0",), token="s0"),
    ]
    problems = verify_event_log(events)
    assert len(problems) == 1
    assert "p0" in problems[0]


def test_verify_event_log_accepts_proper_chain():
    events = [
        LogEvent(tick=1, event="stop", consumer=0, partitions=("p0",), token="s0"),
        LogEvent(tick=2, event="stop-ack", consumer=0, partitions=("p0",), token="s0"),
        LogEvent(tick=3, event="start", consumer=1, partitions=("p0",), token="s1"),
    ]
    assert verify_event_log(events) == []


def test_write_event_log_jsonl(tmp_path):
    events = [LogEvent(tick=1, event="stop", consumer=0, partitions=("p0",), token="x")]
    path = tmp_path / "events.jsonl"
    write_event_log(events, path)
    doc = json.loads(path.read_text().splitlines()[0])
    assert doc == {"tick": 1, "event": "stop", "consumer": 0,
                   "partitions": ["p0"], "token": "x"}


# -- control loop ---------------------------------------------------------


def test_control_loop_converges_and_holds():
    w = BrokerWorld(capacity=C, wait_time_ticks=1)
    for i in range(4):
        w.add_partition(f"p{i}", 2.0)
    w.add_consumer(0, [f"p{i}" for i in range(4)])
    port = SimBrokerPort(w)
    st, events = control_loop(Algorithm.MBF, SentinelPolicy(), port,
                              ticks=300, capacity=C)
    assert verify_event_log(events) == []
    assert w.violations == []
    reassigns = [e for e in events if e.event == "reassign"]
    # aggregate 8 < C: a single consumer suffices, nothing ever fires
    assert reassigns == []
    assert st.assignment.placement == {f"p{i}": 0 for i in range(4)}


def test_control_loop_splits_overloaded_consumer():
    w = BrokerWorld(capacity=C, wait_time_ticks=1)
    for i in range(3):
        w.add_partition(f"p{i}", 4.0)
    w.add_consumer(0, ["p0", "p1", "p2"])
    port = SimBrokerPort(w)
    st, events = control_loop(Algorithm.MBF, SentinelPolicy(), port,
                              ticks=300, capacity=C)
    assert verify_event_log(events) == []
    assert w.violations == []
    assert [e for e in events if e.event == "reassign"]
    loads = st.assignment.loads(Measurement({f"p{i}": 4.0 for i in range(3)}))
    assert all(v <= C for v in loads.values())
    assert len(st.live_consumers) == 2

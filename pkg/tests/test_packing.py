"""Packing heuristics: frozen hand-traced cases plus contract errors.

Expected placements were derived by hand-tracing each rule and cross-checked
against the exhaustive oracle where noted.
"""

import pytest

from scalepack import (
    Algorithm,
    Assignment,
    Measurement,
    exact_pack,
    lower_bound,
    pack_classic,
    pack_modified,
)
from scalepack.errors import InconsistentInput, OversizeItem, PackingError

C = 10.0


def by_consumer(a):
    return a.by_consumer()


def test_ffd_six_items():
    # optimum is 3 bins (= ceil(21/10), confirmed by exact_pack below)
    m = Measurement({"p0": 6, "p1": 5, "p2": 4, "p3": 3, "p4": 2, "p5": 1})
    out = pack_classic(Algorithm.FFD, m, Assignment.empty(), C)
    assert by_consumer(out) == {0: ["p0", "p2"], 1: ["p1", "p3", "p4"], 2: ["p5"]}
    assert out.bin_count == exact_pack(m, C) == 3


def test_nf_id_order():
    m = Measurement({"a": 1, "b": 6, "c": 5, "d": 2, "e": 4, "f": 3})
    out = pack_classic(Algorithm.NF, m, Assignment.empty(), C)
    assert by_consumer(out) == {0: ["a", "b"], 1: ["c", "d"], 2: ["e", "f"]}


def test_single_full_item_every_family():
    m = Measurement({"p0": C})
    for algo in Algorithm:
        if algo.classic:
            out = pack_classic(algo, m, Assignment.empty(), C)
        else:
            out = pack_modified(algo, m, Assignment.empty(), {"p0"}, C)
        assert by_consumer(out) == {0: ["p0"]}


def test_new_bin_reuses_previous_owner_index():
    m = Measurement({"p0": 6})
    out = pack_classic(Algorithm.FFD, m, Assignment({"p0": 4}), C)
    assert out.placement == {"p0": 4}


def test_new_bin_takes_lowest_free_index_when_owner_taken():
    # p0 lands in bin 0; p1 previously owned bin 0, so it gets index 1
    m = Measurement({"p0": 9, "p1": 8})
    out = pack_classic(Algorithm.FF, m, Assignment({"p1": 0}), C)
    assert out.placement == {"p0": 0, "p1": 1}


def test_next_fit_only_probes_latest_bin():
    # 6 opens bin 0, 5 opens bin 1, 4 fits bin 1, then 3 opens bin 2
    # even though bin 0 still has room for it
    m = Measurement({"a": 6, "b": 5, "c": 4, "d": 3})
    out = pack_classic(Algorithm.NF, m, Assignment.empty(), C)
    assert by_consumer(out) == {0: ["a"], 1: ["b", "c"], 2: ["d"]}


def test_best_vs_worst_fit_divergence():
    speeds = {"a": 7, "b": 5, "c": 3}
    m = Measurement(speeds)
    bf = pack_classic(Algorithm.BFD, m, Assignment.empty(), C)
    wf = pack_classic(Algorithm.WFD, m, Assignment.empty(), C)
    # best fit tops up the fullest bin, worst fit the emptiest
    assert by_consumer(bf) == {0: ["a", "c"], 1: ["b"]}
    assert by_consumer(wf) == {0: ["a"], 1: ["b", "c"]}


def test_classic_deterministic_tie_break_lowest_index():
    # two equally loaded bins both fit "c"; first/best/worst all pick bin 0
    m = Measurement({"a": 4, "b": 4, "c": 2})
    for algo in (Algorithm.FFD, Algorithm.BFD, Algorithm.WFD):
        out = pack_classic(algo, m, Assignment.empty(), C)
        assert out.placement["c"] == 0, algo.label


def test_mbf_unchanged_speeds_is_identity():
    prev = Assignment({"p0": 0, "p1": 0, "p2": 1})
    m = Measurement({"p0": 0.5 * C, "p1": 0.4 * C, "p2": 0.7 * C})
    out = pack_modified(Algorithm.MBF, m, prev, set(), C)
    assert out.placement == prev.placement
    assert out.bin_count == 2


def test_mbf_consolidates_underused_bins():
    prev = Assignment({"p0": 0, "p1": 1})
    m = Measurement({"p0": 0.3 * C, "p1": 0.3 * C})
    out = pack_modified(Algorithm.MBF, m, prev, set(), C)
    assert out.placement == {"p0": 0, "p1": 0}
    assert out.bin_count == 1


def test_modified_cold_start_single_item():
    m = Measurement({"p0": 0.6 * C})
    for algo in Algorithm:
        if algo.modified:
            out = pack_modified(algo, m, Assignment.empty(), {"p0"}, C)
            assert out.placement == {"p0": 0}, algo.label


def test_modified_output_is_fixed_point():
    m = Measurement({"a": 3, "b": 3, "c": 3, "d": 5, "e": 6})
    prev = Assignment({"a": 0, "b": 1, "c": 2, "d": 3, "e": 4})
    for algo in Algorithm:
        if not algo.modified:
            continue
        a1 = pack_modified(algo, m, prev, set(), C)
        a2 = pack_modified(algo, m, a1, set(), C)
        assert a2.placement == a1.placement, algo.label


def test_modified_scale_down_drops_consumer():
    # consumer 0 outranks (load 5 vs 4) and keeps its bin; both of
    # consumer 1's partitions then fit there, so bin 1 disappears
    prev = Assignment({"p0": 0, "p1": 1, "p2": 1})
    m = Measurement({"p0": 5, "p1": 2, "p2": 2})
    out = pack_modified(Algorithm.MBF, m, prev, set(), C)
    assert out.consumers == {0}
    assert out.bin_count == 1


def test_oversize_item_rejected():
    m = Measurement({"p0": C * 1.5})
    with pytest.raises(OversizeItem):
        pack_classic(Algorithm.FF, m, Assignment.empty(), C)
    with pytest.raises(OversizeItem):
        pack_modified(Algorithm.MBF, m, Assignment.empty(), {"p0"}, C)


def test_negative_speed_rejected():
    m = Measurement({"p0": -1.0})
    with pytest.raises(PackingError):
        pack_classic(Algorithm.FF, m, Assignment.empty(), C)


def test_bad_capacity_rejected():
    m = Measurement({"p0": 1.0})
    for cap in (0.0, -2.0):
        with pytest.raises(PackingError):
            pack_classic(Algorithm.FF, m, Assignment.empty(), cap)


def test_wrong_family_rejected():
    m = Measurement({"p0": 1.0})
    with pytest.raises(PackingError):
        pack_classic(Algorithm.MBF, m, Assignment.empty(), C)
    with pytest.raises(PackingError):
        pack_modified(Algorithm.FFD, m, Assignment.empty(), {"p0"}, C)


def test_modified_coverage_check():
    m = Measurement({"p0": 1.0, "p1": 2.0})
    # p1 is neither in prev nor unassigned
    with pytest.raises(InconsistentInput):
        pack_modified(Algorithm.MBF, m, Assignment({"p0": 0}), set(), C)
    # p0 is in both
    with pytest.raises(InconsistentInput):
        pack_modified(Algorithm.MBF, m, Assignment({"p0": 0, "p1": 0}), {"p0"}, C)


def test_lower_bound_values():
    m = Measurement({"p0": 6, "p1": 5, "p2": 4, "p3": 3, "p4": 2, "p5": 1})
    assert lower_bound(m, C) == 3
    assert lower_bound(Measurement({}), C) == 0
    assert lower_bound(Measurement({"p0": C}), C) == 1


def test_empty_measurement_packs_to_nothing():
    out = pack_classic(Algorithm.FFD, Measurement({}), Assignment.empty(), C)
    assert out.placement == {}
    out = pack_modified(Algorithm.MBF, Measurement({}), Assignment.empty(), set(), C)
    assert out.placement == {}

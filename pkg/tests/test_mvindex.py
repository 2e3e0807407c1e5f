import math
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import SpanOracle, random_log, replay
from stpindex.mvindex import (
    OPEN, DuplicateKeyError, MissingKeyError, MvConfig, MvIndex, OrderError,
)
from stpindex.pagestore import LEAF, PageStore, StoreConfig

A, B, C, D = 1, 2, 3, 4


def make(b=42, **kw):
    store = PageStore(StoreConfig(b))
    return store, MvIndex(store, MvConfig.from_capacity(b, **kw))


def leaves(store, ix):
    return [store.peek(p) for p in ix.page_ids if store.peek(p).kind == LEAF]


# ---------------------------------------------------------------- config

def test_default_thresholds_for_42():
    cfg = MvConfig.from_capacity(42)
    assert (cfg.d, cfg.split_low, cfg.split_high) == (10, 15, 36)


@pytest.mark.parametrize("b", [8, 10, 16, 42, 64, 100])
def test_default_thresholds_are_valid(b):
    cfg = MvConfig.from_capacity(b)
    assert cfg.d == b // 4 and cfg.split_low == 3 * b // 8 and cfg.split_high == 7 * b // 8


@pytest.mark.parametrize("args", [(8, 2, 2, 7), (8, 2, 3, 8), (8, 3, 2, 7), (10, 2, 5, 6)])
def test_inconsistent_thresholds_rejected(args):
    with pytest.raises(ValueError):
        MvConfig(*args)


def test_node_capacity_cannot_exceed_page():
    with pytest.raises(ValueError):
        MvIndex(PageStore(StoreConfig(8)), MvConfig.from_capacity(16))


# ---------------------------------------------------------------- worked scenario

@pytest.fixture
def overflow_scenario():
    store = PageStore(StoreConfig(5))
    ix = MvIndex(store, MvConfig(5, 1, 2, 3))
    ix.insert(A, 1)
    ix.insert(C, 2)
    for t in (3, 4):  # modify C: close the old version, open a new one
        ix.logical_delete(C, t)
        ix.insert(C, t)
    ix.insert(B, 5)
    return store, ix


def test_single_leaf_before_overflow(overflow_scenario):
    store, ix = overflow_scenario
    assert len(leaves(store, ix)) == 1
    assert ix.dump().splitlines() == [
        "0 leaf [(1,1,$),(3,2,3),(3,3,4),(3,4,$),(2,5,$)] succ=[]",
        "1 internal [(-inf,1,$)] succ=[]",
    ]


def test_overflow_kills_leaf_and_creates_two(overflow_scenario):
    store, ix = overflow_scenario
    ix.insert(D, 6)
    lines = ix.dump().splitlines()
    assert lines == [
        "0 leaf [(1,1,6),(3,2,3),(3,3,4),(3,4,6),(2,5,6)] succ=[2,3]",
        "1 internal [(-inf,1,6),(-inf,6,$),(3,6,$)] succ=[]",
        "2 leaf [(1,1,$),(2,5,$)] succ=[]",
        "3 leaf [(3,4,$),(4,6,$)] succ=[]",
    ]
    dead = [p for p in leaves(store, ix) if p.died is not None]
    live = [p for p in leaves(store, ix) if p.died is None]
    assert len(dead) == 1 and len(live) == 2
    assert sorted(r.key for p in live for r in p.records) == [A, B, C, D]
    assert ix.snapshot(6) == [A, B, C, D]
    assert ix.snapshot(5) == [A, B, C]


def test_point_query_through_dead_root_record(overflow_scenario):
    store, ix = overflow_scenario
    ix.insert(D, 6)
    store.stats.reset()
    assert ix.point_query(C, 3)
    # root, then the dead leaf reached through the closed record (-inf,1,6)
    assert store.stats.reads == 2
    assert not ix.point_query(D, 5)


def test_update_without_overflow_copies_into_one_leaf(overflow_scenario):
    store, ix = overflow_scenario
    ix.logical_delete(B, 6)
    ix.insert(B, 6)
    assert ix.snapshot(6) == [A, B, C]
    assert ix.snapshot(5) == [A, B, C]


# ---------------------------------------------------------------- basic operations

def test_first_insert_gives_one_leaf_with_one_record():
    store, ix = make()
    ix.insert(7, 1)
    (leaf,) = leaves(store, ix)
    assert [(r.key, r.start, r.end) for r in leaf.records] == [(7, 1, OPEN)]
    assert ix.snapshot(1) == [7]


def test_enter_then_exit():
    _, ix = make()
    ix.insert(1, 4)
    ix.logical_delete(1, 5)
    assert ix.snapshot(4) == [1]
    assert ix.snapshot(5) == []


def test_deleting_only_record_needs_no_restructure():
    store, ix = make()
    ix.insert(1, 1)
    pages = len(store)
    ix.logical_delete(1, 2)
    assert ix.snapshot(2) == []
    assert len(store) == pages


def test_b_plus_one_inserts_split_once():
    b = 10
    store, ix = make(b)
    for k in range(1, b + 2):
        ix.insert(k, k)
    dead = [p for p in leaves(store, ix) if p.died is not None]
    assert len(dead) == 1
    assert ix.snapshot(b) == list(range(1, b + 1))
    assert ix.snapshot(b + 1) == list(range(1, b + 2))


def test_before_history_is_empty():
    _, ix = make()
    ix.insert(3, 5)
    assert ix.snapshot(0) == [] and ix.snapshot(4) == []
    assert not ix.point_query(3, 4)


def test_empty_index_queries():
    _, ix = make()
    assert ix.snapshot(3) == []
    assert not ix.point_query(1, 3)
    assert ix.interval_scan(1, 9) == []
    assert not ix.key_interval_query(1, 1, 9)


def test_errors():
    _, ix = make()
    ix.insert(1, 5)
    with pytest.raises(OrderError):
        ix.insert(2, 4)
    with pytest.raises(DuplicateKeyError):
        ix.insert(1, 6)
    with pytest.raises(MissingKeyError):
        ix.logical_delete(2, 6)
    with pytest.raises(ValueError):
        ix.interval_scan(5, 4)
    with pytest.raises(ValueError):
        ix.key_interval_query(1, 5, 4)
    # a rejected update leaves the clock where it was
    ix.insert(2, 5)
    assert ix.snapshot(5) == [1, 2]


def test_exit_and_reenter_same_timestamp():
    _, ix = make()
    ix.insert(1, 1)
    ix.logical_delete(1, 3)
    ix.insert(1, 3)
    assert ix.snapshot(2) == [1] and ix.snapshot(3) == [1]
    assert ix.key_history(1) == [(1, 3), (3, OPEN)]


def test_record_opened_and_closed_in_one_timestamp_vanishes():
    _, ix = make()
    ix.insert(1, 1)
    ix.insert(2, 2)
    ix.logical_delete(2, 2)
    assert ix.snapshot(2) == [1]
    assert not ix.key_interval_query(2, 0, 10)


# ---------------------------------------------------------------- three-cell example

def cell_index(spans):
    _, ix = make()
    ops = sorted([(s, "E", o) for o, s, _ in spans] + [(e, "X", o) for o, _, e in spans],
                 key=lambda op: (op[0], op[1] == "E"))
    replay(ix, ops)
    return ix


def test_cell_snapshot_and_scan():
    c2 = cell_index([(1, 3, 4), (2, 8, 9), (2, 10, 11), (3, 3, 4)])
    assert c2.snapshot(3) == [1, 3]
    assert c2.interval_scan(6, 8) == [2]
    assert c2.snapshot(8) == [2]


def test_cell_key_interval():
    c1 = cell_index([(1, 4, 5), (2, 7, 8)])
    assert c1.key_interval_query(2, 6, 8)
    assert not c1.key_interval_query(2, 8, 9)
    assert not c1.key_interval_query(3, 0, 20)


def test_interval_of_one_instant_is_snapshot():
    ops = random_log(3, 60, 40)
    _, ix = make(8)
    replay(ix, ops)
    for t in range(0, 62):
        assert ix.interval_scan(t, t) == ix.snapshot(t)


# ---------------------------------------------------------------- random logs vs oracle

@pytest.mark.parametrize("b,seed", [(8, 1), (10, 2), (12, 3), (16, 4), (42, 5)])
def test_random_log_matches_oracle(b, seed):
    ops = random_log(seed, 150, 120, max_ops=6, grow_until=90)
    store, ix = make(b)
    replay(ix, ops)
    oracle = SpanOracle(ops)
    horizon = ops[-1][0] + 1
    for t in range(horizon + 1):
        assert ix.snapshot(t) == oracle.live(t)
    for t1 in range(0, horizon, 7):
        for t2 in (t1, t1 + 3, t1 + 20):
            assert ix.interval_scan(t1, t2) == oracle.during(t1, t2)
            for key in range(0, 120, 11):
                assert ix.key_interval_query(key, t1, t2) == oracle.key_during(key, t1, t2)
                assert ix.point_query(key, t1) == oracle.key_during(key, t1, t1)
    assert ix.audit() == []


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), b=st.sampled_from([8, 9, 12, 16]),
       steps=st.integers(1, 80), pool=st.integers(1, 60))
def test_property_history_and_bounds(seed, b, steps, pool):
    ops = random_log(seed, steps, pool, max_ops=5, grow_until=steps // 2)
    store, ix = make(b)
    replay(ix, ops)
    oracle = SpanOracle(ops)
    for t in range(steps + 2):
        store.stats.reset()
        got = ix.snapshot(t)
        assert got == oracle.live(t)
        assert store.stats.reads <= 8 * max(len(got), 1) / b + ix.height_at(t)
    for t1 in range(0, steps + 1, 5):
        t2 = t1 + seed % 13
        store.stats.reset()
        got = ix.interval_scan(t1, t2)
        assert got == oracle.during(t1, t2)
        first = ix.roots[0].start if ix.roots else t1
        assert store.stats.reads <= 16 * max(len(got), 1) / b + ix.height_at(max(t1, first))
        scan = ix.last_scan
        assert scan.accessed_leaves <= scan.initial_leaves + 2 * scan.dead_leaves
    assert ix.audit() == []


def test_history_is_immutable_under_updates():
    ops = random_log(11, 120, 80, max_ops=5, grow_until=60)
    _, ix = make(8)
    before = {}
    for i, (t, kind, key) in enumerate(ops):
        if i % 10 == 0:
            before = {u: ix.snapshot(u) for u in range(t)}
        replay(ix, [(t, kind, key)])
        for u, snap in before.items():
            assert ix.snapshot(u) == snap


def test_underflow_merge_keeps_old_versions():
    b = 8
    store, ix = make(b)
    for k in range(1, 12):
        ix.insert(k, 1)
    ix.insert(12, 2)
    snaps = {t: ix.snapshot(t) for t in (1, 2)}
    assert len([p for p in leaves(store, ix) if p.died is None]) == 2
    pages = len(store)
    t = 3
    for k in range(1, 9):
        ix.logical_delete(k, t)
        t += 1
    assert len(store) > pages  # some restructure happened
    assert {u: ix.snapshot(u) for u in (1, 2)} == snaps
    assert ix.snapshot(t) == list(range(9, 13))
    assert ix.audit() == []


def test_growth_shrink_regrowth_scan():
    """Leaves split, die through deletions and split again inside one scanned window."""
    b = 8
    store, ix = make(b)
    ops = []
    for k in range(40):
        ops.append((1, "E", k))
    t = 2
    for k in range(35):
        ops.append((t, "X", k))
        t += 1
    for k in range(100, 140):
        ops.append((t, "E", k))
        t += 1
    replay(ix, ops)
    oracle = SpanOracle(ops)
    got = ix.interval_scan(1, t)
    assert got == oracle.during(1, t)
    scan = ix.last_scan
    assert scan.dead_leaves > 0
    assert scan.accessed_leaves <= scan.initial_leaves + 2 * scan.dead_leaves


def test_dead_leaves_point_to_successors():
    ops = random_log(21, 200, 100, max_ops=6, grow_until=100)
    store, ix = make(8)
    replay(ix, ops)
    for p in leaves(store, ix):
        if p.died is not None:
            assert 1 <= len(p.succ) <= 2
        else:
            assert p.succ == ()


def test_key_history_keeps_entry_times():
    _, ix = make(8)
    ops = [(1, "E", 5)] + [(t, "E", k) for t, k in zip(range(2, 40), range(10, 48))]
    ops += [(50, "X", 5), (60, "E", 5)]
    replay(ix, ops)
    assert ix.key_history(5) == [(1, 50), (60, OPEN)]


def test_dump_format():
    _, ix = make(8)
    replay(ix, random_log(2, 40, 30))
    pattern = re.compile(r"^\d+ (leaf|internal) \[(\((-inf|\d+),\d+,(\$|\d+)\),?)*\] succ=\[[\d,]*\]$")
    for line in ix.dump().splitlines():
        assert pattern.match(line), line


def test_stats_track_updates():
    _, ix = make(8)
    ops = random_log(4, 50, 30)
    replay(ix, ops)
    assert ix.stats.m_updates == len(ops)
    assert ix.stats.n_live == len(SpanOracle(ops).live(ops[-1][0]))

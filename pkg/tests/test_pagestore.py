import pickle

import pytest

from stpindex.pagestore import (
    INTERNAL, LEAF, LIST_NODE, IoStats, Page, PageFault, PageOverflow, PageStore, StoreConfig,
    record_capacity_for, reset_counters, summed_stats,
)


def test_capacity_from_page_geometry():
    assert record_capacity_for(512, 8, 4) == 42
    assert StoreConfig().record_capacity == 42


@pytest.mark.parametrize("bad", [0, 1, 3])
def test_capacity_below_four_rejected(bad):
    with pytest.raises(ValueError):
        StoreConfig(record_capacity=bad)


def test_first_allocation_is_zero():
    s = PageStore()
    assert s.allocate(LEAF) == 0
    assert s.stats.allocated_pages == 1


def test_allocations_are_distinct_and_counted():
    s = PageStore()
    ids = [s.allocate(LEAF) for _ in range(100)]
    assert len(set(ids)) == 100
    s.allocate(INTERNAL)
    assert s.stats.allocated_pages == 101


def test_allocate_rejects_unknown_kind():
    with pytest.raises(ValueError):
        PageStore().allocate("blob")


def test_read_after_write_round_trips():
    s = PageStore()
    pid = s.allocate(LEAF)
    s.write(pid, Page(LEAF, [1, 2, 3]))
    assert s.read(pid).records == [1, 2, 3]
    assert (s.stats.reads, s.stats.writes) == (1, 1)


def test_two_reads_count_twice_without_cache():
    s = PageStore()
    pid = s.allocate(LEAF)
    with s.operation():
        s.read(pid)
        s.read(pid)
    assert s.stats.reads == 2


def test_cache_deduplicates_inside_one_operation_only():
    s = PageStore(cache=True)
    pid = s.allocate(LEAF)
    with s.operation():
        s.read(pid)
        s.read(pid)
    assert s.stats.reads == 1
    s.read(pid)
    s.read(pid)
    assert s.stats.reads == 3


def test_unallocated_read_faults():
    with pytest.raises(PageFault):
        PageStore().read(999)


def test_full_page_accepted_and_overflow_rejected():
    s = PageStore()
    pid = s.allocate(LIST_NODE)
    s.write(pid, Page(LIST_NODE, list(range(42))))
    with pytest.raises(PageOverflow):
        s.write(pid, Page(LIST_NODE, list(range(43))))
    assert len(s.read(pid).records) == 42


def test_reads_hand_out_copies():
    s = PageStore()
    pid = s.allocate(LEAF)
    s.write(pid, Page(LEAF, [1]))
    page = s.read(pid)
    page.records.append(2)
    assert s.peek(pid).records == [1]


def test_peek_is_free():
    s = PageStore()
    pid = s.allocate(LEAF)
    s.peek(pid)
    assert s.stats.reads == 0


def test_counter_exactness_for_mixed_sequence():
    s = PageStore()
    pids = [s.allocate(LEAF) for _ in range(5)]
    for i in range(37):
        s.write(pids[i % 5], Page(LEAF, [i]))
    for i in range(53):
        s.read(pids[i % 5])
    assert s.stats.snapshot() == (53, 37, 5)


def test_dead_pages_stay_readable():
    s = PageStore()
    old = s.allocate(LEAF)
    s.write(old, Page(LEAF, ["v1"], died=3))
    for _ in range(10):
        s.write(s.allocate(LEAF), Page(LEAF, ["other"]))
    assert s.read(old) == Page(LEAF, ["v1"], died=3)


def test_reset_counters_keeps_allocation_count():
    a, b = PageStore(), PageStore()
    a.write(a.allocate(LEAF), Page(LEAF))
    b.read(b.allocate(LEAF))
    assert summed_stats(a, b) == IoStats(reads=1, writes=1, allocated_pages=2)
    reset_counters(a, b)
    assert summed_stats(a, b) == IoStats(reads=0, writes=0, allocated_pages=2)


def test_store_pickles():
    s = PageStore()
    s.write(s.allocate(LEAF), Page(LEAF, [(1, 2, 3)], succ=(4,)))
    t = pickle.loads(pickle.dumps(s))
    assert t.peek(0) == s.peek(0)

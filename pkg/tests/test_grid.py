import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import C1, C2, C3, THREE_CELL_ENTRIES
from stpindex.grid import (
    ENTER, EXIT, AlternationError, CellEvent, CellId, CellStats, DataError, GridSpec, Router,
    samples_to_events,
)

G10 = GridSpec(10, 10)


class Recorder:
    def __init__(self):
        self.seen = []

    def apply(self, cell, ev):
        self.seen.append((cell, ev))


def test_locate_corners_and_boundaries():
    assert G10.locate(0, 0) == CellId(0, 0)
    assert G10.locate(999.9, 999.9) == CellId(9, 9)
    assert G10.locate(100.0, 0) == CellId(1, 0)
    assert G10.locate(99.999, 100.0) == CellId(0, 1)


@pytest.mark.parametrize("pt", [(-0.1, 5), (5, -0.1), (1000, 5), (5, 1000)])
def test_locate_outside_universe(pt):
    with pytest.raises(ValueError):
        G10.locate(*pt)


@given(st.floats(0, 1000, exclude_max=True), st.floats(0, 1000, exclude_max=True))
def test_partition_property(x, y):
    c = G10.locate(x, y)
    assert c.col * 100 <= x < (c.col + 1) * 100
    assert c.row * 100 <= y < (c.row + 1) * 100
    cols, rows = G10.locate_many(np.array([x]), np.array([y]))
    assert (int(cols[0]), int(rows[0])) == tuple(c)


def test_non_square_universe():
    g = GridSpec(4, 2, min_x=-10, min_y=5, max_x=30, max_y=25)
    assert g.locate(-10, 5) == CellId(0, 0)
    assert g.locate(29.99, 24.99) == CellId(3, 1)
    assert len(g.cells()) == 8


def test_one_crossing():
    evs = samples_to_events(G10, 7, [(1, 50, 50), (2, 60, 50), (3, 150, 50)])
    assert evs == [
        (CellId(0, 0), CellEvent(7, 1, ENTER)),
        (CellId(0, 0), CellEvent(7, 3, EXIT)),
        (CellId(1, 0), CellEvent(7, 3, ENTER)),
    ]


def test_single_sample_enters_only():
    assert samples_to_events(G10, 1, [(4, 1, 1)]) == [(CellId(0, 0), CellEvent(1, 4, ENTER))]


def test_consecutive_instants_give_adjacent_rows():
    # cell (1,0) at t=3, then (0,0) from t=4, then elsewhere from t=5
    evs = samples_to_events(G10, 1, [(3, 150, 5), (4, 50, 5), (5, 550, 5)])
    rows = {}
    for cell, ev in evs:
        rows.setdefault(cell, []).append((ev.object, ev.t))
    assert rows[CellId(1, 0)] == [(1, 3), (1, 4)]
    assert rows[CellId(0, 0)] == [(1, 4), (1, 5)]


def test_non_increasing_samples_rejected():
    with pytest.raises(ValueError):
        samples_to_events(G10, 1, [(2, 1, 1), (2, 5, 5)])


def test_out_of_universe_samples_dropped():
    dropped = []
    evs = samples_to_events(G10, 1, [(1, 5, 5), (2, 5000, 5), (3, 5, 5)], dropped)
    assert dropped == [(1, 2, 5000, 5)]
    assert evs == [(CellId(0, 0), CellEvent(1, 1, ENTER))]


def test_route_delivers_entrances_in_order(three_cell_log):
    rec = Recorder()
    Router(rec).route(three_cell_log)
    got = sorted((ev.object, ev.t) for cell, ev in rec.seen if cell == C2 and ev.kind == ENTER)
    assert got == THREE_CELL_ENTRIES[C2]
    assert len(rec.seen) == len(three_cell_log)


def test_route_empty_stream():
    rec = Recorder()
    r = Router(rec)
    r.route([])
    assert rec.seen == [] and r.events == 0


def test_route_rejects_double_enter():
    r = Router(Recorder())
    with pytest.raises(AlternationError) as info:
        r.route([(C1, CellEvent(4, 1, ENTER)), (C1, CellEvent(4, 2, ENTER))])
    assert info.value.obj == 4 and info.value.cell == C1
    assert info.value.index == 1


def test_route_rejects_exit_without_enter():
    with pytest.raises(AlternationError):
        Router(Recorder()).route([(C3, CellEvent(1, 1, EXIT))])


def test_route_rejects_time_going_back():
    with pytest.raises(DataError):
        Router(Recorder()).route([(C1, CellEvent(1, 5, ENTER)), (C2, CellEvent(2, 4, ENTER))])


def test_route_rejects_enter_before_exit_at_same_time():
    with pytest.raises(DataError):
        Router(Recorder()).route([
            (C1, CellEvent(1, 1, ENTER)), (C2, CellEvent(1, 2, ENTER)), (C1, CellEvent(1, 2, EXIT)),
        ])


def test_route_accepts_exit_then_reenter_same_time():
    rec = Recorder()
    Router(rec).route([
        (C1, CellEvent(1, 1, ENTER)), (C1, CellEvent(1, 2, EXIT)), (C1, CellEvent(1, 2, ENTER)),
    ])
    assert len(rec.seen) == 3


def test_cell_stats():
    s = CellStats()
    for t, kind in [(1, ENTER), (1, ENTER), (3, EXIT), (5, ENTER), (5, EXIT)]:
        s.record(t, kind)
    assert [s.live_at(t) for t in range(7)] == [0, 2, 2, 1, 1, 1, 1]
    assert s.enters_upto(4) == 2 and s.enters_upto(5) == 3
    assert s.event_times_between(1, 5) == 2
    assert s.estimate(2, 6) == 3
    assert s.entries == 5

import pytest

from stpindex.grid import ENTER, EXIT, CellEvent, CellId, event_order

C1, C2, C3 = CellId(0, 0), CellId(1, 0), CellId(2, 0)

# Three cells and objects 1..3; each span is (object, enter, exit).
THREE_CELL_SPANS = {
    C1: [(1, 4, 5), (2, 7, 8)],
    C2: [(1, 3, 4), (2, 8, 9), (2, 10, 11), (3, 3, 4)],
    C3: [(2, 3, 4), (2, 9, 10), (3, 2, 3)],
}

# Entrance-only lists over the same three cells.
THREE_CELL_ENTRIES = {
    C1: [(1, 4), (2, 7)],
    C2: [(1, 3), (2, 8), (2, 10), (3, 3)],
    C3: [(2, 3), (2, 9), (3, 2)],
}


def spans_to_events(spans):
    events = []
    for cell, rows in spans.items():
        for obj, s, e in rows:
            events.append((cell, CellEvent(obj, s, ENTER)))
            if e is not None:
                events.append((cell, CellEvent(obj, e, EXIT)))
    events.sort(key=lambda item: (event_order(item), item[1].object))
    return events


@pytest.fixture
def three_cell_log():
    return spans_to_events(THREE_CELL_SPANS)


@pytest.fixture
def entry_only_log():
    return spans_to_events(
        {c: [(o, t, None) for o, t in rows] for c, rows in THREE_CELL_ENTRIES.items()}
    )


# acceptance verdicts, filled in by test_acceptance and echoed after the run
CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(CRITERIA):
        verdict, detail = CRITERIA[n]
        terminalreporter.write_line(f"{verdict} criterion {n}: {detail}")

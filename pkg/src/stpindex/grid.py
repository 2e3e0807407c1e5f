"""Uniform grid over the plane and conversion of position samples into cell events."""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Protocol, Sequence

import numpy as np

log = logging.getLogger(__name__)

ENTER = "E"
EXIT = "X"


class DataError(ValueError):
    """Malformed event data.

    ``index`` is the 0-based position of the offending event in the routed
    stream when the error comes from :class:`Router`.
    """

    index: Optional[int] = None


class AlternationError(DataError):
    def __init__(self, obj: int, cell: "CellId", message: str) -> None:
        super().__init__(f"object {obj} in cell {tuple(cell)}: {message}")
        self.obj = obj
        self.cell = cell


class CellId(NamedTuple):
    col: int
    row: int

    def __str__(self) -> str:
        return f"({self.col},{self.row})"


class CellEvent(NamedTuple):
    object: int
    t: int
    kind: str


def event_order(item: tuple[CellId, CellEvent]) -> tuple:
    """Sort key for routed events: by time, exits before enters."""
    ev = item[1]
    return (ev.t, 0 if ev.kind == EXIT else 1)


@dataclass(frozen=True)
class GridSpec:
    width_cells: int
    height_cells: int
    min_x: float = 0.0
    min_y: float = 0.0
    max_x: float = 1000.0
    max_y: float = 1000.0

    def __post_init__(self) -> None:
        if self.width_cells <= 0 or self.height_cells <= 0:
            raise ValueError("grid dimensions must be positive")
        if not (self.max_x > self.min_x and self.max_y > self.min_y):
            raise ValueError("universe must have positive extent")

    @property
    def cell_width(self) -> float:
        return (self.max_x - self.min_x) / self.width_cells

    @property
    def cell_height(self) -> float:
        return (self.max_y - self.min_y) / self.height_cells

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x < self.max_x and self.min_y <= y < self.max_y

    def locate(self, x: float, y: float) -> CellId:
        """Cell containing ``(x, y)``; cells are half-open ``[lo, hi)`` on both axes."""
        if not self.contains(x, y):
            raise ValueError(f"point ({x}, {y}) lies outside the universe")
        col = min(int((x - self.min_x) / self.cell_width), self.width_cells - 1)
        row = min(int((y - self.min_y) / self.cell_height), self.height_cells - 1)
        return CellId(col, row)

    def locate_many(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cols = np.floor((np.asarray(xs) - self.min_x) / self.cell_width).astype(np.int64)
        rows = np.floor((np.asarray(ys) - self.min_y) / self.cell_height).astype(np.int64)
        np.clip(cols, 0, self.width_cells - 1, out=cols)
        np.clip(rows, 0, self.height_cells - 1, out=rows)
        return cols, rows

    def cells(self) -> list[CellId]:
        return [CellId(c, r) for r in range(self.height_cells) for c in range(self.width_cells)]


def samples_to_events(
    grid: GridSpec, object_id: int, samples: Sequence[tuple[int, float, float]],
    dropped: Optional[list] = None,
) -> list[tuple[CellId, CellEvent]]:
    """Enter/exit events of one object from its ``(t, x, y)`` samples.

    An object is inside the cell of its most recent sample.  Samples outside
    the universe are skipped; when ``dropped`` is given they are appended to it.
    """
    events: list[tuple[CellId, CellEvent]] = []
    current: Optional[CellId] = None
    last_t = None
    for t, x, y in samples:
        if last_t is not None and t <= last_t:
            raise ValueError(f"object {object_id}: sample times must increase ({last_t} then {t})")
        last_t = t
        if not grid.contains(x, y):
            if dropped is not None:
                dropped.append((object_id, t, x, y))
            log.warning("object %s: dropping out-of-universe sample at t=%s", object_id, t)
            continue
        cell = grid.locate(x, y)
        if cell == current:
            continue
        if current is not None:
            events.append((current, CellEvent(object_id, t, EXIT)))
        events.append((cell, CellEvent(object_id, t, ENTER)))
        current = cell
    return events


class CellBackend(Protocol):
    def apply(self, cell: CellId, event: CellEvent) -> None: ...


class CellStats:
    """Per-cell catalog: live population and entrance counts over time.

    Kept in memory next to the indexes; reading it costs no page I/O.
    """

    __slots__ = ("times", "live", "enters", "entries")

    def __init__(self) -> None:
        self.times: list[int] = []
        self.live: list[int] = []
        self.enters: list[int] = []
        self.entries = 0

    def record(self, t: int, kind: str) -> None:
        self.entries += 1
        if not self.times or self.times[-1] != t:
            self.times.append(t)
            self.live.append(self.live[-1] if self.live else 0)
            self.enters.append(self.enters[-1] if self.enters else 0)
        if kind == ENTER:
            self.live[-1] += 1
            self.enters[-1] += 1
        else:
            self.live[-1] -= 1

    def live_at(self, t: int) -> int:
        i = bisect.bisect_right(self.times, t) - 1
        return self.live[i] if i >= 0 else 0

    def enters_upto(self, t: int) -> int:
        i = bisect.bisect_right(self.times, t) - 1
        return self.enters[i] if i >= 0 else 0

    def event_times_between(self, t1: int, t2: int) -> int:
        """Number of distinct event timestamps in ``(t1, t2]``."""
        return bisect.bisect_right(self.times, t2) - bisect.bisect_right(self.times, t1)

    def estimate(self, t1: int, t2: int) -> int:
        """Objects present at some instant of ``[t1, t2]``, assuming no re-entry."""
        return self.live_at(t1) + self.enters_upto(t2) - self.enters_upto(t1)


class Router:
    """Dispatch time-ordered cell events to a backend.

    Checks global time order and the per-(object, cell) enter/exit alternation,
    and maintains a :class:`CellStats` per cell.
    """

    def __init__(self, backend: CellBackend) -> None:
        self.backend = backend
        self.stats: dict[CellId, CellStats] = {}
        self.inside: set[tuple[int, CellId]] = set()
        self.events = 0
        self._last: Optional[tuple] = None

    def route(self, events: Iterable[tuple[CellId, CellEvent]]) -> None:
        for cell, ev in events:
            try:
                self._check(cell, ev)
            except DataError as exc:
                exc.index = self.events
                raise
            stats = self.stats.get(cell)
            if stats is None:
                stats = self.stats[cell] = CellStats()
            stats.record(ev.t, ev.kind)
            self.backend.apply(cell, ev)
            self.events += 1

    def _check(self, cell: CellId, ev: CellEvent) -> None:
        key = (ev.t, 0 if ev.kind == EXIT else 1)
        if self._last is not None and key < self._last:
            raise DataError(
                f"event for object {ev.object} at t={ev.t} is out of order"
                " (events must be sorted by time, exits before enters)"
            )
        self._last = key
        slot = (ev.object, cell)
        if ev.kind == ENTER:
            if slot in self.inside:
                raise AlternationError(ev.object, cell, f"enters at t={ev.t} while inside")
            self.inside.add(slot)
        elif ev.kind == EXIT:
            if slot not in self.inside:
                raise AlternationError(ev.object, cell, f"exits at t={ev.t} without entering")
            self.inside.remove(slot)
        else:
            raise DataError(f"unknown event kind {ev.kind!r}")

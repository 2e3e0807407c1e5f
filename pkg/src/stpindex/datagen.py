"""Synthetic moving-object workloads: trajectories, cell events and query sets.

Objects start at uniform positions, pick a speed every step from a
zipf-skewed distribution over ``[0, velocity_max]`` and follow a heading that
drifts by a small Gaussian turn each step, bouncing off the universe border.
Everything is driven by one ``numpy`` generator seeded from the config, so a
config fully determines its output.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

import numpy as np

from .engine import Instant, Interval, Oracle, Predicate, StpQuery, WITH_TIME
from .grid import ENTER, EXIT, CellEvent, CellId, GridSpec, event_order

log = logging.getLogger(__name__)

SPEED_BUCKETS = 51


@dataclass(frozen=True)
class GenConfig:
    seed: int = 1
    num_objects: int = 10_000
    universe_miles: float = 1000.0
    grid_width: int = 32
    grid_height: int = 32
    duration: int = 500
    velocity_max: float = 50.0
    zipf_skew: float = 1.0
    heading_sigma: float = 0.3
    query_count: int = 200
    predicates_per_query_min: int = 1
    predicates_per_query_max: int = 10
    target_output_range: tuple[int, int] = (5, 50)
    instant_fraction: float = 0.5
    max_interval: int = 20
    query_attempts: int = 50

    def __post_init__(self) -> None:
        for name in ("num_objects", "duration", "query_count", "max_interval", "query_attempts"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("universe_miles", "zipf_skew", "grid_width", "grid_height",
                     "predicates_per_query_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.velocity_max < 0 or self.heading_sigma < 0:
            raise ValueError("velocity_max and heading_sigma must be non-negative")
        lo, hi = self.target_output_range
        if not 0 <= lo <= hi:
            raise ValueError(f"target_output_range ({lo}, {hi}) must satisfy 0 <= lo <= hi")
        if not 1 <= self.predicates_per_query_min <= self.predicates_per_query_max:
            raise ValueError("predicates_per_query_min must lie in [1, predicates_per_query_max]")
        if not 0.0 <= self.instant_fraction <= 1.0:
            raise ValueError("instant_fraction must lie in [0, 1]")

    @property
    def grid(self) -> GridSpec:
        u = self.universe_miles
        return GridSpec(self.grid_width, self.grid_height, 0.0, 0.0, u, u)


def speed_distribution(velocity_max: float, skew: float) -> tuple[np.ndarray, np.ndarray]:
    """Speed values and their probabilities: bucket ``i`` has weight ``1/(i+1)**skew``."""
    ranks = np.arange(SPEED_BUCKETS)
    weights = 1.0 / (ranks + 1.0) ** skew
    return ranks * (velocity_max / (SPEED_BUCKETS - 1)), weights / weights.sum()


def _reflect(pos: np.ndarray, vel: np.ndarray, size: float) -> None:
    # bounce until inside [0, size); a step is never longer than the universe in practice
    for _ in range(4):
        low = pos < 0
        pos[low] = -pos[low]
        vel[low] = -vel[low]
        high = pos >= size
        pos[high] = 2 * size - pos[high]
        vel[high] = -vel[high]
        pos[pos >= size] = np.nextafter(size, 0)
        if not (low.any() or high.any()):
            break


def trajectories(config: GenConfig) -> Iterable[tuple[int, np.ndarray, np.ndarray]]:
    """Yield ``(t, xs, ys)`` for t = 1..duration; object ``i`` sits at index ``i``."""
    rng = np.random.default_rng(config.seed)
    n, u = config.num_objects, config.universe_miles
    speeds, probs = speed_distribution(config.velocity_max, config.zipf_skew)
    xs = rng.uniform(0.0, u, n)
    ys = rng.uniform(0.0, u, n)
    heading = rng.uniform(0.0, 2 * math.pi, n)
    for t in range(1, config.duration + 1):
        yield t, xs.copy(), ys.copy()
        step = rng.choice(speeds, size=n, p=probs)
        heading = heading + rng.normal(0.0, config.heading_sigma, n)
        vx = np.cos(heading) * step
        vy = np.sin(heading) * step
        xs = xs + vx
        ys = ys + vy
        _reflect(xs, vx, u)
        _reflect(ys, vy, u)
        heading = np.arctan2(vy, vx)


def generate_trajectories(config: GenConfig) -> list[tuple[CellId, CellEvent]]:
    """Cell events of the whole population, sorted by time with exits first."""
    grid = config.grid
    events: list[tuple[CellId, CellEvent]] = []
    prev_c = prev_r = None
    for t, xs, ys in trajectories(config):
        cols, rows = grid.locate_many(xs, ys)
        if prev_c is None:
            moved = np.arange(config.num_objects)
        else:
            moved = np.flatnonzero((cols != prev_c) | (rows != prev_r))
            for o in moved.tolist():
                events.append((CellId(int(prev_c[o]), int(prev_r[o])), CellEvent(o, t, EXIT)))
        for o in moved.tolist():
            events.append((CellId(int(cols[o]), int(rows[o])), CellEvent(o, t, ENTER)))
        prev_c, prev_r = cols, rows
    return events


# ----------------------------------------------------------------------
# queries

def _window(rng: np.random.Generator, config: GenConfig, t: int):
    if rng.random() < config.instant_fraction:
        return Instant(t)
    length = int(rng.integers(1, config.max_interval + 1))
    t1 = max(1, t - int(rng.integers(0, length + 1)))
    return Interval(t1, min(config.duration, t1 + length))


def generate_queries(
    config: GenConfig, events: list[tuple[CellId, CellEvent]], oracle: Optional[Oracle] = None
) -> list[StpQuery]:
    """Time-constrained queries whose true output size lies in ``target_output_range``.

    Each query is grown predicate by predicate: a new predicate is drawn around
    a random surviving candidate's position and kept only if the candidate set
    stays inside the target range.  The final answer is re-checked with the
    oracle; queries that miss the range after ``query_attempts`` tries are
    replaced by the closest miss and a warning is logged.
    """
    oracle = oracle or Oracle(events)
    rng = np.random.default_rng([config.seed, 1])
    lo, hi = config.target_output_range
    visits: dict[int, list[tuple[CellId, int, float]]] = {}
    for cell, per_obj in oracle.spans.items():
        for obj, spans in per_obj.items():
            for s, e in spans:
                visits.setdefault(obj, []).append((cell, s, math.inf if e is None else e))
    objects = sorted(visits)
    if not objects:
        return []

    def draw_predicate(anchor: int) -> Predicate:
        cell, s, e = visits[anchor][int(rng.integers(len(visits[anchor])))]
        t = int(rng.integers(s, min(e, config.duration + 1)))
        return Predicate(cell, _window(rng, config, t))

    def build_one() -> tuple[StpQuery, int]:
        n = int(rng.integers(config.predicates_per_query_min, config.predicates_per_query_max + 1))
        best: Optional[tuple[list[Predicate], list[int]]] = None
        for _ in range(config.query_attempts):
            seed = draw_predicate(objects[int(rng.integers(len(objects)))])
            cand = oracle.predicate(seed)
            if len(cand) >= lo:
                best = ([seed], cand)
                break
            if best is None or len(cand) > len(best[1]):
                best = ([seed], cand)
        preds, cand = best
        tries = 0
        while len(preds) < n and tries < config.query_attempts and cand:
            tries += 1
            pred = draw_predicate(cand[int(rng.integers(len(cand)))])
            narrowed = [o for o in cand if oracle.satisfies(o, pred)]
            if len(narrowed) >= lo or len(narrowed) >= len(cand):
                preds.append(pred)
                cand = narrowed
        query = StpQuery(WITH_TIME, tuple(preds))
        return query, len(oracle.query(query))

    out = []
    for _ in range(config.query_count):
        best_q, best_miss = None, None
        for _ in range(config.query_attempts):
            q, k = build_one()
            miss = max(lo - k, k - hi, 0)
            if best_miss is None or miss < best_miss:
                best_q, best_miss = q, miss
            if miss == 0:
                break
        if best_miss:
            log.warning("query %d: output size misses target range by %d", len(out), best_miss)
        out.append(best_q)
    return out


# ----------------------------------------------------------------------
# file formats

EVENT_HEADER = ["t", "object_id", "cell_col", "cell_row", "kind"]
TRAJECTORY_HEADER = ["t", "object_id", "x", "y"]


def write_events(events: Iterable[tuple[CellId, CellEvent]], fh: TextIO) -> int:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    n = 0
    for cell, ev in events:
        w.writerow([ev.t, ev.object, cell.col, cell.row, ev.kind])
        n += 1
    return n


class EventFormatError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_events(fh: TextIO) -> list[tuple[CellId, CellEvent]]:
    """Parse an event CSV; errors carry the 1-based file line number."""
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return []
    if [h.strip() for h in header] != EVENT_HEADER:
        raise EventFormatError(f"expected header {','.join(EVENT_HEADER)}", 1)
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise EventFormatError(f"expected 5 fields, found {len(row)}", lineno)
        try:
            t, obj, c, r = (int(v) for v in row[:4])
        except ValueError:
            raise EventFormatError(f"non-integer field in {row!r}", lineno) from None
        kind = row[4].strip()
        if kind not in (ENTER, EXIT):
            raise EventFormatError(f"kind must be E or X, found {kind!r}", lineno)
        out.append((CellId(c, r), CellEvent(obj, t, kind)))
    return out


def write_trajectories(config: GenConfig, fh: TextIO) -> int:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    n = 0
    for t, xs, ys in trajectories(config):
        for o, (x, y) in enumerate(zip(xs.tolist(), ys.tolist())):
            w.writerow([t, o, f"{x:.4f}", f"{y:.4f}"])
            n += 1
    return n


def is_sorted(events: list[tuple[CellId, CellEvent]]) -> bool:
    keys = [event_order(e) for e in events]
    return all(a <= b for a, b in zip(keys, keys[1:]))

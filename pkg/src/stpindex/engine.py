"""Spatio-temporal pattern queries: model, text format, evaluation and oracle.

A query *with time* is a list of ``(cell, T)`` predicates where ``T`` is an
instant or a closed interval; an object satisfies ``(cell, T)`` when it is in
``cell`` at some instant of ``T``.  A query *with order* lists cells only and
matches objects entering them at strictly increasing times.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .baselines.listsol import ordered_visit
from .grid import ENTER, EXIT, AlternationError, CellEvent, CellId, CellStats, GridSpec

WITH_TIME = "TIME"
WITH_ORDER = "ORDER"


@dataclass(frozen=True)
class Instant:
    t: int

    @property
    def window(self) -> tuple[int, int]:
        return (self.t, self.t)

    def __str__(self) -> str:
        return str(self.t)


@dataclass(frozen=True)
class Interval:
    t1: int
    t2: int

    def __post_init__(self) -> None:
        if self.t1 > self.t2:
            raise ValueError(f"interval [{self.t1},{self.t2}] is reversed")

    @property
    def window(self) -> tuple[int, int]:
        return (self.t1, self.t2)

    def __str__(self) -> str:
        return f"[{self.t1},{self.t2}]"


TemporalConstraint = Union[Instant, Interval]


@dataclass(frozen=True)
class Predicate:
    cell: CellId
    constraint: Optional[TemporalConstraint] = None

    def __str__(self) -> str:
        if self.constraint is None:
            return str(self.cell)
        return f"{self.cell}@{self.constraint}"


@dataclass(frozen=True)
class StpQuery:
    variant: str
    predicates: tuple[Predicate, ...]

    def __post_init__(self) -> None:
        if not self.predicates:
            raise ValueError("a query needs at least one predicate")
        if self.variant == WITH_TIME:
            if any(p.constraint is None for p in self.predicates):
                raise ValueError("every predicate of a TIME query needs a temporal constraint")
        elif self.variant == WITH_ORDER:
            if any(p.constraint is not None for p in self.predicates):
                raise ValueError("ORDER query predicates take no temporal constraint")
        else:
            raise ValueError(f"unknown query variant {self.variant!r}")

    @classmethod
    def with_time(cls, *preds: tuple[CellId, TemporalConstraint]) -> "StpQuery":
        return cls(WITH_TIME, tuple(Predicate(CellId(*c), t) for c, t in preds))

    @classmethod
    def with_order(cls, *cells) -> "StpQuery":
        return cls(WITH_ORDER, tuple(Predicate(CellId(*c)) for c in cells))

    def __str__(self) -> str:
        return f"{self.variant} " + " ; ".join(str(p) for p in self.predicates)


@dataclass
class PredicateResult:
    objects: list[int]
    io_cost: int = 0


# ----------------------------------------------------------------------
# text format

class QueryParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_PRED = re.compile(
    r"\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*"
    r"(?:@\s*(?:(\d+)|\[\s*(\d+)\s*,\s*(\d+)\s*\]))?\s*$"
)


def parse_query(text: str, line: int = 1) -> StpQuery:
    stripped = text.strip()
    head, _, rest = stripped.partition(" ")
    variant = head.upper()
    if variant not in (WITH_TIME, WITH_ORDER):
        raise QueryParseError(f"expected TIME or ORDER, found {head!r}", line, 1)
    offset = len(text) - len(text.lstrip()) + len(head) + 1
    preds = []
    for chunk in rest.split(";"):
        col = offset + 1 + len(chunk) - len(chunk.lstrip())
        offset += len(chunk) + 1
        m = _PRED.match(chunk)
        if m is None:
            raise QueryParseError(f"malformed predicate {chunk.strip()!r}", line, col)
        c, r, t, t1, t2 = m.groups()
        cell = CellId(int(c), int(r))
        if t is not None:
            constraint: Optional[TemporalConstraint] = Instant(int(t))
        elif t1 is not None:
            if int(t1) > int(t2):
                raise QueryParseError(f"reversed interval [{t1},{t2}]", line, col)
            constraint = Interval(int(t1), int(t2))
        else:
            constraint = None
        preds.append(Predicate(cell, constraint))
    try:
        return StpQuery(variant, tuple(preds))
    except ValueError as exc:
        raise QueryParseError(str(exc), line, 1) from None


def parse_queries(lines: Iterable[str]) -> list[StpQuery]:
    out = []
    for i, raw in enumerate(lines, start=1):
        if raw.strip() and not raw.lstrip().startswith("#"):
            out.append(parse_query(raw, i))
    return out


def format_result(objects: Sequence[int], reads: int) -> str:
    ids = ",".join(f"O{o}" for o in objects)
    return f"{ids} io={reads}" if ids else f"io={reads}"


# ----------------------------------------------------------------------
# evaluation

@dataclass
class Engine:
    """Evaluate queries against one backend.

    ``catalog`` maps cells to their :class:`CellStats`; it drives the
    optional seed heuristic and the choice between checking candidates one by
    one and evaluating a predicate in full.
    """

    backend: object
    catalog: Mapping[CellId, CellStats] = field(default_factory=dict)
    grid: Optional[GridSpec] = None
    seed_heuristic: bool = False

    def _check_cells(self, query: StpQuery) -> None:
        if self.grid is None:
            return
        for p in query.predicates:
            if not (0 <= p.cell.col < self.grid.width_cells and 0 <= p.cell.row < self.grid.height_cells):
                raise ValueError(f"unknown cell {p.cell}")

    def evaluate_predicate(self, pred: Predicate) -> PredicateResult:
        before = self.backend.io.reads
        objs = self.backend.evaluate(pred.cell, *pred.constraint.window)
        return PredicateResult(objs, self.backend.io.reads - before)

    def estimate(self, pred: Predicate) -> int:
        stats = self.catalog.get(pred.cell)
        return stats.estimate(*pred.constraint.window) if stats else 0

    def choose_seed(self, query: StpQuery) -> int:
        if not self.seed_heuristic:
            return 0
        sizes = [self.estimate(p) for p in query.predicates]
        return sizes.index(min(sizes))

    def eval_with_time(self, query: StpQuery) -> list[int]:
        if query.variant != WITH_TIME:
            raise ValueError("eval_with_time needs a TIME query")
        self._check_cells(query)
        seed = self.choose_seed(query)
        candidates = self.evaluate_predicate(query.predicates[seed]).objects
        for i, pred in enumerate(query.predicates):
            if i == seed:
                continue
            if not candidates:
                break
            t1, t2 = pred.constraint.window
            stats = self.catalog.get(pred.cell)
            verify = self.backend.cost_verify(len(candidates), pred.cell, t1, t2)
            full = self.backend.cost_eval(pred.cell, t1, t2, stats)
            if verify <= full:
                candidates = self.backend.verify_many(candidates, pred.cell, t1, t2)
            else:
                hits = set(self.backend.evaluate(pred.cell, t1, t2))
                candidates = [o for o in candidates if o in hits]
        return candidates

    def eval_with_order(self, query: StpQuery) -> list[int]:
        if query.variant != WITH_ORDER:
            raise ValueError("eval_with_order needs an ORDER query")
        self._check_cells(query)
        cells = [p.cell for p in query.predicates]
        if hasattr(self.backend, "eval_order"):
            return self.backend.eval_order(cells)
        out = []
        for obj in self.backend.members_ever(cells[0]):
            times = []
            for cell in cells:
                ts = self.backend.entry_times(obj, cell)
                if not ts:
                    break
                times.append(ts)
            else:
                if ordered_visit(times):
                    out.append(obj)
        return out

    def run(self, query: StpQuery) -> list[int]:
        if query.variant == WITH_TIME:
            return self.eval_with_time(query)
        return self.eval_with_order(query)


def eval_with_time(query: StpQuery, backend, **kwargs) -> list[int]:
    return Engine(backend, **kwargs).eval_with_time(query)


def eval_with_order(query: StpQuery, backend, **kwargs) -> list[int]:
    return Engine(backend, **kwargs).eval_with_order(query)


# ----------------------------------------------------------------------
# ground truth

class Oracle:
    """Membership intervals rebuilt by a linear pass over the raw event log."""

    def __init__(self, events: Iterable[tuple[CellId, CellEvent]]) -> None:
        self.spans: dict[CellId, dict[int, list[list]]] = {}
        for cell, ev in events:
            per_obj = self.spans.setdefault(CellId(*cell), {})
            spans = per_obj.setdefault(ev.object, [])
            inside = bool(spans) and spans[-1][1] is None
            if ev.kind == ENTER:
                if inside:
                    raise AlternationError(ev.object, cell, f"enters at t={ev.t} while inside")
                spans.append([ev.t, None])
            elif ev.kind == EXIT:
                if not inside:
                    raise AlternationError(ev.object, cell, f"exits at t={ev.t} without entering")
                spans[-1][1] = ev.t
            else:
                raise AlternationError(ev.object, cell, f"unknown event kind {ev.kind!r}")

    def satisfies(self, obj: int, pred: Predicate) -> bool:
        spans = self.spans.get(pred.cell, {}).get(obj, ())
        t1, t2 = pred.constraint.window
        return any(s <= t2 and (e is None or e > t1) for s, e in spans)

    def predicate(self, pred: Predicate) -> list[int]:
        return sorted(o for o in self.spans.get(pred.cell, {}) if self.satisfies(o, pred))

    def population(self, cell: CellId) -> int:
        return len(self.spans.get(cell, {}))

    def entries(self, obj: int, cell: CellId) -> list[int]:
        return [s for s, _ in self.spans.get(cell, {}).get(obj, ())]

    def query(self, query: StpQuery) -> list[int]:
        first = query.predicates[0].cell
        candidates = sorted(self.spans.get(first, {}))
        if query.variant == WITH_TIME:
            return [o for o in candidates if all(self.satisfies(o, p) for p in query.predicates)]
        cells = [p.cell for p in query.predicates]
        return [o for o in candidates if ordered_visit([self.entries(o, c) for c in cells])]


def oracle_eval(query: StpQuery, events: Iterable[tuple[CellId, CellEvent]]) -> list[int]:
    return Oracle(events).query(query)

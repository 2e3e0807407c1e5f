"""The primitive solution: two structures per cell.

Structure A answers "was object o in the cell during T": a B+-tree keyed by
``(object, enter_time)`` whose value is the exit time, so the upper levels
discriminate on object ids and the leaves hold each object's intervals in
time order.

Structure B answers "who was in the cell at t": a B+-tree keyed by timestamp
pointing at a page-chained list of the object ids present from that
timestamp on.  Every timestamp at which the cell changes gets a complete
copy of the membership list.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from ..grid import ENTER, CellEvent, CellId
from ..pagestore import LIST_NODE, IoStats, Page, PageStore, reset_counters, summed_stats
from .btree import BOTTOM, BTree

OPEN = math.inf


class CapacityExceeded(RuntimeError):
    """The primitive backend refuses logs larger than its configured cap."""


class StructureA:
    def __init__(self, store: PageStore) -> None:
        self.tree = BTree(store)
        self.open: dict[int, int] = {}

    def apply(self, event: CellEvent) -> None:
        if event.kind == ENTER:
            self.tree.insert((event.object, event.t), OPEN)
            self.open[event.object] = event.t
        else:
            start = self.open.pop(event.object)
            self.tree.update((event.object, start), event.t)

    def intervals(self, obj: int, t2: float = OPEN) -> list[tuple[int, float]]:
        return [(k[1], end) for k, end in self.tree.range((obj, BOTTOM), (obj, t2))]

    def verify(self, obj: int, t1: int, t2: int) -> bool:
        return any(end > t1 for _, end in self.intervals(obj, t2))

    def objects(self) -> list[int]:
        out = []
        for (obj, _), _ in self.tree.items():
            if not out or out[-1] != obj:
                out.append(obj)
        return out


class StructureB:
    def __init__(self, store: PageStore) -> None:
        self.store = store
        self.tree = BTree(store)
        self.members: set[int] = set()
        self.pending: Optional[int] = None
        self.list_pages = 0

    def apply(self, event: CellEvent) -> None:
        if self.pending is not None and event.t != self.pending:
            self.materialize()
        self.pending = event.t
        if event.kind == ENTER:
            self.members.add(event.object)
        else:
            self.members.discard(event.object)

    def materialize(self) -> None:
        """Write the full membership list for the pending timestamp."""
        if self.pending is None:
            return
        ids = sorted(self.members)
        b = self.store.capacity
        chunks = [ids[i:i + b] for i in range(0, len(ids), b)] or [[]]
        pids = [self.store.allocate(LIST_NODE) for _ in chunks]
        for i, chunk in enumerate(chunks):
            nxt = pids[i + 1] if i + 1 < len(pids) else None
            self.store.write(pids[i], Page(LIST_NODE, chunk, next=nxt))
        self.list_pages += len(pids)
        self.tree.insert(self.pending, pids[0])
        self.pending = None

    def read_list(self, head: int) -> list[int]:
        out = []
        pid: Optional[int] = head
        while pid is not None:
            page = self.store.read(pid)
            out.extend(page.records)
            pid = page.next
        return out

    def evaluate(self, t1: int, t2: int) -> list[int]:
        first = self.tree.floor(t1)
        heads = [first[1]] if first is not None else []
        if t2 > t1:
            heads.extend(head for _, head in self.tree.range(t1 + 1, t2))
        found: set[int] = set()
        for head in heads:
            found.update(self.read_list(head))
        return sorted(found)

    def timestamps(self) -> int:
        return self.tree.size


class PrimitiveBackend:
    name = "primitive"

    def __init__(self, store_a: PageStore, store_b: PageStore, max_events: Optional[int] = None) -> None:
        self.store_a = store_a
        self.store_b = store_b
        self.max_events = max_events
        self.events = 0
        self.a: dict[CellId, StructureA] = {}
        self.b: dict[CellId, StructureB] = {}

    def apply(self, cell: CellId, event: CellEvent) -> None:
        self.events += 1
        if self.max_events is not None and self.events > self.max_events:
            raise CapacityExceeded(
                f"primitive backend is capped at {self.max_events} events; Structure B"
                " copies the whole membership list at every timestamp, so its space"
                " grows with population x timestamps"
            )
        if cell not in self.a:
            self.a[cell] = StructureA(self.store_a)
            self.b[cell] = StructureB(self.store_b)
        self.a[cell].apply(event)
        self.b[cell].apply(event)

    def flush(self) -> None:
        for sb in self.b.values():
            sb.materialize()

    def evaluate(self, cell: CellId, t1: int, t2: int) -> list[int]:
        sb = self.b.get(cell)
        if sb is None:
            return []
        sb.materialize()
        return sb.evaluate(t1, t2)

    def verify(self, obj: int, cell: CellId, t1: int, t2: int) -> bool:
        sa = self.a.get(cell)
        return sa is not None and sa.verify(obj, t1, t2)

    def verify_many(self, objs: Sequence[int], cell: CellId, t1: int, t2: int) -> list[int]:
        return [o for o in objs if self.verify(o, cell, t1, t2)]

    def entry_times(self, obj: int, cell: CellId) -> list[int]:
        sa = self.a.get(cell)
        return [s for s, _ in sa.intervals(obj)] if sa else []

    def members_ever(self, cell: CellId) -> list[int]:
        sa = self.a.get(cell)
        return sa.objects() if sa else []

    def pages_a(self) -> int:
        return len(self.store_a)

    def pages_b(self) -> int:
        return len(self.store_b)

    def pages_total(self) -> int:
        return self.pages_a() + self.pages_b()

    @property
    def io(self) -> IoStats:
        return summed_stats(self.store_a, self.store_b)

    def reset_io(self) -> None:
        reset_counters(self.store_a, self.store_b)

    def cost_eval(self, cell: CellId, t1: int, t2: int, stats=None) -> float:
        sb = self.b.get(cell)
        if sb is None:
            return 0
        lists = 1 + (stats.event_times_between(t1, t2) if stats is not None else t2 - t1)
        per_list = max(1, math.ceil(stats.live_at(t1) / self.store_b.capacity)) if stats else 1
        return sb.tree.height + lists * per_list

    def cost_verify(self, n: int, cell: CellId, t1: int, t2: int) -> float:
        sa = self.a.get(cell)
        return n * ((sa.tree.height if sa else 0) + 1)

"""The list solution: one list of ``(object, t, kind)`` entries per cell.

Entries are kept in ``(object, t)`` order and stored fully packed across a
chain of pages.  Every predicate evaluation reads the whole chain.
"""

from __future__ import annotations

import bisect
from typing import Iterable, NamedTuple, Optional, Sequence

from ..grid import ENTER, EXIT, CellEvent, CellId
from ..pagestore import LIST_NODE, IoStats, Page, PageStore, reset_counters


class ListEntry(NamedTuple):
    object: int
    t: int
    kind: str


def _sort_key(e: ListEntry) -> tuple:
    return (e.object, e.t, 0 if e.kind == EXIT else 1)


class CellList:
    """Sorted entries of one cell plus their page chain.

    New entries land in an in-memory staging list; :meth:`flush` repacks the
    chain so that every page but the last is full.
    """

    def __init__(self, store: PageStore) -> None:
        self.store = store
        self.entries: list[ListEntry] = []
        self._keys: list[tuple] = []
        self.pages: list[int] = []
        self.dirty = False

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, entry: ListEntry) -> None:
        k = _sort_key(entry)
        i = bisect.bisect_right(self._keys, k)
        self._keys.insert(i, k)
        self.entries.insert(i, entry)
        self.dirty = True

    def flush(self) -> None:
        if not self.dirty:
            return
        b = self.store.capacity
        chunks = [self.entries[i:i + b] for i in range(0, len(self.entries), b)]
        while len(self.pages) < len(chunks):
            self.pages.append(self.store.allocate(LIST_NODE))
        for i, chunk in enumerate(chunks):
            nxt = self.pages[i + 1] if i + 1 < len(chunks) else None
            self.store.write(self.pages[i], Page(LIST_NODE, list(chunk), next=nxt))
        self.dirty = False

    def scan(self):
        """Read the chain page by page, yielding entries."""
        if not self.pages:
            return
        pid: Optional[int] = self.pages[0]
        while pid is not None:
            page = self.store.read(pid)
            yield from page.records
            pid = page.next


def memberships(entries: Iterable[ListEntry]):
    """Yield ``(object, enter, exit)`` from entries sorted by ``(object, t)``."""
    open_obj = None
    open_t = None
    for e in entries:
        if e.kind == ENTER:
            if open_obj is not None:
                yield open_obj, open_t, float("inf")
            open_obj, open_t = e.object, e.t
        else:
            yield e.object, open_t, e.t
            open_obj = None
    if open_obj is not None:
        yield open_obj, open_t, float("inf")


class ListBackend:
    name = "list"

    def __init__(self, store: PageStore) -> None:
        self.store = store
        self.lists: dict[CellId, CellList] = {}

    def apply(self, cell: CellId, event: CellEvent) -> None:
        lst = self.lists.get(cell)
        if lst is None:
            lst = self.lists[cell] = CellList(self.store)
        lst.add(ListEntry(event.object, event.t, event.kind))

    def flush(self) -> None:
        for lst in self.lists.values():
            lst.flush()

    def list_length(self, cell: CellId) -> int:
        lst = self.lists.get(cell)
        return len(lst) if lst else 0

    def entries(self, cell: CellId) -> list[ListEntry]:
        """Scan the whole list of ``cell``."""
        lst = self.lists.get(cell)
        if lst is None:
            return []
        lst.flush()
        return list(lst.scan())

    def evaluate(self, cell: CellId, t1: int, t2: int) -> list[int]:
        out = []
        for obj, s, e in memberships(self.entries(cell)):
            if s <= t2 and e > t1 and (not out or out[-1] != obj):
                out.append(obj)
        return out

    def verify(self, obj: int, cell: CellId, t1: int, t2: int) -> bool:
        return bool(self.verify_many([obj], cell, t1, t2))

    def verify_many(self, objs: Sequence[int], cell: CellId, t1: int, t2: int) -> list[int]:
        # one pass over the list checks every candidate
        hits = set(self.evaluate(cell, t1, t2))
        return [o for o in objs if o in hits]

    def eval_order(self, cells: Sequence[CellId]) -> list[int]:
        """Objects entering ``cells`` at strictly increasing times, merging the lists.

        Each distinct list is read once; the merge walks all lists in object
        order and keeps, per object, the entrance times in every list.
        """
        per_cell: dict[CellId, dict[int, list[int]]] = {}
        for cell in dict.fromkeys(cells):
            times: dict[int, list[int]] = {}
            for e in self.entries(cell):
                if e.kind == ENTER:
                    times.setdefault(e.object, []).append(e.t)
            per_cell[cell] = times
        common = set(per_cell[cells[0]])
        for cell in cells[1:]:
            common &= per_cell[cell].keys()
        out = []
        for obj in sorted(common):
            if ordered_visit([per_cell[c][obj] for c in cells]):
                out.append(obj)
        return out

    def pages_total(self) -> int:
        return sum(len(lst.pages) for lst in self.lists.values())

    def cost_eval(self, cell: CellId, t1: int, t2: int, stats=None) -> float:
        return -(-self.list_length(cell) // self.store.capacity)

    def cost_verify(self, n: int, cell: CellId, t1: int, t2: int) -> float:
        return self.cost_eval(cell, t1, t2)

    @property
    def io(self) -> IoStats:
        return self.store.stats

    def reset_io(self) -> None:
        reset_counters(self.store)


def ordered_visit(entry_times: Sequence[Sequence[int]]) -> bool:
    """True iff one entrance time per list can be picked strictly increasing."""
    last = -1
    for times in entry_times:
        nxt = [t for t in times if t > last]
        if not nxt:
            return False
        last = min(nxt)
    return True

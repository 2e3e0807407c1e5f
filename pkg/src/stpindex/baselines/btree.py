"""Plain paged B+-tree with unique keys, used by the primitive solution.

Leaves hold ``(key, value)`` pairs and are chained left to right.  Internal
nodes hold ``(low_key, child)`` pairs whose first key is a sentinel lower than
every real key.
"""

from __future__ import annotations

import bisect
from typing import Any, Iterator, Optional

from ..pagestore import INTERNAL, LEAF, Page, PageStore


class _Bottom:
    """Sentinel smaller than anything it is compared with."""

    def __lt__(self, other: object) -> bool:
        return other is not self

    def __le__(self, other: object) -> bool:
        return True

    def __gt__(self, other: object) -> bool:
        return False

    def __ge__(self, other: object) -> bool:
        return other is self

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return "BOTTOM"


BOTTOM = _Bottom()


class BTree:
    def __init__(self, store: PageStore, capacity: Optional[int] = None) -> None:
        self.store = store
        self.capacity = capacity or store.capacity
        self.root: Optional[int] = None
        self.height = 0
        self.size = 0
        self.page_ids: list[int] = []

    def _new(self, kind: str, records: list, next: Optional[int] = None) -> int:
        pid = self.store.allocate(kind)
        self.page_ids.append(pid)
        self.store.write(pid, Page(kind, records, next=next))
        return pid

    def _path(self, key) -> list[tuple[int, Page, int]]:
        path = []
        pid = self.root
        while True:
            page = self.store.read(pid)
            if page.kind == LEAF:
                path.append((pid, page, -1))
                return path
            i = bisect.bisect_right([r[0] for r in page.records], key) - 1
            path.append((pid, page, i))
            pid = page.records[max(i, 0)][1]

    def insert(self, key, value: Any) -> None:
        if self.root is None:
            self.root = self._new(LEAF, [(key, value)])
            self.height = 1
            self.size = 1
            return
        path = self._path(key)
        pid, leaf, _ = path[-1]
        keys = [r[0] for r in leaf.records]
        i = bisect.bisect_left(keys, key)
        if i < len(keys) and keys[i] == key:
            raise KeyError(f"duplicate key {key!r}")
        leaf.records.insert(i, (key, value))
        self.size += 1
        appended = i == len(keys)
        level = len(path) - 1
        while True:
            pid, page, _ = path[level]
            if len(page.records) <= self.capacity:
                self.store.write(pid, page)
                return
            # appends fill the left node completely, like sequential loading
            cut = self.capacity if appended else len(page.records) // 2
            right = page.records[cut:]
            page.records = page.records[:cut]
            if page.kind == LEAF:
                rid = self._new(LEAF, right, next=page.next)
                page.next = rid
            else:
                rid = self._new(INTERNAL, right)
            self.store.write(pid, page)
            sep = right[0][0]
            if level == 0:
                self.root = self._new(INTERNAL, [(BOTTOM, pid), (sep, rid)])
                self.height += 1
                return
            parent_id, parent, slot = path[level - 1]
            parent.records.insert(max(slot, 0) + 1, (sep, rid))
            appended = appended and max(slot, 0) + 1 == len(parent.records) - 1
            level -= 1

    def update(self, key, value: Any) -> None:
        pid, leaf, _ = self._path(key)[-1]
        for i, (k, _) in enumerate(leaf.records):
            if k == key:
                leaf.records[i] = (key, value)
                self.store.write(pid, leaf)
                return
        raise KeyError(key)

    def get(self, key, default: Any = None) -> Any:
        if self.root is None:
            return default
        leaf = self._path(key)[-1][1]
        for k, v in leaf.records:
            if k == key:
                return v
        return default

    def floor(self, key) -> Optional[tuple]:
        """Pair with the greatest key <= ``key``, or ``None``."""
        if self.root is None:
            return None
        leaf = self._path(key)[-1][1]
        i = bisect.bisect_right([r[0] for r in leaf.records], key) - 1
        return leaf.records[i] if i >= 0 else None

    def range(self, lo, hi) -> Iterator[tuple]:
        """Pairs with ``lo <= key <= hi`` in key order."""
        if self.root is None:
            return
        leaf = self._path(lo)[-1][1]
        while True:
            for k, v in leaf.records:
                if k > hi:
                    return
                if k >= lo:
                    yield k, v
            if leaf.next is None:
                return
            leaf = self.store.read(leaf.next)

    def items(self) -> Iterator[tuple]:
        if self.root is None:
            return
        pid = self.root
        page = self.store.read(pid)
        while page.kind != LEAF:
            page = self.store.read(page.records[0][1])
        while True:
            yield from page.records
            if page.next is None:
                return
            page = self.store.read(page.next)

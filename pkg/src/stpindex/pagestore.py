"""Simulated secondary memory with exact node-access accounting.

Every index backend in this package keeps its nodes in a :class:`PageStore`.
A page holds at most ``record_capacity`` records; each :meth:`PageStore.read`
and :meth:`PageStore.write` is one I/O.  Pages are never freed, so pages that
an index has retired stay readable for historical queries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

LEAF = "leaf"
INTERNAL = "internal"
LIST_NODE = "list-node"

PAGE_KINDS = (LEAF, INTERNAL, LIST_NODE)


class PageFault(LookupError):
    """Access to a page id that was never allocated."""


class PageOverflow(ValueError):
    """Attempt to store more records in a page than it can hold."""


def record_capacity_for(page_size: int = 512, key_bytes: int = 8, pointer_bytes: int = 4) -> int:
    """Number of ``(key, pointer)`` elements that fit in one page."""
    if page_size <= 0 or key_bytes <= 0 or pointer_bytes < 0:
        raise ValueError("page geometry must be positive")
    return page_size // (key_bytes + pointer_bytes)


@dataclass(frozen=True)
class StoreConfig:
    record_capacity: int = record_capacity_for()
    page_size_bytes: int = 512

    def __post_init__(self) -> None:
        if self.record_capacity < 4:
            raise ValueError(f"record_capacity must be >= 4, got {self.record_capacity}")
        if self.page_size_bytes <= 0:
            raise ValueError("page_size_bytes must be positive")


@dataclass
class IoStats:
    reads: int = 0
    writes: int = 0
    allocated_pages: int = 0

    def reset(self) -> None:
        self.reads = 0
        self.writes = 0
        self.allocated_pages = 0

    def snapshot(self) -> tuple[int, int, int]:
        return (self.reads, self.writes, self.allocated_pages)


def reset_counters(*stores: "PageStore") -> None:
    """Zero read/write counters between measured runs; allocation counts stay."""
    for store in stores:
        store.stats.reads = 0
        store.stats.writes = 0


def summed_stats(*stores: "PageStore") -> IoStats:
    return IoStats(
        reads=sum(s.stats.reads for s in stores),
        writes=sum(s.stats.writes for s in stores),
        allocated_pages=sum(s.stats.allocated_pages for s in stores),
    )


class Page:
    """One block of secondary memory.

    ``records`` is the payload.  The remaining attributes are header fields:
    ``next`` chains list pages, ``succ`` holds the successor pages of a retired
    tree node, ``born``/``died`` bound its lifespan and ``born_live`` is the
    number of live records it was created with.
    """

    __slots__ = ("kind", "records", "next", "succ", "born", "died", "born_live")

    def __init__(
        self,
        kind: str,
        records: Optional[list] = None,
        next: Optional[int] = None,
        succ: tuple = (),
        born: Any = None,
        died: Any = None,
        born_live: Optional[int] = None,
    ) -> None:
        self.kind = kind
        self.records = [] if records is None else records
        self.next = next
        self.succ = succ
        self.born = born
        self.died = died
        self.born_live = born_live

    def copy(self) -> "Page":
        return Page(
            self.kind, list(self.records), self.next, self.succ, self.born, self.died, self.born_live
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Page):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.records == other.records
            and self.next == other.next
            and self.succ == other.succ
            and self.born == other.born
            and self.died == other.died
            and self.born_live == other.born_live
        )

    def __repr__(self) -> str:
        return f"Page({self.kind!r}, {len(self.records)} records)"


class PageStore:
    """In-memory page store.

    ``read`` hands out copies, so a caller has to ``write`` a modified page back
    for the change to persist.  With ``cache=True`` repeated reads of the same
    page inside one :meth:`operation` are counted once; outside an operation
    the flag has no effect.
    """

    def __init__(self, config: Optional[StoreConfig] = None, cache: bool = False) -> None:
        self.config = config or StoreConfig()
        self.capacity = self.config.record_capacity
        self.stats = IoStats()
        self.cache = cache
        self._pages: list[Page] = []
        self._seen: Optional[set[int]] = None

    def __len__(self) -> int:
        return len(self._pages)

    def allocate(self, kind: str) -> int:
        if kind not in PAGE_KINDS:
            raise ValueError(f"unknown page kind {kind!r}")
        self._pages.append(Page(kind))
        self.stats.allocated_pages += 1
        return len(self._pages) - 1

    def read(self, page_id: int) -> Page:
        page = self._get(page_id)
        if self._seen is None:
            self.stats.reads += 1
        elif page_id not in self._seen:
            self._seen.add(page_id)
            self.stats.reads += 1
        return page.copy()

    def write(self, page_id: int, page: Page) -> None:
        self._get(page_id)
        if len(page.records) > self.capacity:
            raise PageOverflow(
                f"page {page_id}: {len(page.records)} records exceed capacity {self.capacity}"
            )
        self._pages[page_id] = page.copy()
        self.stats.writes += 1

    def peek(self, page_id: int) -> Page:
        """Uncounted read for dumps and invariant checkers."""
        return self._get(page_id).copy()

    def operation(self) -> "_Operation":
        """Context manager scoping the optional per-operation read cache."""
        return _Operation(self)

    def _get(self, page_id: int) -> Page:
        if not 0 <= page_id < len(self._pages):
            raise PageFault(f"page {page_id} was never allocated")
        return self._pages[page_id]


class _Operation:
    def __init__(self, store: PageStore) -> None:
        self.store = store
        self.outer: Optional[set[int]] = None

    def __enter__(self) -> PageStore:
        self.outer = self.store._seen
        if self.store.cache and self.outer is None:
            self.store._seen = set()
        return self.store

    def __exit__(self, *exc: object) -> None:
        self.store._seen = self.outer

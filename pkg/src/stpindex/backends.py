"""Backend adaptor for the multiversion index, and a factory for all three backends.

Every backend exposes the same surface to the engine:

``apply(cell, event)``, ``flush()``, ``evaluate(cell, t1, t2)``,
``verify(obj, cell, t1, t2)``, ``verify_many(objs, cell, t1, t2)``,
``cost_eval(cell, t1, t2, stats)``, ``cost_verify(n, cell, t1, t2)``,
``pages_total()`` and an ``io`` property with the summed counters.

Windows ``[t1, t2]`` are inclusive; an instant is ``t1 == t2``.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .baselines.listsol import ListBackend
from .baselines.primitive import PrimitiveBackend
from .grid import ENTER, CellEvent, CellId, CellStats
from .mvindex import MvConfig, MvIndex
from .pagestore import IoStats, PageStore, StoreConfig, reset_counters

BACKEND_NAMES = ("list", "primitive", "advanced")


class AdvancedBackend:
    name = "advanced"

    def __init__(self, store: PageStore, config: Optional[MvConfig] = None) -> None:
        self.store = store
        self.config = config or MvConfig.from_capacity(store.capacity)
        self.indexes: dict[CellId, MvIndex] = {}

    def index(self, cell: CellId) -> Optional[MvIndex]:
        return self.indexes.get(cell)

    def apply(self, cell: CellId, event: CellEvent) -> None:
        ix = self.indexes.get(cell)
        if ix is None:
            ix = self.indexes[cell] = MvIndex(self.store, self.config)
        if event.kind == ENTER:
            ix.insert(event.object, event.t)
        else:
            ix.logical_delete(event.object, event.t)

    def flush(self) -> None:
        pass

    def evaluate(self, cell: CellId, t1: int, t2: int) -> list[int]:
        ix = self.indexes.get(cell)
        if ix is None:
            return []
        if t1 == t2:
            return ix.snapshot(t1)
        return ix.interval_scan(t1, t2)

    def verify(self, obj: int, cell: CellId, t1: int, t2: int) -> bool:
        ix = self.indexes.get(cell)
        if ix is None:
            return False
        if t1 == t2:
            return ix.point_query(obj, t1)
        return ix.key_interval_query(obj, t1, t2)

    def verify_many(self, objs: Sequence[int], cell: CellId, t1: int, t2: int) -> list[int]:
        return [o for o in objs if self.verify(o, cell, t1, t2)]

    def entry_times(self, obj: int, cell: CellId) -> list[int]:
        ix = self.indexes.get(cell)
        return [s for s, _ in ix.key_history(obj)] if ix else []

    def members_ever(self, cell: CellId) -> list[int]:
        ix = self.indexes.get(cell)
        if ix is None or ix.now is None:
            return []
        return ix.interval_scan(0, ix.now)

    def pages_total(self) -> int:
        return len(self.store)

    def height(self, cell: CellId, t: Optional[int] = None) -> int:
        ix = self.indexes.get(cell)
        if ix is None:
            return 0
        if t is None:
            return ix.height
        # windows opening before the first update are scanned from the first version
        return ix.height_at(max(t, ix.roots[0].start))

    def cost_eval(self, cell: CellId, t1: int, t2: int, stats: Optional[CellStats]) -> float:
        ix = self.indexes.get(cell)
        if ix is None:
            return 0
        k = stats.estimate(t1, t2) if stats else ix.stats.n_live
        # leaves run about half full after restructures
        return ix.height + 2 * k / self.config.b * (1 if t1 == t2 else 2)

    def cost_verify(self, n: int, cell: CellId, t1: int, t2: int) -> float:
        ix = self.indexes.get(cell)
        if ix is None:
            return 0
        return n * (ix.height + (0 if t1 == t2 else 1))

    @property
    def io(self) -> IoStats:
        return self.store.stats

    def reset_io(self) -> None:
        reset_counters(self.store)


def make_backend(
    name: str,
    store_config: Optional[StoreConfig] = None,
    mv_config: Optional[MvConfig] = None,
    max_events: Optional[int] = None,
):
    store_config = store_config or StoreConfig()
    if name == "advanced":
        return AdvancedBackend(PageStore(store_config), mv_config)
    if name == "list":
        return ListBackend(PageStore(store_config))
    if name == "primitive":
        return PrimitiveBackend(PageStore(store_config), PageStore(store_config), max_events)
    raise ValueError(f"unknown backend {name!r}; choose from {', '.join(BACKEND_NAMES)}")


"""Partially persistent (multiversion) B+-tree over object ids.

Each cell of the grid owns one :class:`MvIndex`.  An object entering the cell
is inserted with lifespan ``[t, $)``; leaving the cell closes the lifespan.
Every past version stays queryable: a query at time ``t`` only looks at
records whose lifespan contains ``t``.

Structure
---------
* Leaves hold :class:`DataRecord` ``(key, start, end, info)``; internal nodes
  hold :class:`IndexRecord` ``(key, start, end, child)``.  ``end == OPEN``
  marks a live record.
* The root is always an internal node.  A root whose only live child is an
  internal node is collapsed.
* Overflow (more than ``b`` records) and underflow (fewer than ``d`` live
  records) trigger a version split: the node dies, its live records are copied
  into one or two fresh nodes, merging with a neighbour first when too few are
  left.  A node born that way starts with ``split_low..split_high`` live
  records.
* A dead node keeps pointers to the nodes that replaced it, which lets
  :meth:`MvIndex.interval_scan` walk the leaf history forward in time.
* Several updates may share a timestamp.  They all belong to the same
  version, so a record created and closed within one timestamp is removed
  physically.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

from .pagestore import INTERNAL, LEAF, Page, PageStore

OPEN = math.inf
MIN_KEY = -1


class DataRecord(NamedTuple):
    key: int
    start: int
    end: float
    info: Any = None


class IndexRecord(NamedTuple):
    key: int
    start: int
    end: float
    child: int


class OrderError(ValueError):
    """Update timestamp older than the latest update."""


class DuplicateKeyError(KeyError):
    pass


class MissingKeyError(KeyError):
    pass


@dataclass(frozen=True)
class MvConfig:
    """Node capacity and restructure thresholds.

    ``d`` is the minimum number of live records of a non-root node; a node
    created by a restructure holds between ``split_low`` and ``split_high``
    live records.
    """

    b: int
    d: int
    split_low: int
    split_high: int

    @classmethod
    def from_capacity(cls, b: int, d: Optional[int] = None, split_low: Optional[int] = None,
                      split_high: Optional[int] = None) -> "MvConfig":
        return cls(
            b=b,
            d=b // 4 if d is None else d,
            split_low=(3 * b) // 8 if split_low is None else split_low,
            split_high=(7 * b) // 8 if split_high is None else split_high,
        )

    def __post_init__(self) -> None:
        b, d, lo, hi = self.b, self.d, self.split_low, self.split_high
        if not 1 <= d < lo < hi < b:
            raise ValueError(f"need 1 <= d < split_low < split_high < b, got {d}, {lo}, {hi}, {b}")
        # a key split of an overflowing node must land inside [lo, hi]
        if (hi + 1) // 2 < lo:
            raise ValueError("split_low too large: halves of split_high + 1 records fall below it")
        if math.ceil((b + 1) / 2) > hi or math.ceil((lo - 1 + b) / 2) > hi:
            raise ValueError("split_high too small to hold half of an overflowing node")


@dataclass
class IndexStats:
    m_updates: int = 0
    n_live: int = 0
    pages: int = 0


@dataclass
class ScanStats:
    initial_leaves: int = 0
    dead_leaves: int = 0
    accessed_leaves: int = 0


class RootEntry(NamedTuple):
    start: int
    end: float
    root: int
    height: int



def _choose(records, key):
    """Record routing ``key``: greatest separator <= key, else the leftmost."""
    best = None
    lowest = None
    for r in records:
        if r.key <= key and (best is None or r.key > best.key):
            best = r
        if lowest is None or r.key < lowest.key:
            lowest = r
    return best if best is not None else lowest


class MvIndex:
    """Multiversion B+-tree stored in a :class:`PageStore`.

    Updates must arrive in non-decreasing timestamp order.  Queries may target
    any timestamp; timestamps after the latest update see the current version.
    """

    def __init__(self, store: PageStore, config: Optional[MvConfig] = None) -> None:
        self.store = store
        self.config = config or MvConfig.from_capacity(store.capacity)
        if self.config.b > store.capacity:
            raise ValueError(
                f"node capacity {self.config.b} exceeds page capacity {store.capacity}"
            )
        self.stats = IndexStats()
        self.now: Optional[int] = None
        self.versions: list[int] = []
        self.page_ids: list[int] = []
        self.last_scan = ScanStats()
        self._roots: list[RootEntry] = []
        self._root_starts: list[int] = []

    # ------------------------------------------------------------------
    # bookkeeping

    @property
    def height(self) -> int:
        return self._roots[-1].height if self._roots else 0

    def height_at(self, t: int) -> int:
        entry = self._root_entry(t)
        return entry.height if entry else 0

    @property
    def roots(self) -> list[RootEntry]:
        return list(self._roots)

    def _root_entry(self, t: int) -> Optional[RootEntry]:
        i = bisect.bisect_right(self._root_starts, t) - 1
        if i < 0:
            return None
        entry = self._roots[i]
        return entry if t < entry.end else None

    def _set_root(self, pid: int, t: int, height: int) -> None:
        if self._roots and self._roots[-1].start == t:
            # the previous root never covered a full version
            self._roots[-1] = RootEntry(t, OPEN, pid, height)
            return
        if self._roots:
            self._roots[-1] = self._roots[-1]._replace(end=t)
        self._roots.append(RootEntry(t, OPEN, pid, height))
        self._root_starts.append(t)

    def _allocate(self, kind: str, records: list, born: int, born_live: Optional[int]) -> int:
        pid = self.store.allocate(kind)
        self.page_ids.append(pid)
        self.stats.pages += 1
        self.store.write(pid, Page(kind, records, born=born, born_live=born_live))
        return pid

    def _check_time(self, t: int) -> None:
        if self.now is not None and t < self.now:
            raise OrderError(f"update at {t} precedes latest update at {self.now}")

    def _advance(self, t: int) -> None:
        if self.now != t:
            self.versions.append(t)
        self.now = t
        self.stats.m_updates += 1

    # ------------------------------------------------------------------
    # updates

    def insert(self, key: int, t: int, info: Any = None) -> None:
        if key <= MIN_KEY:
            raise ValueError(f"keys must be > {MIN_KEY}")
        self._check_time(t)
        if self._roots:
            path = self._descend(key)
            leaf = path[-1][1]
            if any(r.key == key and r.end == OPEN for r in leaf.records):
                raise DuplicateKeyError(f"key {key} is already live")
        self._advance(t)
        self.stats.n_live += 1
        record = DataRecord(key, t, OPEN, info)
        if not self._roots:
            leaf_id = self._allocate(LEAF, [record], t, None)
            root_id = self._allocate(INTERNAL, [IndexRecord(MIN_KEY, t, OPEN, leaf_id)], t, None)
            self._set_root(root_id, t, 2)
            return
        leaf.records.append(record)
        self._settle(path, len(path) - 1, t)

    def logical_delete(self, key: int, t: int) -> None:
        if not self._roots:
            raise MissingKeyError(f"key {key} is not live")
        self._check_time(t)
        path = self._descend(key)
        leaf = path[-1][1]
        for i, r in enumerate(leaf.records):
            if r.key == key and r.end == OPEN:
                break
        else:
            raise MissingKeyError(f"key {key} is not live")
        self._advance(t)
        self.stats.n_live -= 1
        if r.start == t:
            del leaf.records[i]
        else:
            leaf.records[i] = r._replace(end=t)
        self._settle(path, len(path) - 1, t)

    def _descend(self, key: int) -> list[tuple[int, Page]]:
        path = []
        pid = self._roots[-1].root
        while True:
            page = self.store.read(pid)
            path.append((pid, page))
            if page.kind == LEAF:
                return path
            pid = _choose([r for r in page.records if r.end == OPEN], key).child

    def _exempt(self, path: list[tuple[int, Page]], level: int) -> bool:
        if level == 0:
            return True
        if level == 1:
            return sum(1 for r in path[0][1].records if r.end == OPEN) == 1
        return False

    def _settle(self, path: list[tuple[int, Page]], level: int, t: int) -> None:
        pid, page = path[level]
        cfg = self.config
        if len(page.records) > cfg.b:
            self._restructure(path, level, t)
        elif not self._exempt(path, level) and sum(1 for r in page.records if r.end == OPEN) < cfg.d:
            self._restructure(path, level, t)
        else:
            self.store.write(pid, page)
            if level == 0:
                self._collapse(pid, page, t)

    def _kill(self, pid: int, page: Page, t: int, succ: tuple) -> None:
        kept = []
        for r in page.records:
            if r.end == OPEN:
                if r.start == t:
                    continue
                r = r._replace(end=t)
            kept.append(r)
        page.records = kept
        page.died = t
        page.succ = succ
        self.store.write(pid, page)

    def _restructure(self, path: list[tuple[int, Page]], level: int, t: int) -> None:
        cfg = self.config
        pid, node = path[level]
        live = [r for r in node.records if r.end == OPEN]

        if level == 0:
            self._split_root(pid, node, live, t)
            return

        parent_id, parent = path[level - 1]
        exempt = self._exempt(path, level)
        siblings = sorted((r for r in parent.records if r.end == OPEN), key=lambda r: r.key)
        pos = next(i for i, r in enumerate(siblings) if r.child == pid)
        victims = [(pid, node, siblings[pos])]

        if not exempt and len(live) < cfg.split_low and len(siblings) > 1:
            j = pos + 1 if pos + 1 < len(siblings) else pos - 1
            sib_rec = siblings[j]
            sib = self.store.read(sib_rec.child)
            live.extend(r for r in sib.records if r.end == OPEN)
            victims.append((sib_rec.child, sib, sib_rec))

        live.sort(key=lambda r: r.key)
        n = len(live)
        groups = [live] if n <= cfg.split_high else [live[: n // 2], live[n // 2:]]
        lower = min(v[2].key for v in victims)
        keys = [lower] + [g[0].key for g in groups[1:]]
        new_exempt = exempt and len(groups) == 1

        new_ids = []
        for g in groups:
            # leaf copies keep the key's entry time; index copies start with the new node
            copies = list(g) if node.kind == LEAF else [r._replace(start=t) for r in g]
            new_ids.append(self._allocate(node.kind, copies, t, None if new_exempt else len(copies)))
        succ = tuple(new_ids)
        dead_children = set()
        for vid, vpage, _ in victims:
            self._kill(vid, vpage, t, succ)
            dead_children.add(vid)

        records = []
        for r in parent.records:
            if r.end == OPEN and r.child in dead_children:
                if r.start == t:
                    continue
                r = r._replace(end=t)
            records.append(r)
        for k, c in zip(keys, new_ids):
            records.append(IndexRecord(k, t, OPEN, c))
        parent.records = records
        self._settle(path, level - 1, t)

    def _split_root(self, pid: int, node: Page, live: list, t: int) -> None:
        cfg = self.config
        height = self.height
        live.sort(key=lambda r: r.key)
        n = len(live)
        if n > cfg.split_high:
            halves = [live[: n // 2], live[n // 2:]]
            children = [
                self._allocate(INTERNAL, [r._replace(start=t) for r in h], t, len(h))
                for h in halves
            ]
            keys = [MIN_KEY, halves[1][0].key]
            new_root = self._allocate(
                INTERNAL, [IndexRecord(k, t, OPEN, c) for k, c in zip(keys, children)], t, None
            )
            succ = tuple(children)
            height += 1
        else:
            new_root = self._allocate(INTERNAL, [r._replace(start=t) for r in live], t, None)
            succ = (new_root,)
        self._kill(pid, node, t, succ)
        self._set_root(new_root, t, height)
        if n <= cfg.split_high:
            self._collapse(new_root, self.store.read(new_root), t)

    def _collapse(self, pid: int, root: Page, t: int) -> None:
        while True:
            live = [r for r in root.records if r.end == OPEN]
            if len(live) != 1:
                return
            child = self.store.read(live[0].child)
            if child.kind == LEAF:
                return
            self._kill(pid, root, t, (live[0].child,))
            self._set_root(live[0].child, t, self.height - 1)
            pid, root = live[0].child, child

    # ------------------------------------------------------------------
    # queries

    def snapshot(self, t: int) -> list[int]:
        """Keys live at ``t``, sorted."""
        entry = self._root_entry(t)
        if entry is None:
            return []
        out = []
        stack = [entry.root]
        read = self.store.read
        while stack:
            page = read(stack.pop())
            valid = [r for r in page.records if r.start <= t < r.end]
            if page.kind == LEAF:
                out.extend(r.key for r in valid)
            else:
                stack.extend(r.child for r in valid)
        out.sort()
        return out

    def point_query(self, key: int, t: int) -> bool:
        entry = self._root_entry(t)
        if entry is None:
            return False
        pid = entry.root
        while True:
            page = self.store.read(pid)
            valid = [r for r in page.records if r.start <= t < r.end]
            if page.kind == LEAF:
                return any(r.key == key for r in valid)
            if not valid:
                return False
            pid = _choose(valid, key).child

    def key_interval_query(self, key: int, t1: int, t2: int) -> bool:
        """True iff ``key`` was live at some instant of ``[t1, t2]``."""
        for _ in self._key_records(key, t1, t2, first_only=True):
            return True
        return False

    def key_history(self, key: int, t1: int = 0, t2: Optional[int] = None) -> list[tuple[int, float]]:
        """Membership intervals ``[start, end)`` of ``key`` intersecting ``[t1, t2]``.

        Version splits copy live records without changing their start, so
        copies of one interval share a start and are folded into one span.
        """
        if t2 is None:
            t2 = self.now if self.now is not None else t1
        ends: dict[int, float] = {}
        for r in self._key_records(key, t1, t2):
            ends[r.start] = max(ends.get(r.start, r.end), r.end)
        return sorted(ends.items())

    def _key_records(self, key: int, t1: int, t2: int, first_only: bool = False):
        if t1 > t2:
            raise ValueError(f"empty interval [{t1}, {t2}]")
        stack = []
        for entry in self._roots:
            if entry.start <= t2 and entry.end > t1:
                stack.append((entry.root, max(t1, entry.start), min(t2, entry.end - 1)))
        seen = set()
        while stack:
            pid, lo, hi = stack.pop()
            if (pid, lo, hi) in seen:
                continue
            seen.add((pid, lo, hi))
            page = self.store.read(pid)
            if page.kind == LEAF:
                for r in page.records:
                    if r.key == key and r.start <= hi and r.end > lo:
                        yield r
                        if first_only:
                            return
                continue
            cand = [r for r in page.records if r.start <= hi and r.end > lo]
            instants = {lo}
            for r in cand:
                if lo < r.start <= hi:
                    instants.add(r.start)
                if lo < r.end <= hi:
                    instants.add(r.end)
            chosen = {}
            for tau in instants:
                valid = [r for r in cand if r.start <= tau < r.end]
                if valid:
                    r = _choose(valid, key)
                    chosen[r] = r
            for r in chosen:
                stack.append((r.child, max(lo, r.start), min(hi, r.end - 1)))

    def interval_scan(self, t1: int, t2: int) -> list[int]:
        """Keys live at some instant of ``[t1, t2]``, sorted.

        Descends to the leaves live at ``t1`` and then follows successor
        pointers of leaves that die inside ``(t1, t2]``.  Leaf counts of the
        latest call are kept in :attr:`last_scan`.
        """
        if t1 > t2:
            raise ValueError(f"empty interval [{t1}, {t2}]")
        self.last_scan = ScanStats()
        if not self._roots or t2 < self._roots[0].start:
            return []
        t1 = max(t1, self._roots[0].start)
        read = self.store.read
        leaves = []
        stack = [self._root_entry(t1).root]
        while stack:
            pid = stack.pop()
            page = read(pid)
            if page.kind == LEAF:
                leaves.append((pid, page))
            else:
                stack.extend(r.child for r in page.records if r.start <= t1 < r.end)
        visited = {pid for pid, _ in leaves}
        queue = deque(leaves)
        stats = ScanStats(initial_leaves=len(leaves), accessed_leaves=len(leaves))
        out = set()
        while queue:
            _, page = queue.popleft()
            for r in page.records:
                if r.start <= t2 and r.end > t1:
                    out.add(r.key)
            if page.died is not None and t1 < page.died <= t2:
                stats.dead_leaves += 1
                for s in page.succ:
                    if s not in visited:
                        visited.add(s)
                        queue.append((s, read(s)))
                        stats.accessed_leaves += 1
        self.last_scan = stats
        return sorted(out)

    # ------------------------------------------------------------------
    # diagnostics (uncounted reads)

    def dump(self) -> str:
        lines = []
        for pid in self.page_ids:
            page = self.store.peek(pid)
            recs = ",".join(f"({_fmt_key(r.key)},{r.start},{_fmt_end(r.end)})" for r in page.records)
            succ = ",".join(str(s) for s in page.succ)
            lines.append(f"{pid} {page.kind} [{recs}] succ=[{succ}]")
        return "\n".join(lines)

    def audit(self) -> list[str]:
        """Return violations of the structural invariants (empty when sound).

        Checks, for every version, that each non-root node holds at least
        ``d`` live records, that every node holds at most ``b`` records, and
        that every node created by a restructure started with
        ``split_low..split_high`` live records.
        """
        cfg = self.config
        problems = []
        peek = self.store.peek
        for pid in self.page_ids:
            page = peek(pid)
            if len(page.records) > cfg.b:
                problems.append(f"page {pid} holds {len(page.records)} records")
            if page.born_live is not None and not cfg.split_low <= page.born_live <= cfg.split_high:
                problems.append(f"page {pid} born with {page.born_live} live records")
        for t in self.versions:
            entry = self._root_entry(t)
            if entry is None:
                continue
            root = peek(entry.root)
            top = [r for r in root.records if r.start <= t < r.end]
            sole = len(top) == 1
            stack = [(r.child, 1) for r in top]
            while stack:
                pid, level = stack.pop()
                page = peek(pid)
                valid = [r for r in page.records if r.start <= t < r.end]
                if len(valid) < cfg.d and not (sole and level == 1):
                    problems.append(f"page {pid} has {len(valid)} live records at {t}")
                if page.kind != LEAF:
                    stack.extend((r.child, level + 1) for r in valid)
        return problems


def _fmt_end(end: float) -> str:
    return "$" if end == OPEN else str(end)


def _fmt_key(key: int) -> str:
    return "-inf" if key == MIN_KEY else str(key)


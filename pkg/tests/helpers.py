"""Random update logs and a brute-force membership oracle shared by the tests."""

import math
import random

from stpindex.mvindex import MvIndex


def random_log(seed, steps, key_pool, max_ops=4, grow_until=None):
    """``(t, kind, key)`` with deletes before inserts inside each timestamp.

    Before ``grow_until`` inserts are favoured; afterwards deletes are.
    """
    rng = random.Random(seed)
    live, ops = set(), []
    for t in range(1, steps + 1):
        growing = grow_until is None or t <= grow_until
        n = rng.randint(0, max_ops)
        dels = [k for k in sorted(live) if rng.random() < (0.05 if growing else 0.3)][:n]
        for k in dels:
            ops.append((t, "X", k))
            live.discard(k)
        free = [k for k in range(key_pool) if k not in live and k not in dels]
        ins = rng.sample(free, min(len(free), n if growing else max(0, n - 3)))
        for k in sorted(ins):
            ops.append((t, "E", k))
            live.add(k)
    return ops


def replay(ix: MvIndex, ops):
    for t, kind, key in ops:
        if kind == "E":
            ix.insert(key, t)
        else:
            ix.logical_delete(key, t)


class SpanOracle:
    def __init__(self, ops):
        self.spans = {}
        for t, kind, key in ops:
            if kind == "E":
                self.spans.setdefault(key, []).append([t, math.inf])
            else:
                self.spans[key][-1][1] = t

    def live(self, t):
        return sorted(k for k, ss in self.spans.items() if any(s <= t < e for s, e in ss))

    def during(self, t1, t2):
        return sorted(k for k, ss in self.spans.items() if any(s <= t2 and e > t1 for s, e in ss))

    def key_during(self, key, t1, t2):
        return any(s <= t2 and e > t1 for s, e in self.spans.get(key, ()))

"""Benchmark harness: build every backend on one workload and record node accesses.

Outputs (all CSV with a header row):

``bench.csv``
    one row per backend and query: ``backend,query_id,output_size,reads,writes,pages_total``,
    sorted by output size.
``predicates.csv``
    one row per backend and predicate, each evaluated on its own:
    ``backend,query_id,pred_index,kind,t1,t2,k,reads,height,list_length,cell_population``.
``space.csv``
    ``structure,pages`` for the list, Structure A, Structure B, the primitive total and the
    multiversion index.
``growth.csv``
    ``events,pages`` of the multiversion backend after successive prefixes of the log.
``plot_bench.py``
    a standalone matplotlib script drawing I/O against output size and the space bars.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

from .backends import BACKEND_NAMES, make_backend
from .baselines.primitive import CapacityExceeded
from .config import RunConfig
from .datagen import generate_queries, generate_trajectories
from .engine import Engine, Oracle, StpQuery
from .grid import CellEvent, CellId, Router

log = logging.getLogger(__name__)

BENCH_COLUMNS = ["backend", "query_id", "output_size", "reads", "writes", "pages_total"]
PREDICATE_COLUMNS = [
    "backend", "query_id", "pred_index", "kind", "t1", "t2", "k", "reads", "height",
    "list_length", "cell_population",
]


@dataclass
class Built:
    backend: object
    router: Router
    build_writes: int
    growth: list[tuple[int, int]] = field(default_factory=list)


def build(name: str, cfg: RunConfig, events: list[tuple[CellId, CellEvent]],
          growth_steps: int = 0) -> Built:
    """Replay ``events`` into a fresh backend, sampling its size at ``growth_steps`` prefixes."""
    backend = make_backend(name, cfg.store, cfg.mv, cfg.primitive_max_events)
    router = Router(backend)
    growth = []
    if growth_steps > 0 and events:
        cuts = [len(events) * (i + 1) // growth_steps for i in range(growth_steps)]
        prev = 0
        for cut in cuts:
            router.route(events[prev:cut])
            prev = cut
            backend.flush()
            growth.append((cut, backend.pages_total()))
    else:
        router.route(events)
    backend.flush()
    return Built(backend, router, backend.io.writes, growth)


def query_rows(name: str, built: Built, queries: list[StpQuery], truth: list[list[int]],
               seed_heuristic: bool = False) -> tuple[list[dict], int]:
    engine = Engine(built.backend, built.router.stats, seed_heuristic=seed_heuristic)
    rows, mismatches = [], 0
    pages = built.backend.pages_total()
    for qid, (q, expected) in enumerate(zip(queries, truth)):
        built.backend.reset_io()
        got = engine.run(q)
        io = built.backend.io
        if got != expected:
            mismatches += 1
            log.error("%s: query %d returned %d objects, expected %d", name, qid, len(got), len(expected))
        rows.append({
            "backend": name, "query_id": qid, "output_size": len(got),
            "reads": io.reads, "writes": io.writes, "pages_total": pages,
        })
    return rows, mismatches


def predicate_rows(name: str, built: Built, queries: list[StpQuery], oracle: Oracle) -> list[dict]:
    backend = built.backend
    rows = []
    for qid, q in enumerate(queries):
        for i, pred in enumerate(q.predicates):
            t1, t2 = pred.constraint.window
            backend.reset_io()
            k = len(backend.evaluate(pred.cell, t1, t2))
            height = backend.height(pred.cell, t1) if hasattr(backend, "height") else 0
            length = backend.list_length(pred.cell) if hasattr(backend, "list_length") else 0
            rows.append({
                "backend": name, "query_id": qid, "pred_index": i,
                "kind": "instant" if t1 == t2 else "interval", "t1": t1, "t2": t2,
                "k": k, "reads": backend.io.reads, "height": height, "list_length": length,
                "cell_population": oracle.population(pred.cell),
            })
    return rows


def cost_ceiling(n_predicates: int, max_output: int, height: int, capacity: int) -> float:
    """Upper bound on the reads of one multi-predicate query on the multiversion backend."""
    return 16 * n_predicates * max(max_output, 1) / capacity + n_predicates * (height + 2)


def ceiling_violations(query_rows_: list[dict], pred_rows: list[dict], capacity: int) -> list[int]:
    """Query ids whose measured reads exceed :func:`cost_ceiling`."""
    per_query: dict[int, list[dict]] = {}
    for r in pred_rows:
        per_query.setdefault(r["query_id"], []).append(r)
    bad = []
    for row in query_rows_:
        preds = per_query[row["query_id"]]
        limit = cost_ceiling(len(preds), max(p["k"] for p in preds),
                             max(p["height"] for p in preds), capacity)
        if row["reads"] > limit:
            bad.append(row["query_id"])
    return bad


def write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


PLOT_SCRIPT = '''\
"""Draw bench.csv and space.csv; run from the bench output directory."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

out = sys.argv[1] if len(sys.argv) > 1 else "."
series = defaultdict(list)
with open(f"{out}/bench.csv") as fh:
    for row in csv.DictReader(fh):
        series[row["backend"]].append((int(row["output_size"]), int(row["reads"])))

canvas, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
for name, pts in sorted(series.items()):
    pts.sort()
    ax1.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", linestyle="-", label=name)
ax1.set_xlabel("output size")
ax1.set_ylabel("node accesses per query")
ax1.set_yscale("log")
ax1.legend()

with open(f"{out}/space.csv") as fh:
    space = [(r["structure"], int(r["pages"])) for r in csv.DictReader(fh)]
space = [s for s in space if s[0] in ("list", "primitive_a", "advanced")]
ax2.bar([s[0] for s in space], [s[1] for s in space])
ax2.set_ylabel("pages")
canvas.tight_layout()
canvas.savefig(f"{out}/bench.png", dpi=120)
print(f"wrote {out}/bench.png")
'''


@dataclass
class BenchSummary:
    events: int
    queries: int
    mismatches: dict[str, int]
    space: dict[str, int]
    growth: list[tuple[int, int]]
    skipped: dict[str, str]
    out_dir: str
    ceiling_violations: list[int] = field(default_factory=list)


def run_bench(cfg: RunConfig, out_dir: str, backends: tuple[str, ...] = BACKEND_NAMES) -> BenchSummary:
    os.makedirs(out_dir, exist_ok=True)
    events = generate_trajectories(cfg.gen)
    oracle = Oracle(events)
    queries = generate_queries(cfg.gen, events, oracle)
    truth = [oracle.query(q) for q in queries]
    bench, preds = [], []
    mismatches: dict[str, int] = {}
    space: dict[str, int] = {}
    skipped: dict[str, str] = {}
    growth: list[tuple[int, int]] = []
    over: list[int] = []
    for name in backends:
        try:
            built = build(name, cfg, events, cfg.growth_steps if name == "advanced" else 0)
        except CapacityExceeded as exc:
            log.warning("skipping %s: %s", name, exc)
            skipped[name] = str(exc)
            continue
        rows, mismatches[name] = query_rows(name, built, queries, truth, cfg.seed_heuristic)
        per_pred = predicate_rows(name, built, queries, oracle)
        bench.extend(rows)
        preds.extend(per_pred)
        if name == "primitive":
            space["primitive_a"] = built.backend.pages_a()
            space["primitive_b"] = built.backend.pages_b()
        space[name] = built.backend.pages_total()
        if name == "advanced":
            growth = built.growth
            over = ceiling_violations(rows, per_pred, cfg.capacity)
            if over:
                log.warning("%d queries exceed the advanced cost ceiling", len(over))
    order = {n: i for i, n in enumerate(BACKEND_NAMES)}
    bench.sort(key=lambda r: (r["output_size"], order[r["backend"]], r["query_id"]))
    write_csv(os.path.join(out_dir, "bench.csv"), BENCH_COLUMNS, bench)
    write_csv(os.path.join(out_dir, "predicates.csv"), PREDICATE_COLUMNS, preds)
    write_csv(os.path.join(out_dir, "space.csv"), ["structure", "pages"],
              [{"structure": k, "pages": v} for k, v in space.items()])
    write_csv(os.path.join(out_dir, "growth.csv"), ["events", "pages"],
              [{"events": e, "pages": p} for e, p in growth])
    with open(os.path.join(out_dir, "plot_bench.py"), "w", encoding="utf-8") as fh:
        fh.write(PLOT_SCRIPT)
    return BenchSummary(len(events), len(queries), mismatches, space, growth, skipped, out_dir, over)


def read_csv(path: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


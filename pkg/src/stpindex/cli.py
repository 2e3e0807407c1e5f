"""Command-line entry point: ``generate``, ``build``, ``query`` and ``bench``.

Exit codes: 0 on success, 1 for usage, config and query-parse errors, 2 for
malformed or inconsistent data.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import pickle
import sys
from collections import Counter
from typing import Optional, Sequence

from .backends import BACKEND_NAMES
from .baselines.primitive import CapacityExceeded
from .bench import build, run_bench
from .config import ConfigError, RunConfig, load_config
from .datagen import EventFormatError, generate_queries, generate_trajectories, read_events, write_events
from .engine import Engine, QueryParseError, format_result, parse_queries
from .grid import DataError, Router

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # subcommands repeat the flags with suppressed defaults so they never mask earlier values
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d(None), help="flat key = value config file")
    parser.add_argument("--backend", choices=BACKEND_NAMES, default=d("advanced"))
    parser.add_argument("--seed", type=int, default=d(None), help="override the config seed")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = _Parser(prog="stpindex", description=__doc__.splitlines()[0])
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write an event log and a query workload")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--trajectories", action="store_true", help="also write raw positions")

    b = sub.add_parser("build", parents=[common], help="replay an event log into a backend")
    b.add_argument("log", help="event CSV")
    b.add_argument("--out", default="index.pkl", help="where to save the built index")

    q = sub.add_parser("query", parents=[common], help="run a query file against a built index")
    q.add_argument("index", help="file written by build")
    q.add_argument("queries", help="query file, one query per line")
    q.add_argument("--seed-heuristic", action="store_true",
                   help="evaluate the predicate with the smallest estimate first")

    r = sub.add_parser("bench", parents=[common], help="run all backends on a generated workload")
    r.add_argument("--out", default="bench_out", help="output directory")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_generate(args) -> int:
    cfg = _config(args)
    os.makedirs(args.out, exist_ok=True)
    events = generate_trajectories(cfg.gen)
    queries = generate_queries(cfg.gen, events)
    with open(os.path.join(args.out, "events.csv"), "w", encoding="utf-8") as fh:
        write_events(events, fh)
    with open(os.path.join(args.out, "queries.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{q}\n" for q in queries)
    if args.trajectories:
        from .datagen import write_trajectories

        with open(os.path.join(args.out, "trajectories.csv"), "w", encoding="utf-8") as fh:
            write_trajectories(cfg.gen, fh)
    cells = len({c for c, _ in events})
    print(f"objects={cfg.gen.num_objects} events={len(events)} cells={cells} queries={len(queries)}")
    return EXIT_OK


@dataclasses.dataclass
class SavedIndex:
    backend_name: str
    config: RunConfig
    backend: object
    router: Router


def cmd_build(args) -> int:
    cfg = _config(args)
    with open(args.log, encoding="utf-8") as fh:
        events = read_events(fh)
    try:
        built = build(args.backend, cfg, events)
    except DataError as exc:
        if exc.index is not None:  # header is line 1
            raise DataError(f"line {exc.index + 2}: {exc}") from None
        raise
    backend = built.backend
    per_cell = Counter()
    for cell, stats in sorted(built.router.stats.items()):
        per_cell[cell] = stats.entries
    print(f"backend={args.backend} events={built.router.events} cells={len(per_cell)}"
          f" pages_total={backend.pages_total()} writes={built.build_writes}")
    if args.verbose:
        for cell, n in sorted(per_cell.items()):
            print(f"  cell {cell}: events={n}")
    with open(args.out, "wb") as fh:
        pickle.dump(SavedIndex(args.backend, cfg, backend, built.router), fh)
    return EXIT_OK


def cmd_query(args) -> int:
    with open(args.index, "rb") as fh:
        saved: SavedIndex = pickle.load(fh)
    with open(args.queries, encoding="utf-8") as fh:
        queries = parse_queries(fh)
    engine = Engine(saved.backend, saved.router.stats, saved.config.gen.grid,
                    seed_heuristic=args.seed_heuristic or saved.config.seed_heuristic)
    for q in queries:
        saved.backend.reset_io()
        objs = engine.run(q)
        print(format_result(objs, saved.backend.io.reads))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    s = run_bench(cfg, args.out)
    print(f"events={s.events} queries={s.queries} out={s.out_dir}")
    for name, pages in s.space.items():
        print(f"  pages {name}={pages}")
    for name, n in s.mismatches.items():
        if n:
            print(f"  WARNING {name}: {n} answers differ from the oracle")
    if s.ceiling_violations:
        print(f"  WARNING advanced: {len(s.ceiling_violations)} queries exceed the cost ceiling")
    for name, why in s.skipped.items():
        print(f"  skipped {name}: {why}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "build": cmd_build, "query": cmd_query, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, QueryParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, EventFormatError, CapacityExceeded) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

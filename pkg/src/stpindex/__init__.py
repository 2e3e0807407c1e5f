"""Grid-partitioned spatio-temporal index over multiversion B+-trees."""

from .backends import BACKEND_NAMES, AdvancedBackend, make_backend
from .engine import (
    WITH_ORDER, WITH_TIME, Engine, Instant, Interval, Oracle, Predicate, StpQuery,
    eval_with_order, eval_with_time, oracle_eval, parse_query, parse_queries,
)
from .grid import ENTER, EXIT, CellEvent, CellId, GridSpec, Router, samples_to_events
from .mvindex import OPEN, MvConfig, MvIndex
from .pagestore import IoStats, PageStore, StoreConfig, record_capacity_for

__version__ = "0.1.0"

__all__ = [
    "AdvancedBackend", "BACKEND_NAMES", "CellEvent", "CellId", "ENTER", "EXIT", "Engine",
    "GridSpec", "Instant", "Interval", "IoStats", "MvConfig", "MvIndex", "OPEN", "Oracle",
    "PageStore", "Predicate", "Router", "StoreConfig", "StpQuery", "WITH_ORDER", "WITH_TIME",
    "eval_with_order", "eval_with_time", "make_backend", "oracle_eval", "parse_queries",
    "parse_query", "record_capacity_for", "samples_to_events",
]

"""Flat ``key = value`` run configuration.

Recognised keys are the :class:`~stpindex.datagen.GenConfig` fields plus page
geometry (``page_size``, ``key_bytes``, ``pointer_bytes``, ``record_capacity``),
multiversion tuning (``mv_d``, ``mv_split_low``, ``mv_split_high``),
``primitive_max_events``, ``seed_heuristic`` and ``growth_steps``.
Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .datagen import GenConfig
from .mvindex import MvConfig
from .pagestore import StoreConfig, record_capacity_for

_SECTION = "run"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"config field {key!r}: {message}")
        self.key = key


@dataclass
class RunConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    page_size: int = 512
    key_bytes: int = 8
    pointer_bytes: int = 4
    record_capacity: Optional[int] = None
    mv_d: Optional[int] = None
    mv_split_low: Optional[int] = None
    mv_split_high: Optional[int] = None
    primitive_max_events: Optional[int] = 5_000_000
    seed_heuristic: bool = False
    growth_steps: int = 5

    @property
    def capacity(self) -> int:
        if self.record_capacity is not None:
            return self.record_capacity
        return record_capacity_for(self.page_size, self.key_bytes, self.pointer_bytes)

    @property
    def store(self) -> StoreConfig:
        return StoreConfig(self.capacity, self.page_size)

    @property
    def mv(self) -> MvConfig:
        return MvConfig.from_capacity(self.capacity, self.mv_d, self.mv_split_low, self.mv_split_high)

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, gen=dataclasses.replace(self.gen, seed=seed))


_GEN_FIELDS = {f.name: f for f in dataclasses.fields(GenConfig)}
_RUN_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "gen"}


def _convert(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if key == "target_output_range":
            lo, hi = (int(v) for v in raw.replace("[", "").replace("]", "").split(","))
            return (lo, hi)
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"expected a boolean, found {raw!r}")
        if isinstance(default, float):
            return float(raw)
        if raw.lower() in ("none", ""):
            return None
        return int(raw)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError("<syntax>", str(exc).replace(f"[{_SECTION}]", "")) from None
    gen_kw, run_kw = {}, {}
    defaults_gen, defaults_run = GenConfig(), RunConfig()
    for key, raw in parser.items(_SECTION):
        if key in _GEN_FIELDS:
            gen_kw[key] = _convert(key, raw, getattr(defaults_gen, key))
        elif key in _RUN_FIELDS:
            run_kw[key] = _convert(key, raw, getattr(defaults_run, key))
        else:
            raise ConfigError(key, "unknown key")
    try:
        gen = GenConfig(**gen_kw)
    except ValueError as exc:
        bad = next((k for k in gen_kw if k in str(exc)), "<gen>")
        raise ConfigError(bad, str(exc)) from None
    cfg = RunConfig(gen=gen, **run_kw)
    try:
        cfg.store
        cfg.mv
    except ValueError as exc:
        raise ConfigError("record_capacity/mv_*", str(exc)) from None
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(GenConfig):
        v = getattr(cfg.gen, f.name)
        lines.append(f"{f.name} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    for name in _RUN_FIELDS:
        lines.append(f"{name} = {getattr(cfg, name)}")
    return "\n".join(lines) + "\n"

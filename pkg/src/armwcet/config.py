"""Architecture, machine and search configuration, plus INI loading."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .isa import DurationTable, InstrClass, Stage


class Policy(str, Enum):
    FIFO = "fifo"
    LRU = "lru"
    ALWAYS_MISS = "always-miss"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        text = text.strip().lower().replace("_", "-")
        if text in ("random", "always-miss", "alwaysmiss", "none"):
            # random replacement is as bad as no cache for a worst-case bound
            return cls.ALWAYS_MISS
        return cls(text)


class WriteHit(str, Enum):
    WRITE_THROUGH = "write-through"
    WRITE_BACK = "write-back"


class WriteMiss(str, Enum):
    ALLOCATE = "allocate"
    NO_ALLOCATE = "no-allocate"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CacheConfig:
    size: int = 4096
    line: int = 32
    ways: int = 4
    policy: Policy = Policy.FIFO
    write_hit: WriteHit = WriteHit.WRITE_BACK
    write_miss: WriteMiss = WriteMiss.ALLOCATE
    hit_latency: int = 1
    transaction_cycles: int = 10
    bus_width: int = 4

    def __post_init__(self) -> None:
        if min(self.size, self.line, self.ways, self.bus_width) <= 0:
            raise ConfigError("cache geometry must be positive")
        if self.size % self.line:
            raise ConfigError(f"cache size {self.size} is not a multiple of line {self.line}")
        if self.lines % self.ways:
            raise ConfigError(f"{self.ways} ways do not divide {self.lines} lines")
        if self.hit_latency < 1 or self.transaction_cycles < 0:
            raise ConfigError("latencies must be hit >= 1 and transaction >= 0")

    @property
    def lines(self) -> int:
        return self.size // self.line

    @property
    def sets(self) -> int:
        return self.lines // self.ways

    @property
    def pmt(self) -> int:
        """Bus transactions needed to move one line."""
        return math.ceil(self.line / self.bus_width)


@dataclass(frozen=True)
class MachineConfig:
    stack_base: int = 0x0010_0000
    stack_size: int = 0x1000
    init_lr: int = 0xFFFF_FFFC
    run_bound: int = 1_000_000  # K_p

    @property
    def stack_low(self) -> int:
        return self.stack_base - self.stack_size


@dataclass(frozen=True)
class Limits:
    max_states: int = 10**7
    max_splits: int = 2**20


@dataclass(frozen=True)
class ArchConfig:
    icache: CacheConfig = field(default_factory=CacheConfig)
    dcache: CacheConfig = field(default_factory=CacheConfig)
    durations: DurationTable = field(default_factory=DurationTable)
    machine: MachineConfig = field(default_factory=MachineConfig)

    def with_policy(self, policy: Policy) -> "ArchConfig":
        return replace(
            self,
            icache=replace(self.icache, policy=policy),
            dcache=replace(self.dcache, policy=policy),
        )


PRESETS = {
    # CACHE_SPEED = 1 cycle, one memory transaction = 10 processor cycles
    "arm9-paper": {"memory": {"hit_latency": "1", "transaction_cycles": "10"}},
}

_CACHE_KEYS = {
    "size": ("size", int),
    "line": ("line", int),
    "ways": ("ways", int),
    "policy": ("policy", Policy.parse),
    "write_hit": ("write_hit", lambda s: WriteHit(s.strip().lower())),
    "write_miss": ("write_miss", lambda s: WriteMiss(s.strip().lower())),
    "hit_latency": ("hit_latency", int),
    "transaction_cycles": ("transaction_cycles", int),
    "bus_width": ("bus_width", int),
}


def _int(text: str) -> int:
    return int(text.strip(), 0)


def _cache_from(section, base: CacheConfig) -> CacheConfig:
    kw = {}
    for key, value in section.items():
        if key not in _CACHE_KEYS:
            raise ConfigError(f"unknown cache key {key!r}")
        name, conv = _CACHE_KEYS[key]
        kw[name] = _int(value) if conv is int else conv(value)
    return replace(base, **kw)


def _durations_from(section) -> DurationTable:
    default = 1
    per_stage: dict = {}
    per_class: dict = {}
    stages = {s.name.lower(): s for s in Stage}
    classes = {c.value.lower(): c for c in InstrClass}
    for key, value in section.items():
        if key == "default":
            default = _int(value)
            continue
        stage_name, _, klass = key.partition(".")
        if stage_name not in stages:
            raise ConfigError(f"unknown pipeline stage {stage_name!r}")
        if klass:
            if klass not in classes:
                raise ConfigError(f"unknown instruction class {klass!r}")
            per_class[(classes[klass], stages[stage_name])] = _int(value)
        else:
            per_stage[stages[stage_name]] = _int(value)
    overrides = {}
    for klass in InstrClass:
        for stage in Stage:
            cycles = per_class.get((klass, stage), per_stage.get(stage))
            if cycles is not None:
                overrides[(klass, stage)] = cycles
    return DurationTable.from_mapping(overrides, default=default)


def load_config(
    source: Union[str, Path, None] = None,
    *,
    preset: Optional[str] = None,
    text: Optional[str] = None,
) -> tuple[ArchConfig, Limits]:
    """Read an INI configuration; unspecified keys keep their defaults."""
    parser = configparser.ConfigParser()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        parser.read_dict(PRESETS[preset])
    if source is not None:
        with open(source, encoding="utf-8") as fh:
            parser.read_file(fh)
    if text is not None:
        parser.read_string(text)

    unknown = set(parser.sections()) - {"icache", "dcache", "memory", "pipeline", "limits", "machine"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    icache, dcache = CacheConfig(), CacheConfig()
    if parser.has_section("memory"):
        mem = dict(parser["memory"])
        icache = _cache_from(mem, icache)
        dcache = _cache_from(mem, dcache)
    if parser.has_section("icache"):
        icache = _cache_from(dict(parser["icache"]), icache)
    if parser.has_section("dcache"):
        dcache = _cache_from(dict(parser["dcache"]), dcache)

    durations = DurationTable()
    if parser.has_section("pipeline"):
        durations = _durations_from(dict(parser["pipeline"]))

    machine = MachineConfig()
    limits = Limits()
    if parser.has_section("machine"):
        names = {f.name for f in fields(MachineConfig)}
        kw = {}
        for key, value in parser["machine"].items():
            if key not in names:
                raise ConfigError(f"unknown machine key {key!r}")
            kw[key] = _int(value)
        machine = replace(machine, **kw)
    if parser.has_section("limits"):
        kw = {}
        for key, value in parser["limits"].items():
            if key in ("k_p", "run_bound"):
                machine = replace(machine, run_bound=_int(value))
            elif key in ("max_states", "max_splits"):
                kw[key] = _int(value)
            else:
                raise ConfigError(f"unknown limits key {key!r}")
        limits = replace(limits, **kw)
    return ArchConfig(icache, dcache, durations, machine), limits

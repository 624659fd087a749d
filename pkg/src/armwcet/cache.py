"""Set-associative caches over a bus-transaction memory timing model.

A line fill costs ``pmt`` bus transactions of ``transaction_cycles`` each;
delivering a word to the core costs ``hit_latency`` core cycles.  Latencies
are returned split in two parts because the power analysis scales only the
core part with the clock rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import CacheConfig, Policy, WriteHit, WriteMiss


class Access(str, Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class Latency:
    hit: bool
    core: int  # core cycles (scale with the clock)
    memory: int  # memory-bus time (fixed in wall units)

    @property
    def total(self) -> int:
        return self.core + self.memory


class Cache:
    """One cache; ``sets[k]`` is a list of ``[tag, dirty]`` in eviction order."""

    __slots__ = ("cfg", "sets", "hits", "misses", "writebacks")

    def __init__(self, cfg: CacheConfig):
        self.cfg = cfg
        self.sets: list[list[list]] = [[] for _ in range(cfg.sets)]
        self.hits = self.misses = self.writebacks = 0

    def clone(self) -> "Cache":
        other = Cache.__new__(Cache)
        other.cfg = self.cfg
        other.sets = [[line[:] for line in s] for s in self.sets]
        other.hits, other.misses, other.writebacks = self.hits, self.misses, self.writebacks
        return other

    def locate(self, addr: int) -> tuple[int, int]:
        block = addr // self.cfg.line
        return block % self.cfg.sets, block // self.cfg.sets

    def contains(self, addr: int) -> bool:
        index, tag = self.locate(addr)
        return any(line[0] == tag for line in self.sets[index])

    def contents(self) -> list[list[int]]:
        return [[line[0] for line in s] for s in self.sets]

    def key(self) -> tuple:
        return tuple(tuple((t, d) for t, d in s) for s in self.sets)

    @property
    def accesses(self) -> int:
        return self.hits + self.misses

    def worst_latency(self) -> Latency:
        """Bound on any single access: fill plus a dirty write-back or a write-through word."""
        cfg = self.cfg
        fill = cfg.pmt * cfg.transaction_cycles
        extra = fill if cfg.write_hit is WriteHit.WRITE_BACK else cfg.transaction_cycles
        return Latency(False, cfg.hit_latency, fill + extra)

    def access(self, addr: int, kind: Access = Access.READ) -> Latency:
        cfg = self.cfg
        if cfg.policy is Policy.ALWAYS_MISS:
            self.misses += 1
            return self.worst_latency()

        index, tag = self.locate(addr)
        lines = self.sets[index]
        fill = cfg.pmt * cfg.transaction_cycles
        write = kind is Access.WRITE
        for pos, line in enumerate(lines):
            if line[0] == tag:
                self.hits += 1
                if cfg.policy is Policy.LRU:
                    lines.append(lines.pop(pos))
                if write and cfg.write_hit is WriteHit.WRITE_BACK:
                    line[1] = True
                    return Latency(True, cfg.hit_latency, 0)
                if write:
                    return Latency(True, cfg.hit_latency, cfg.transaction_cycles)
                return Latency(True, cfg.hit_latency, 0)

        self.misses += 1
        if write and cfg.write_miss is WriteMiss.NO_ALLOCATE:
            return Latency(False, cfg.hit_latency, cfg.transaction_cycles)
        memory = fill
        if len(lines) >= cfg.ways:
            _, dirty = lines.pop(0)
            if dirty:
                # write-back of the victim is serialized before the fill
                self.writebacks += 1
                memory += fill
        dirty = write and cfg.write_hit is WriteHit.WRITE_BACK
        lines.append([tag, dirty])
        if write and cfg.write_hit is WriteHit.WRITE_THROUGH:
            memory += cfg.transaction_cycles
        return Latency(False, cfg.hit_latency, memory)

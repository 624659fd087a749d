"""Longest initial slow-clock window that leaves the WCET unchanged."""

from __future__ import annotations

from dataclasses import dataclass

from .config import ArchConfig, Limits
from .isa import Program
from .pipeline import ClockSchedule
from .search import compute_wcet


@dataclass(frozen=True)
class PowerReport:
    slow_factor: int
    window: int  # T*, wall units
    wcet: int

    @property
    def ratio(self) -> float:
        return self.window / self.wcet if self.wcet else 0.0

    def to_dict(self) -> dict:
        return {
            "slow_factor": self.slow_factor,
            "T*": self.window,
            "WCET": self.wcet,
            "ratio%": round(100 * self.ratio, 2),
            "model": "hit latency scales with the core clock; bus transactions do not",
        }


def wcet_under_schedule(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    sched: ClockSchedule = ClockSchedule(4, 0),
    limits: Limits = Limits(),
    **kw,
) -> int:
    return compute_wcet(p, cfg, limits, schedule=sched, **kw).wcet


def max_free_slow_window(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    slow_factor: int = 4,
    limits: Limits = Limits(),
    **kw,
) -> PowerReport:
    """Binary search for the largest switch time with no WCET penalty."""
    cache: dict[int, int] = {}

    def wcet(t: int) -> int:
        if t not in cache:
            cache[t] = wcet_under_schedule(p, cfg, ClockSchedule(slow_factor, t), limits, **kw)
        return cache[t]

    base = wcet(0)
    lo, hi = 0, base
    if wcet(hi) == base:
        return PowerReport(slow_factor, hi, base)
    # invariant: wcet(lo) == base < wcet(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if wcet(mid) == base:
            lo = mid
        else:
            hi = mid
    return PowerReport(slow_factor, lo, base)

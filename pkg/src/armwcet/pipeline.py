"""Five-stage in-order pipeline driven by issue records.

Time is counted in wall units.  Core work (stage durations, cache hit
latency) only progresses on core clock edges; bus transactions progress on
every wall unit.  At full speed every wall unit is a core edge, so wall units
and processor cycles coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .cache import Access, Cache
from .config import ArchConfig, Policy
from .isa import InstrClass, Instruction, Stage, classify, reg_read_set, reg_write_set, stage_duration
from .machine import IssueRecord

STAGE_NAMES = ("F", "D", "E", "M", "W")
_F, _D, _E, _M, _W = range(5)

_LOADS = (InstrClass.LOAD, InstrClass.MULTI_LOAD)
_MULTI = (InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE)
_MEMORY = (InstrClass.LOAD, InstrClass.STORE, InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE)


@dataclass(frozen=True)
class ClockSchedule:
    """Core runs ``slow_factor`` times slower until ``switch_time`` wall units."""

    slow_factor: int = 1
    switch_time: int = 0

    def __post_init__(self) -> None:
        if self.slow_factor < 1 or self.switch_time < 0:
            raise ValueError("need slow_factor >= 1 and switch_time >= 0")

    @property
    def boundary(self) -> int:
        # the slow period ends on a slow edge
        f = self.slow_factor
        return math.ceil(self.switch_time / f) * f

    def is_edge(self, k: int) -> bool:
        """Whether the wall unit ending at time ``k`` carries a core edge."""
        return k > self.boundary or k % self.slow_factor == 0

    def edges_between(self, a: int, b: int) -> int:
        """Number of core edges among units ending at a+1 .. b."""
        if b <= a:
            return 0
        f, s = self.slow_factor, self.boundary
        slow_end = min(b, s)
        slow = slow_end // f - a // f if slow_end > a else 0
        fast = b - max(a, s) if b > s else 0
        return slow + fast

    @property
    def trivial(self) -> bool:
        return self.slow_factor == 1 or self.switch_time == 0


FULL_SPEED = ClockSchedule()


class _Meta:
    __slots__ = ("klass", "reads", "writes", "durations")

    def __init__(self, instr: Instruction, cfg: ArchConfig):
        self.klass = classify(instr)
        self.reads = reg_read_set(instr)
        self.writes = reg_write_set(instr)
        self.durations = tuple(stage_duration(instr, s, cfg.durations) for s in Stage)


class Occupant:
    __slots__ = ("rec", "meta", "core", "mem")

    def __init__(self, rec: IssueRecord, meta: _Meta, core: int, mem: int):
        self.rec = rec
        self.meta = meta
        self.core = core
        self.mem = mem

    def copy(self) -> "Occupant":
        return Occupant(self.rec, self.meta, self.core, self.mem)

    @property
    def idle(self) -> bool:
        return self.core == 0 and self.mem == 0

    def key(self) -> tuple:
        r = self.rec
        return (r.address, r.scheduled, r.data_addrs, r.branch_taken, self.core, self.mem)


class ArchState:
    """Pipeline occupancy, both caches and the wall clock."""

    def __init__(
        self,
        cfg: ArchConfig = ArchConfig(),
        schedule: ClockSchedule = FULL_SPEED,
        *,
        icache: Optional[Cache] = None,
        dcache: Optional[Cache] = None,
    ):
        self.cfg = cfg
        self.schedule = schedule
        self.icache = icache if icache is not None else Cache(cfg.icache)
        self.dcache = dcache if dcache is not None else Cache(cfg.dcache)
        self.stages: list[Optional[Occupant]] = [None] * 5
        self.clock = 0
        self.stalls: dict[int, int] = {}
        self.retired: list[tuple[int, int]] = []
        self.events: Optional[list[str]] = None
        self._meta: dict = {}

    # -- copying ----------------------------------------------------------

    def clone(self) -> "ArchState":
        other = ArchState.__new__(ArchState)
        other.cfg = self.cfg
        other.schedule = self.schedule
        other.icache = self.icache.clone()
        other.dcache = self.dcache.clone()
        other.stages = [o.copy() if o is not None else None for o in self.stages]
        other.clock = self.clock
        other.stalls = dict(self.stalls)
        other.retired = list(self.retired)
        other.events = None if self.events is None else list(self.events)
        other._meta = self._meta  # shared, read-only per instruction
        return other

    def key(self) -> tuple:
        stages = tuple(None if o is None else o.key() for o in self.stages)
        return (self.clock, stages, self.icache.key(), self.dcache.key())

    def record_events(self) -> None:
        self.events = []

    def _log(self, stage: int, occ: Occupant, action: str, when: Optional[int] = None) -> None:
        if self.events is not None:
            t = self.clock if when is None else when
            self.events.append(f"{t},{STAGE_NAMES[stage]},{occ.rec.address:#x},{action}")

    def meta(self, instr: Instruction) -> _Meta:
        m = self._meta.get(instr)
        if m is None:
            m = self._meta[instr] = _Meta(instr, self.cfg)
        return m

    # -- stage entry work -----------------------------------------------------

    def _enter(self, stage: int, occ: Occupant) -> None:
        meta, rec = occ.meta, occ.rec
        dur = meta.durations[stage]
        occ.mem = 0
        if stage == _M and rec.scheduled and meta.klass in _MEMORY and rec.data_addrs:
            kind = Access.WRITE if meta.klass in (InstrClass.STORE, InstrClass.MULTI_STORE) else Access.READ
            core = mem = 0
            for addr in rec.data_addrs:
                lat = self.dcache.access(addr, kind)
                core += lat.core
                mem += lat.memory
            occ.core, occ.mem = max(dur, core), mem
        else:
            occ.core = dur
        self.stages[stage] = occ
        self._log(stage, occ, "enter")

    def issue(self, rec: IssueRecord) -> bool:
        """Place ``rec`` in the fetch stage; False when the stage is busy."""
        if self.stages[_F] is not None:
            return False
        meta = self.meta(rec.instr)
        lat = self.icache.access(rec.address)
        core = max(meta.durations[_F], lat.core)
        mem = lat.memory
        occ = Occupant(rec, meta, core, mem)
        self.stages[_F] = occ
        self._log(_F, occ, "fetch" if lat.hit else "fetch-miss")
        if rec.branch_taken and meta.klass is InstrClass.COND_BRANCH:
            self.apply_branch_flush(occ)
        return True

    def apply_branch_flush(self, occ: Occupant) -> None:
        """Charge the two wrongly fetched sequential words of a taken branch."""
        for offset in (4, 8):
            lat = self.icache.access(occ.rec.address + offset)
            occ.core += lat.core
            occ.mem += lat.memory
            self._log(_F, occ, f"flush-read {occ.rec.address + offset:#x}")

    # -- hazards --------------------------------------------------------------

    def _hazard(self) -> bool:
        e, m = self.stages[_E], self.stages[_M]
        if e is None or m is None or not m.rec.scheduled:
            return False
        if m.meta.klass in _MULTI:
            return True
        if m.meta.klass in _LOADS and m.meta.writes & e.meta.reads:
            return True
        return False

    # -- time -----------------------------------------------------------------

    def tick(self) -> None:
        """Advance one wall unit."""
        k = self.clock + 1
        edge = self.schedule.is_edge(k)
        stalled = self._hazard()
        for stage, occ in enumerate(self.stages):
            if occ is None:
                continue
            if occ.mem > 0:
                occ.mem -= 1
                self._log(stage, occ, "memory", k)
            elif occ.core > 0:
                if not edge:
                    self._log(stage, occ, "wait-clock", k)
                elif stage == _E and stalled:
                    addr = occ.rec.address
                    self.stalls[addr] = self.stalls.get(addr, 0) + 1
                    self._log(stage, occ, "stall", k)
                else:
                    occ.core -= 1
                    self._log(stage, occ, "work", k)
            else:
                self._log(stage, occ, "blocked", k)
        self.clock = k
        self._shift()

    def _shift(self) -> None:
        st = self.stages
        w = st[_W]
        if w is not None and w.idle:
            st[_W] = None
            self.retired.append((w.rec.address, self.clock))
            self._log(_W, w, "retire")
        for stage in range(_M, -1, -1):
            occ = st[stage]
            if occ is not None and occ.idle and st[stage + 1] is None:
                st[stage] = None
                self._enter(stage + 1, occ)

    def _fast_forward(self) -> None:
        """Skip wall units in which only bus transactions make progress."""
        if self.events is not None:
            return
        stalled = self._hazard()
        pending = []
        for stage, occ in enumerate(self.stages):
            if occ is None:
                continue
            if occ.mem > 0:
                pending.append(occ.mem)
            elif occ.core > 0 and not (stage == _E and stalled):
                return
        if not pending:
            return
        skip = min(pending) - 1
        if skip <= 0:
            return
        if stalled:
            e = self.stages[_E]
            if e.mem == 0 and e.core > 0:
                n = self.schedule.edges_between(self.clock, self.clock + skip)
                if n:
                    addr = e.rec.address
                    self.stalls[addr] = self.stalls.get(addr, 0) + n
        for occ in self.stages:
            if occ is not None and occ.mem > 0:
                occ.mem -= skip
        self.clock += skip

    def advance(self) -> None:
        self._fast_forward()
        self.tick()

    def feed(self, rec: IssueRecord) -> None:
        """Wait until fetch is free, then issue ``rec``."""
        while self.stages[_F] is not None:
            self.advance()
        self.issue(rec)

    @property
    def empty(self) -> bool:
        return all(o is None for o in self.stages)

    def drain(self) -> int:
        while not self.empty:
            self.advance()
        return self.clock


def simulate_trace(
    records: Iterable[IssueRecord],
    cfg: ArchConfig = ArchConfig(),
    *,
    schedule: ClockSchedule = FULL_SPEED,
    arch: Optional[ArchState] = None,
    log_events: bool = False,
) -> ArchState:
    """Run a fixed issue sequence to completion; returns the final state."""
    state = arch if arch is not None else ArchState(cfg, schedule)
    if log_events:
        state.record_events()
    for rec in records:
        state.feed(rec)
    state.drain()
    return state


def worst_equivalence_check(records: list[IssueRecord], cfg: ArchConfig = ArchConfig()) -> bool:
    """Completion under ``cfg`` is no later than with always-miss caches."""
    base = simulate_trace(records, cfg).clock
    worst = simulate_trace(records, cfg.with_policy(Policy.ALWAYS_MISS)).clock
    return base <= worst

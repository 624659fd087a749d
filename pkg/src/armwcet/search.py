"""Worst-case execution time as a max over adversary strategies.

The program is deterministic once Player 2 has resolved every comparison on
unknown data, so the game reduces to a depth-first walk of the adversary tree
with a cycle-accurate pipeline carried along each branch.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional

from .config import ArchConfig, Limits
from .isa import SP, Program
from .machine import (
    AdversaryChoice,
    Deterministic,
    Fault,
    FaultKind,
    IssueRecord,
    MachineState,
    Terminated,
    choice_allowed,
    init_state,
    run_concrete,
    step,
)
from .pipeline import FULL_SPEED, ArchState, ClockSchedule, simulate_trace

Witness = tuple  # ((address, label), ...)


class LimitExceeded(RuntimeError):
    def __init__(self, limit: str, report: "WcetReport", addresses: Iterable[int] = ()):
        self.limit = limit
        self.report = report
        self.addresses = tuple(sorted(set(addresses)))
        where = ", ".join(f"{a:#x}" for a in self.addresses)
        super().__init__(f"{limit} exceeded" + (f" at {where}" if where else ""))


class AnalysisFault(RuntimeError):
    def __init__(self, fault: Fault, path: Witness):
        self.fault = fault
        self.path = tuple(path)
        super().__init__(str(fault))


class WitnessMismatch(ValueError):
    pass


@dataclass
class WcetReport:
    wcet: int = 0
    bcet: int = 0
    witness: Witness = ()
    splits: int = 0
    leaves: int = 0
    states: int = 0
    max_stack_depth: int = 0
    max_path_moves: int = 0
    constrained: bool = False
    faults: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["witness"] = [{"address": f"{a:#x}", "outcome": o} for a, o in self.witness]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class SearchOptions:
    limits: Limits = Limits()
    abstracted: frozenset = frozenset()
    constraints: Optional[Mapping[int, frozenset]] = None
    memo: bool = False
    schedule: ClockSchedule = FULL_SPEED


# -- accumulation -----------------------------------------------------------------


@dataclass
class _Acc:
    """Partial report over a contiguous range of leaves in DFS order."""

    wcet: int = -1
    bcet: Optional[int] = None
    witness: Witness = ()
    leaves: int = 0
    splits: int = 0
    states: int = 0
    max_stack: int = 0
    max_moves: int = 0

    def leaf(self, clock: int, path: Witness) -> None:
        self.leaves += 1
        # first maximum in DFS order is the lexicographically smallest witness
        if clock > self.wcet:
            self.wcet, self.witness = clock, path
        if self.bcet is None or clock < self.bcet:
            self.bcet = clock
        self.max_moves = max(self.max_moves, len(path))

    def merge(self, other: "_Acc") -> None:
        if other.leaves:
            if other.wcet > self.wcet:
                self.wcet, self.witness = other.wcet, other.witness
            if self.bcet is None or other.bcet < self.bcet:
                self.bcet = other.bcet
        self.leaves += other.leaves
        self.splits += other.splits
        self.states += other.states
        self.max_stack = max(self.max_stack, other.max_stack)
        self.max_moves = max(self.max_moves, other.max_moves)

    def report(self, constrained: bool) -> WcetReport:
        return WcetReport(
            wcet=max(self.wcet, 0),
            bcet=self.bcet or 0,
            witness=self.witness,
            splits=self.splits,
            leaves=self.leaves,
            states=self.states,
            max_stack_depth=self.max_stack,
            max_path_moves=self.max_moves,
            constrained=constrained,
        )


@dataclass
class _Node:
    machine: MachineState
    arch: ArchState
    path: Witness


class _Engine:
    def __init__(self, p: Program, cfg: ArchConfig, opts: SearchOptions):
        self.p, self.cfg, self.opts = p, cfg, opts
        self.mcfg = cfg.machine
        self.acc = _Acc()
        self.seen: Optional[set] = set() if opts.memo else None

    def root(self, registers=None, memory=None) -> _Node:
        s = init_state(self.p, self.mcfg, registers=registers, memory=memory)
        return _Node(s, ArchState(self.cfg, self.opts.schedule), ())

    def _stack_depth(self, s: MachineState) -> int:
        sp = s.regs[SP]
        if sp is None or not self.mcfg.stack_low <= sp <= self.mcfg.stack_base:
            return 0
        return (self.mcfg.stack_base - sp) // 4

    def _limit(self, name: str, addresses=()) -> LimitExceeded:
        return LimitExceeded(name, self.acc.report(self.opts.constraints is not None), addresses)

    def advance(self, node: _Node) -> Optional[AdversaryChoice]:
        """Run deterministic steps; None once the node is a finished leaf."""
        acc, limits = self.acc, self.opts.limits
        s, arch = node.machine, node.arch
        while True:
            out = step(self.p, s, self.mcfg, self.opts.abstracted)
            if isinstance(out, Terminated):
                arch.drain()
                node.machine = s
                return None
            if isinstance(out, Fault):
                if out.kind is FaultKind.RUN_BOUND:
                    raise self._limit("K_p", [out.address])
                raise AnalysisFault(out, node.path)
            acc.states += 1
            if acc.states > limits.max_states:
                raise self._limit("max_states", [out.issue.address])
            arch.feed(out.issue)
            if isinstance(out, AdversaryChoice):
                node.machine = out.pending
                return out
            s = out.next
            depth = self._stack_depth(s)
            if depth > acc.max_stack:
                acc.max_stack = depth

    def children(self, node: _Node, choice: AdversaryChoice) -> list[_Node]:
        acc = self.acc
        acc.splits += 1
        if acc.splits > self.opts.limits.max_splits:
            raise self._limit("max_splits", [choice.address])
        allowed = None
        if self.opts.constraints is not None:
            allowed = self.opts.constraints.get(choice.address)
        kids = []
        options = [c for c in choice.choices if allowed is None or choice_allowed(c.combos, allowed)]
        if not options:
            raise ValueError(f"constraints at {choice.address:#x} exclude every outcome")
        last = len(options) - 1
        for n, c in enumerate(options):
            arch = node.arch if n == last else node.arch.clone()
            kids.append(_Node(c.state, arch, node.path + ((choice.address, c.label),)))
        return kids

    def _duplicate(self, node: _Node) -> bool:
        if self.seen is None:
            return False
        key = (node.machine.key(), node.arch.key())
        if key in self.seen:
            return True
        self.seen.add(key)
        return False

    def explore(self, start: _Node, defer_depth: Optional[int] = None) -> list:
        """DFS from ``start``.  With ``defer_depth``, children at that many
        choices deep are returned unexplored, interleaved in leaf order with
        the accumulators of everything explored before them."""
        segments: list = []
        stack = [start]
        while stack:
            node = stack.pop()
            if self._duplicate(node):
                continue
            choice = self.advance(node)
            if choice is None:
                self.acc.leaf(node.arch.clock, node.path)
                continue
            kids = self.children(node, choice)
            if defer_depth is not None and len(kids[0].path) >= defer_depth:
                segments.append(self.acc)
                segments.extend(kids)
                self.acc = _Acc()
                continue
            stack.extend(reversed(kids))
        segments.append(self.acc)
        return segments


def _explore_subtree(args) -> _Acc:
    p, cfg, opts, node = args
    engine = _Engine(p, cfg, opts)
    (acc,) = engine.explore(node)
    return acc


def _defer_depth(jobs: int) -> int:
    # two-way splits are the narrowest; aim for a few tasks per worker
    return max(1, math.ceil(math.log2(4 * jobs)))


def compute_wcet(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    limits: Limits = Limits(),
    *,
    abstracted: Iterable[int] = (),
    constraints: Optional[Mapping[int, Iterable[str]]] = None,
    jobs: int = 1,
    memo: bool = False,
    schedule: ClockSchedule = FULL_SPEED,
) -> WcetReport:
    """Maximum completion time over every consistent adversary strategy."""
    if constraints is not None:
        constraints = {a: frozenset(o.upper() for o in v) for a, v in constraints.items()}
    opts = SearchOptions(limits, frozenset(abstracted), constraints, memo, schedule)
    engine = _Engine(p, cfg, opts)
    root = engine.root()
    constrained = constraints is not None

    if jobs <= 1 or memo:
        engine.explore(root)
        return engine.acc.report(constrained)

    segments = engine.explore(root, _defer_depth(jobs))
    tasks = [(p, cfg, opts, s) for s in segments if isinstance(s, _Node)]
    if not tasks:
        return segments[-1].report(constrained)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = iter(list(pool.map(_explore_subtree, tasks)))
    total = _Acc()
    for s in segments:
        total.merge(next(results) if isinstance(s, _Node) else s)
    return total.report(constrained)


def replay(
    p: Program,
    cfg: ArchConfig,
    witness: Iterable,
    *,
    abstracted: Iterable[int] = (),
    schedule: ClockSchedule = FULL_SPEED,
    log_events: bool = False,
) -> tuple[int, list[str]]:
    """Re-run one adversary strategy; returns (cycles, event lines)."""
    moves = [(int(a), str(o)) for a, o in witness]
    opts = SearchOptions(abstracted=frozenset(abstracted), schedule=schedule,
                         limits=Limits(max_states=10**12, max_splits=10**12))
    engine = _Engine(p, cfg, opts)
    node = engine.root()
    if log_events:
        node.arch.record_events()
    pos = 0
    while True:
        choice = engine.advance(node)
        if choice is None:
            break
        if pos >= len(moves):
            raise WitnessMismatch(f"witness ends before the choice at {choice.address:#x}")
        addr, label = moves[pos]
        if addr != choice.address:
            raise WitnessMismatch(f"expected a choice at {addr:#x}, reached {choice.address:#x}")
        picked = [c for c in choice.choices if c.label == label]
        if not picked:
            raise WitnessMismatch(f"no outcome {label!r} at {addr:#x}")
        node.machine = picked[0].state
        pos += 1
    if pos != len(moves):
        raise WitnessMismatch(f"{len(moves) - pos} unused witness moves")
    return node.arch.clock, node.arch.events or []


def simulate_single(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    *,
    registers: Optional[Mapping[int, int]] = None,
    memory: Optional[Mapping[int, int]] = None,
    schedule: ClockSchedule = FULL_SPEED,
    log_events: bool = False,
) -> ArchState:
    """Pipeline state after the unique run from concrete inputs."""
    trace = run_concrete(p, cfg.machine, registers=registers, memory=memory)
    return simulate_trace(trace, cfg, schedule=schedule, log_events=log_events)


# -- brute force reference -------------------------------------------------------


def enumerate_traces(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    *,
    abstracted: Iterable[int] = (),
) -> list[tuple[Witness, list[IssueRecord]]]:
    """Every adversary strategy with its full issue trace, from the machine alone."""
    abstracted = frozenset(abstracted)
    mcfg = cfg.machine
    out = []
    todo = [(init_state(p, mcfg), (), [])]
    while todo:
        s, path, trace = todo.pop()
        while True:
            o = step(p, s, mcfg, abstracted)
            if isinstance(o, Terminated):
                out.append((path, trace))
                break
            if isinstance(o, Fault):
                raise AnalysisFault(o, path)
            trace = trace + [o.issue]
            if isinstance(o, AdversaryChoice):
                for c in reversed(o.choices):
                    todo.append((c.state, path + ((o.address, c.label),), trace))
                break
            s = o.next
    return out


def brute_force_wcet(p: Program, cfg: ArchConfig = ArchConfig(), **kw) -> tuple[int, Witness]:
    """Max over fresh simulations of every enumerated trace."""
    best, witness = -1, ()
    for path, trace in enumerate_traces(p, cfg, **kw):
        t = simulate_trace(trace, cfg).clock
        if t > best:
            best, witness = t, path
    return best, witness


def parse_constraints(text: str) -> dict[int, frozenset]:
    """Lines of ``ADDR outcome[,outcome...]``; ``#`` starts a comment."""
    out: dict[int, frozenset] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'ADDR outcome[,outcome...]'")
        names = frozenset(n.strip().upper() for n in parts[1].replace("|", ",").split(",") if n.strip())
        bad = names - {"LT", "EQ", "GT", "LS", "HI"}
        if bad:
            raise ValueError(f"line {lineno}: unknown outcomes {sorted(bad)}")
        out[int(parts[0], 16)] = names
    return out

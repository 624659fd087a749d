"""Abstraction mappings and the lockstep equivalence check.

An abstracted instruction keeps its timing and footprint but leaves every
register except pc untouched.  The abstracted program has the same WCET as
the original when, before every critical instruction, both runs agree on
the registers that instruction reads or writes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .config import ArchConfig, Limits, MachineConfig
from .isa import (
    PC,
    Instruction,
    InstrClass,
    Program,
    classify,
    reg_name,
    reg_read_set,
    reg_write_set,
    successors,
)
from .machine import (
    AdversaryChoice,
    Deterministic,
    Fault,
    MachineState,
    StepOutcome,
    Terminated,
    init_state,
    read_reg,
    step,
)
from .search import AnalysisFault, LimitExceeded, WcetReport

_MEMORY = (InstrClass.LOAD, InstrClass.STORE, InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE)


class InvalidAbstraction(ValueError):
    pass


def is_critical(p: Optional[Program], i: Instruction) -> bool:
    """Sets status predicates or references memory."""
    return i.executable and (i.sets_flags or classify(i) in _MEMORY)


def writes_pc(i: Instruction) -> bool:
    return PC in reg_write_set(i)


@dataclass(frozen=True)
class AbstractionMap:
    abstracted: frozenset = frozenset()

    @classmethod
    def of(cls, addresses: Iterable[int]) -> "AbstractionMap":
        return cls(frozenset(addresses))

    def validate(self, p: Program) -> None:
        for addr in sorted(self.abstracted):
            instr = p.instructions.get(addr)
            if instr is None or not instr.executable:
                raise InvalidAbstraction(f"no instruction at {addr:#x}")
            if is_critical(p, instr):
                raise InvalidAbstraction(f"{addr:#x} ({instr}) is critical")
            if writes_pc(instr):
                raise InvalidAbstraction(f"{addr:#x} ({instr}) changes control flow")

    def __contains__(self, addr: object) -> bool:
        return addr in self.abstracted

    def __len__(self) -> int:
        return len(self.abstracted)


def parse_abstraction_file(text: str) -> AbstractionMap:
    """One hex address per line; ``#`` starts a comment."""
    addrs = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            addrs.add(int(line, 16))
        except ValueError:
            raise ValueError(f"line {lineno}: expected a hex address, got {line!r}") from None
    return AbstractionMap.of(addrs)


def abstract_step_semantics(
    p: Program, i: Instruction, s: MachineState, cfg: MachineConfig = MachineConfig()
) -> StepOutcome:
    """Step of ``i`` replaced by its abstract version."""
    if s.regs[PC] != i.address:
        s = MachineState(s.regs[:PC] + (i.address,), s.preds, s.stack, s.memory, s.step_count)
    return step(p, s, cfg, frozenset({i.address}))


# -- verdicts ------------------------------------------------------------------------


@dataclass(frozen=True)
class Equivalent:
    paths: int
    states: int

    def __bool__(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"verdict": "YES", "paths": self.paths, "states": self.states}


@dataclass(frozen=True)
class CounterExample:
    path: tuple
    address: int
    register: Optional[str]
    concrete: object = None
    abstract: object = None
    reason: str = ""

    def __bool__(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {
            "verdict": "NO",
            "address": f"{self.address:#x}",
            "register": self.register,
            "concrete": _show(self.concrete),
            "abstract": _show(self.abstract),
            "reason": self.reason,
            "path": [{"address": f"{a:#x}", "outcome": o} for a, o in self.path],
        }


Verdict = Union[Equivalent, CounterExample]


def _show(v) -> Optional[str]:
    if v is None:
        return "unknown"
    return hex(v) if isinstance(v, int) else str(v)


def _footprint(out: StepOutcome):
    issue = out.issue
    return issue.address, issue.scheduled, issue.data_addrs, issue.branch_taken


def check_equivalence(
    p: Program,
    alpha: AbstractionMap,
    cfg: ArchConfig = ArchConfig(),
    limits: Limits = Limits(),
) -> Verdict:
    """Run the concrete and abstracted programs side by side over the whole
    adversary tree; both sides take the same outcome at every choice."""
    alpha.validate(p)
    mcfg = cfg.machine
    abstracted = alpha.abstracted
    s0 = init_state(p, mcfg)
    stack = [(s0, s0, ())]
    states = paths = splits = 0
    while stack:
        c, a, path = stack.pop()
        while True:
            if c.regs[PC] != a.regs[PC]:
                return CounterExample(path, c.regs[PC], "pc", c.regs[PC], a.regs[PC], "control flow diverged")
            instr = p.instructions.get(c.regs[PC]) if c.regs[PC] is not None else None
            if instr is not None and is_critical(p, instr):
                for r in sorted(reg_read_set(instr) | reg_write_set(instr)):
                    cv, av = read_reg(c, r, instr), read_reg(a, r, instr)
                    if cv != av:
                        return CounterExample(path, instr.address, reg_name(r), cv, av,
                                              f"{reg_name(r)} differs before {instr}")
            oc = step(p, c, mcfg)
            oa = step(p, a, mcfg, abstracted)
            if isinstance(oc, Terminated) and isinstance(oa, Terminated):
                paths += 1
                break
            if isinstance(oc, Fault) or isinstance(oa, Fault):
                if type(oc) is type(oa) and oc == oa:
                    raise AnalysisFault(oc, path)
                where = c.regs[PC] if c.regs[PC] is not None else -1
                return CounterExample(path, where, None, str(oc), str(oa), "only one side faulted")
            if type(oc) is not type(oa) or _footprint(oc) != _footprint(oa):
                return CounterExample(path, oc.issue.address if hasattr(oc, "issue") else -1,
                                      None, None, None, "issue footprints differ")
            states += 1
            if states > limits.max_states:
                raise LimitExceeded("max_states", WcetReport(states=states, splits=splits), [oc.issue.address])
            if isinstance(oc, Deterministic):
                c, a = oc.next, oa.next
                continue
            splits += 1
            if splits > limits.max_splits:
                raise LimitExceeded("max_splits", WcetReport(states=states, splits=splits), [oc.address])
            mirrored = {ch.label: ch.state for ch in oa.choices}
            for ch in reversed(oc.choices):
                if ch.label not in mirrored:
                    return CounterExample(path, oc.address, None, ch.label, None, "outcome sets differ")
                stack.append((ch.state, mirrored[ch.label], path + ((oc.address, ch.label),)))
            break
    return Equivalent(paths, states)


# -- heuristic ---------------------------------------------------------------------


def _return_sites(p: Program) -> list[int]:
    return [i.address + 4 for i in p if i.executable and i.mnemonic == "bl"]


def heuristic_abstraction(p: Program) -> AbstractionMap:
    """Abstract non-critical instructions whose results never reach a
    critical instruction or a control transfer (backward liveness fixpoint)."""
    code = [i for i in p if i.executable]
    returns = _return_sites(p)
    succ: dict[int, list[int]] = {}
    for i in code:
        nxt, may_return = successors(p, i)
        targets = [a for a in nxt if a in p.instructions and p.instructions[a].executable]
        if may_return:
            targets += [a for a in returns if a in p.instructions]
        succ[i.address] = targets

    live_in: dict[int, frozenset] = {i.address: frozenset() for i in code}
    changed = True
    while changed:
        changed = False
        for i in reversed(code):
            out = frozenset().union(*(live_in[a] for a in succ[i.address]))
            new = _transfer(i, out)
            if new != live_in[i.address]:
                live_in[i.address] = new
                changed = True

    chosen = set()
    for i in code:
        if is_critical(p, i) or writes_pc(i):
            continue
        out = frozenset().union(*(live_in[a] for a in succ[i.address]))
        if not (reg_write_set(i) & out):
            chosen.add(i.address)
    return AbstractionMap.of(chosen)


def _transfer(i: Instruction, live_out: frozenset) -> frozenset:
    reads, writes = reg_read_set(i), reg_write_set(i)
    if is_critical(None, i):
        return live_out | reads | writes
    if writes_pc(i):
        return live_out | reads
    if not (writes & live_out):
        return live_out
    killed = live_out if i.conditional else live_out - writes
    return killed | reads

"""Execution of a program over machine words extended with an unknown value.

Register and memory values are ``int`` (a 32-bit word) or ``None`` for the
unknown value.  Arithmetic on ``None`` yields ``None``.  A flag-setting
instruction with an unknown operand does not produce a single successor:
:func:`step` returns an :class:`AdversaryChoice` listing every consistent
outcome of the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple, Optional, Union

from .config import MachineConfig
from .isa import (
    CMP_OPS,
    LR,
    PC,
    SP,
    Cond,
    Imm,
    InstrClass,
    Instruction,
    Program,
    Reg,
    Shifted,
    classify,
    flags_needed,
    reg_name,
)

MASK = 0xFFFF_FFFF
ExtValue = Optional[int]
UNKNOWN: ExtValue = None


def signed(w: int) -> int:
    return w - (1 << 32) if w & 0x8000_0000 else w


class Preds(NamedTuple):
    eq: bool = False
    lt: bool = False
    le: bool = False
    ls: bool = False

    def holds(self, cond: Cond) -> bool:
        pred = cond.predicate
        if pred is None:
            return True
        value = getattr(self, pred)
        return not value if cond.negated else value


@dataclass(frozen=True)
class MachineState:
    regs: tuple
    preds: Preds = Preds()
    stack: Mapping[int, ExtValue] = field(default_factory=dict)
    memory: Mapping[int, int] = field(default_factory=dict)
    step_count: int = 0

    @property
    def pc(self) -> ExtValue:
        return self.regs[PC]

    def reg(self, r: int) -> ExtValue:
        return self.regs[r]

    def key(self) -> tuple:
        return (
            self.regs,
            self.preds,
            tuple(sorted(self.stack.items())),
            tuple(sorted(self.memory.items())),
            self.step_count,
        )

    def __hash__(self) -> int:
        return hash(self.key())

    def __str__(self) -> str:
        regs = " ".join(
            f"{reg_name(r)}={'?' if v is None else hex(v)}" for r, v in enumerate(self.regs)
        )
        return f"<{regs} {self.preds}>"


@dataclass(frozen=True)
class IssueRecord:
    """What the pipeline needs to know about one executed instruction."""

    instr: Instruction
    scheduled: bool = True
    data_addrs: tuple = ()
    branch_taken: bool = False

    @property
    def address(self) -> int:
        return self.instr.address

    @property
    def klass(self) -> InstrClass:
        return classify(self.instr)


class FaultKind(str, Enum):
    UNKNOWN_ADDRESS = "UnknownAddress"
    UNKNOWN_PC = "UnknownPc"
    STACK_OVERFLOW = "StackOverflow"
    STACK_UNDERFLOW = "StackUnderflow"
    RUN_BOUND = "RunBound"
    NON_EXECUTABLE = "NonExecutable"
    INVALID_PC = "InvalidPc"


@dataclass(frozen=True)
class Choice:
    label: str
    combos: tuple  # ((signed_class, unsigned_class | None), ...)
    preds: Preds
    state: MachineState


@dataclass(frozen=True)
class Deterministic:
    next: MachineState
    issue: IssueRecord


@dataclass(frozen=True)
class AdversaryChoice:
    pending: MachineState
    flags: frozenset
    choices: tuple
    issue: IssueRecord

    @property
    def address(self) -> int:
        return self.issue.address


@dataclass(frozen=True)
class Terminated:
    pass


@dataclass(frozen=True)
class Fault:
    kind: FaultKind
    address: Optional[int]
    detail: str = ""

    def __str__(self) -> str:
        where = "?" if self.address is None else hex(self.address)
        return f"{self.kind.value} at {where}" + (f": {self.detail}" if self.detail else "")


StepOutcome = Union[Deterministic, AdversaryChoice, Terminated, Fault]


class MachineFault(RuntimeError):
    def __init__(self, fault: Fault):
        super().__init__(str(fault))
        self.fault = fault


class NondeterministicRun(RuntimeError):
    def __init__(self, address: int):
        super().__init__(f"comparison at {address:#x} depends on unknown data")
        self.address = address


# outcome classes -------------------------------------------------------------

SIGNED_CLASSES = ("LT", "EQ", "GT")
UNSIGNED_CLASSES = ("LS", "HI")


def _combo_preds(s: str, u: Optional[str]) -> dict:
    return {"eq": s == "EQ", "lt": s == "LT", "le": s != "GT", "ls": u == "LS"}


def outcome_choices(flags: frozenset) -> list[tuple[str, tuple, dict]]:
    """Distinct predicate assignments over ``flags``, in LT<EQ<GT, LS<HI order.

    Each entry is ``(label, combos, assignment)``.  EQ forces LS, so the
    inconsistent pair (EQ, HI) never appears.
    """
    unsigned = UNSIGNED_CLASSES if "ls" in flags else (None,)
    groups: dict[tuple, list] = {}
    for s in SIGNED_CLASSES:
        for u in unsigned:
            if s == "EQ" and u == "HI":
                continue
            full = _combo_preds(s, u)
            proj = tuple((f, full[f]) for f in sorted(flags))
            groups.setdefault(proj, []).append((s, u))
    out = []
    signed_part = bool(flags & {"eq", "lt", "le"})
    for proj, combos in groups.items():
        parts = []
        if signed_part:
            parts.append("|".join(dict.fromkeys(s for s, _ in combos)))
        if "ls" in flags:
            parts.append("|".join(dict.fromkeys(u for _, u in combos)))
        out.append(("/".join(parts), tuple(combos), dict(proj)))
    return out


def choice_allowed(combos: tuple, allowed: frozenset) -> bool:
    """Whether a user constraint naming outcome classes admits this choice."""
    any_signed = bool(allowed & set(SIGNED_CLASSES))
    any_unsigned = bool(allowed & set(UNSIGNED_CLASSES))
    for s, u in combos:
        if (not any_signed or s in allowed) and (not any_unsigned or u is None or u in allowed):
            return True
    return False


# evaluation helpers ----------------------------------------------------------


def read_reg(s: MachineState, r: int, instr: Instruction) -> ExtValue:
    if r == PC:
        return (instr.address + 8) & MASK
    return s.regs[r]


def _shift(value: int, kind: str, amount: int) -> int:
    if kind == "lsl":
        return (value << amount) & MASK
    if kind == "lsr":
        return value >> amount if amount < 32 else 0
    if kind == "asr":
        return (signed(value) >> min(amount, 32)) & MASK
    raise ValueError(kind)


def operand_value(s: MachineState, op, instr: Instruction) -> ExtValue:
    if isinstance(op, Imm):
        return op.value & MASK
    if isinstance(op, Reg):
        return read_reg(s, op.n, instr)
    if isinstance(op, Shifted):
        v = read_reg(s, op.reg, instr)
        return None if v is None else _shift(v, op.kind, op.amount)
    raise TypeError(op)


def _alu(op: str, a: ExtValue, b: ExtValue) -> ExtValue:
    if op == "mov":
        return b
    if op == "mvn":
        return None if b is None else (~b) & MASK
    if a is None or b is None:
        return None
    if op == "add":
        return (a + b) & MASK
    if op == "sub":
        return (a - b) & MASK
    if op == "rsb":
        return (b - a) & MASK
    if op == "and":
        return a & b
    if op == "orr":
        return a | b
    if op == "eor":
        return a ^ b
    raise ValueError(op)


def flag_values(mnemonic: str, a: int, b: int) -> dict:
    """The four status predicates produced by a flag-setting operation.

    Subtractive operations compare their operands (signed for lt/le,
    unsigned for ls).  Additive ones test the sum.  Logical ones test
    the result against zero with carry taken as set.
    """
    if mnemonic in ("cmp", "sub", "rsb"):
        x, y = (b, a) if mnemonic == "rsb" else (a, b)
        return {
            "eq": x == y,
            "lt": signed(x) < signed(y),
            "le": signed(x) <= signed(y),
            "ls": x <= y,
        }
    if mnemonic in ("cmn", "add"):
        total = a + b
        zero = total & MASK == 0
        neg = signed(a) + signed(b) < 0
        return {"eq": zero, "lt": neg, "le": zero or neg, "ls": total < (1 << 32) or zero}
    if mnemonic in ("tst", "and"):
        r = a & b
    elif mnemonic in ("teq", "eor"):
        r = a ^ b
    elif mnemonic == "orr":
        r = a | b
    elif mnemonic == "mov":
        r = b
    elif mnemonic == "mvn":
        r = (~b) & MASK
    else:
        raise ValueError(mnemonic)
    return {"eq": r == 0, "lt": signed(r) < 0, "le": r == 0 or signed(r) < 0, "ls": r == 0}


# state construction ------------------------------------------------------------


def init_state(
    p: Program,
    cfg: MachineConfig = MachineConfig(),
    *,
    registers: Optional[Mapping[int, int]] = None,
    memory: Optional[Mapping[int, int]] = None,
) -> MachineState:
    regs: list[ExtValue] = [UNKNOWN] * 16
    regs[PC] = p.entry
    regs[SP] = cfg.stack_base & MASK
    regs[LR] = cfg.init_lr & MASK
    stack: dict[int, ExtValue] = {}
    heap: dict[int, int] = {}
    for r, v in (registers or {}).items():
        regs[r] = None if v is None else v & MASK
    for addr, v in (memory or {}).items():
        if cfg.stack_low <= addr < cfg.stack_base:
            stack[addr] = v & MASK
        else:
            heap[addr] = v & MASK
    return MachineState(tuple(regs), Preds(), stack, heap, 0)


class _Mem:
    """Copy-on-write view of stack and input memory during one step."""

    def __init__(self, p: Program, s: MachineState, cfg: MachineConfig, instr: Instruction):
        self.p, self.cfg, self.instr = p, cfg, instr
        self.stack = s.stack
        self.memory = s.memory
        self._stack_copied = self._memory_copied = False

    def _region(self, addr: int, via_sp: bool) -> str:
        if self.cfg.stack_low <= addr < self.cfg.stack_base:
            return "stack"
        if via_sp:
            raise MachineFault(Fault(
                FaultKind.STACK_OVERFLOW if addr < self.cfg.stack_low else FaultKind.STACK_UNDERFLOW,
                self.instr.address,
                f"stack access at {addr:#x}",
            ))
        return "heap"

    def load(self, addr: int, via_sp: bool) -> ExtValue:
        if self._region(addr, via_sp) == "stack":
            return self.stack.get(addr)
        if addr in self.memory:
            return self.memory[addr]
        # read-only literal pools in the code segment
        return self.p.literal(addr)

    def store(self, addr: int, value: ExtValue, via_sp: bool) -> None:
        if self._region(addr, via_sp) == "stack":
            if not self._stack_copied:
                self.stack = dict(self.stack)
                self._stack_copied = True
            self.stack[addr] = value
        elif addr in self.memory:
            if not self._memory_copied:
                self.memory = dict(self.memory)
                self._memory_copied = True
            if value is None:
                del self.memory[addr]
            else:
                self.memory[addr] = value


def _fault(kind: FaultKind, instr: Instruction, detail: str = "") -> MachineFault:
    return MachineFault(Fault(kind, instr.address, detail))


def _next_pc(value: ExtValue, instr: Instruction) -> int:
    if value is None:
        raise _fault(FaultKind.UNKNOWN_PC, instr, "pc would become unknown")
    return value & ~0x3 & MASK


def multi_addresses(instr: Instruction, base: int) -> tuple[list[int], int]:
    """Per-register addresses (register-number order) and written-back base."""
    n = len(instr.reg_list)
    start = {
        "ia": base,
        "ib": base + 4,
        "da": base - 4 * n + 4,
        "db": base - 4 * n,
    }[instr.mode]
    new_base = base + 4 * n if instr.mode in ("ia", "ib") else base - 4 * n
    return [(start + 4 * k) & MASK for k in range(n)], new_base & MASK


def mem_address(s: MachineState, instr: Instruction) -> tuple[ExtValue, ExtValue]:
    """(access address, written-back base) of a single load/store."""
    mem = instr.mem_expr
    base = read_reg(s, mem.base, instr)
    off = 0 if mem.offset is None else operand_value(s, mem.offset, instr)
    if base is None or off is None:
        return None, None
    updated = (base - off if mem.subtract else base + off) & MASK
    return (updated if mem.pre else base), updated


def ndcmp(p: Program, i: Instruction, s: MachineState) -> bool:
    """Flag-setting instruction whose outcome depends on an unknown operand."""
    if not i.sets_flags:
        return False
    ops = i.operands if i.mnemonic in CMP_OPS else i.operands[1:]
    return any(operand_value(s, op, i) is None for op in ops)


def step(
    p: Program,
    s: MachineState,
    cfg: MachineConfig = MachineConfig(),
    abstracted: frozenset = frozenset(),
) -> StepOutcome:
    """One instruction of the extended semantics; pure in its arguments."""
    pc = s.regs[PC]
    if pc is None:
        return Fault(FaultKind.UNKNOWN_PC, None, "pc is unknown")
    if pc == cfg.init_lr & MASK:
        return Terminated()
    instr = p.instructions.get(pc)
    if instr is None:
        return Fault(FaultKind.INVALID_PC, pc, "no instruction at this address")
    if not instr.executable:
        return Fault(FaultKind.NON_EXECUTABLE, pc, f"data word {instr}")
    if s.step_count >= cfg.run_bound:
        return Fault(FaultKind.RUN_BOUND, pc, f"run exceeded {cfg.run_bound} steps")
    try:
        return _execute(p, s, cfg, instr, pc in abstracted)
    except MachineFault as exc:
        return exc.fault


def _execute(p, s: MachineState, cfg, instr: Instruction, is_abstracted: bool) -> StepOutcome:
    klass = classify(instr)
    regs = list(s.regs)
    regs[PC] = (instr.address + 4) & MASK
    count = s.step_count + 1

    def done(scheduled=True, data=(), taken=False, stack=s.stack, memory=s.memory, preds=s.preds):
        nxt = MachineState(tuple(regs), preds, stack, memory, count)
        return Deterministic(nxt, IssueRecord(instr, scheduled, tuple(data), taken))

    if instr.cond is not Cond.AL and not s.preds.holds(instr.cond):
        return done(scheduled=False)

    if is_abstracted:
        # only pc moves; footprint and timing are those of the concrete instruction
        return done()

    m = instr.mnemonic
    if klass in (InstrClass.DATA_PROC, InstrClass.COMPARE):
        if m in CMP_OPS:
            a = operand_value(s, instr.operands[0], instr)
            b = operand_value(s, instr.operands[1], instr)
            base_op = {"cmp": "cmp", "cmn": "cmn", "tst": "tst", "teq": "teq"}[m]
        else:
            rd = instr.operands[0].n
            if m in ("mov", "mvn"):
                a, b = 0, operand_value(s, instr.operands[1], instr)
            else:
                a = operand_value(s, instr.operands[1], instr)
                b = operand_value(s, instr.operands[2], instr)
            result = _alu(m, a, b)
            base_op = m
            if rd == PC:
                regs[PC] = _next_pc(result, instr)
            else:
                regs[rd] = result
        if not instr.sets_flags:
            return done()
        needed = flags_needed(p, instr)
        known = a is not None and b is not None
        if known:
            values = flag_values(base_op, a, b)
            preds = s.preds._replace(**{f: values[f] for f in needed})
            return done(preds=preds)
        if not needed:
            return done()
        nxt = MachineState(tuple(regs), s.preds, s.stack, s.memory, count)
        choices = tuple(
            Choice(label, combos, s.preds._replace(**assign), MachineState(
                nxt.regs, s.preds._replace(**assign), nxt.stack, nxt.memory, count))
            for label, combos, assign in outcome_choices(needed)
        )
        return AdversaryChoice(nxt, needed, choices, IssueRecord(instr, True, (), False))

    if klass in (InstrClass.LOAD, InstrClass.STORE):
        addr, updated = mem_address(s, instr)
        if addr is None:
            raise _fault(FaultKind.UNKNOWN_ADDRESS, instr, f"address of {instr} is unknown")
        mem = _Mem(p, s, cfg, instr)
        via_sp = instr.mem_expr.base == SP
        rd = instr.operands[0].n
        if instr.mem_expr.writeback:
            regs[instr.mem_expr.base] = updated
        if klass is InstrClass.LOAD:
            value = mem.load(addr, via_sp)
            if rd == PC:
                regs[PC] = _next_pc(value, instr)
            else:
                regs[rd] = value
        else:
            mem.store(addr, read_reg(s, rd, instr), via_sp)
        return done(data=(addr,), stack=mem.stack, memory=mem.memory)

    if klass in (InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE):
        base = read_reg(s, instr.mem_expr.base, instr)
        if base is None:
            raise _fault(FaultKind.UNKNOWN_ADDRESS, instr, f"base of {instr} is unknown")
        addrs, new_base = multi_addresses(instr, base)
        via_sp = instr.mem_expr.base == SP
        mem = _Mem(p, s, cfg, instr)
        if instr.writeback:
            regs[instr.mem_expr.base] = new_base
        for r, addr in zip(instr.reg_list, addrs):
            if klass is InstrClass.MULTI_LOAD:
                value = mem.load(addr, via_sp)
                if r == PC:
                    regs[PC] = _next_pc(value, instr)
                else:
                    regs[r] = value
            else:
                mem.store(addr, read_reg(s, r, instr), via_sp)
        return done(data=addrs, stack=mem.stack, memory=mem.memory)

    if m == "bx":
        regs[PC] = _next_pc(read_reg(s, instr.operands[0].n, instr), instr)
        return done(taken=True)
    # b / bl
    if m == "bl":
        regs[LR] = (instr.address + 4) & MASK
    regs[PC] = instr.target
    return done(taken=True)


def run_concrete(
    p: Program,
    cfg: MachineConfig = MachineConfig(),
    *,
    registers: Optional[Mapping[int, int]] = None,
    memory: Optional[Mapping[int, int]] = None,
    abstracted: frozenset = frozenset(),
) -> list[IssueRecord]:
    """Issue records of the unique run from the given inputs."""
    s = init_state(p, cfg, registers=registers, memory=memory)
    trace: list[IssueRecord] = []
    while True:
        out = step(p, s, cfg, abstracted)
        if isinstance(out, Terminated):
            return trace
        if isinstance(out, Fault):
            raise MachineFault(out)
        if isinstance(out, AdversaryChoice):
            raise NondeterministicRun(out.address)
        trace.append(out.issue)
        s = out.next

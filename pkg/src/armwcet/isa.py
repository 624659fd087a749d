"""Parser and static metadata for the supported ARM9 assembly subset.

Input is ``objdump -d`` style text.  Every instruction line looks like::

    4:   e1520000    cmp r2, r0      ; comment   / le /

where the 8-digit encoding is optional and the trailing ``/ ... /`` group
lists the status predicates a flag-setting instruction must provide.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Optional, Union

__all__ = [
    "Cond",
    "InstrClass",
    "Stage",
    "Reg",
    "Imm",
    "Shifted",
    "MemExpr",
    "Instruction",
    "Function",
    "Program",
    "DurationTable",
    "ParseError",
    "ListingSyntaxError",
    "UnsupportedMnemonic",
    "MissingEntry",
    "FlagScanDiverged",
    "AnnotationMismatch",
    "parse_listing",
    "format_program",
    "reg_read_set",
    "reg_write_set",
    "flags_needed",
    "classify",
    "stage_duration",
    "successors",
    "PC",
    "LR",
    "SP",
    "PREDICATES",
]

SP, LR, PC = 13, 14, 15
PREDICATES = ("eq", "lt", "le", "ls")

_REG_ALIASES = {"sb": 9, "sl": 10, "fp": 11, "ip": 12, "sp": 13, "lr": 14, "pc": 15}
_REG_NAMES = {9: "r9", 10: "sl", 11: "fp", 12: "ip", 13: "sp", 14: "lr", 15: "pc"}


def reg_name(n: int) -> str:
    return _REG_NAMES.get(n, f"r{n}")


def parse_reg(tok: str) -> Optional[int]:
    tok = tok.strip().lower()
    if tok in _REG_ALIASES:
        return _REG_ALIASES[tok]
    m = re.fullmatch(r"r(\d{1,2})", tok)
    if m and int(m.group(1)) < 16:
        return int(m.group(1))
    return None


class Cond(str, Enum):
    AL = "al"
    EQ = "eq"
    NE = "ne"
    LT = "lt"
    GE = "ge"
    LE = "le"
    GT = "gt"
    LS = "ls"
    HI = "hi"

    @property
    def predicate(self) -> Optional[str]:
        """Status predicate this condition reads (None for AL)."""
        return _COND_PRED[self]

    @property
    def negated(self) -> bool:
        return self in (Cond.NE, Cond.GE, Cond.GT, Cond.HI)


_COND_PRED = {
    Cond.AL: None,
    Cond.EQ: "eq",
    Cond.NE: "eq",
    Cond.LT: "lt",
    Cond.GE: "lt",
    Cond.LE: "le",
    Cond.GT: "le",
    Cond.LS: "ls",
    Cond.HI: "ls",
}
_UNSUPPORTED_CONDS = {"cs", "cc", "hs", "lo", "mi", "pl", "vs", "vc", "nv"}


class InstrClass(str, Enum):
    DATA_PROC = "DataProc"
    LOAD = "Load"
    STORE = "Store"
    MULTI_LOAD = "MultiLoad"
    MULTI_STORE = "MultiStore"
    BRANCH = "Branch"
    COND_BRANCH = "CondBranch"
    BRANCH_LINK = "BranchLink"
    COMPARE = "Compare"


class Stage(IntEnum):
    FETCH = 1
    DECODE = 2
    EXECUTE = 3
    MEMORY = 4
    WRITEBACK = 5


# operands ------------------------------------------------------------------


@dataclass(frozen=True)
class Reg:
    n: int

    def __str__(self) -> str:
        return reg_name(self.n)


@dataclass(frozen=True)
class Imm:
    value: int

    def __str__(self) -> str:
        return f"#{self.value}"


@dataclass(frozen=True)
class Shifted:
    """Register shifted by an immediate amount (``r2, lsl #3``)."""

    reg: int
    kind: str  # lsl | lsr | asr
    amount: int

    def __str__(self) -> str:
        return f"{reg_name(self.reg)}, {self.kind} #{self.amount}"


Operand = Union[Reg, Imm, Shifted]


@dataclass(frozen=True)
class MemExpr:
    """Load/store addressing: ``[base, ±offset]``, pre/post indexed."""

    base: int
    offset: Optional[Operand] = None
    subtract: bool = False
    pre: bool = True
    writeback: bool = False

    def registers(self) -> set[int]:
        regs = {self.base}
        if isinstance(self.offset, Reg):
            regs.add(self.offset.n)
        elif isinstance(self.offset, Shifted):
            regs.add(self.offset.reg)
        return regs

    def _offset_text(self) -> str:
        off = self.offset
        if isinstance(off, Imm):
            return f"#{-off.value if self.subtract else off.value}"
        return ("-" if self.subtract else "") + str(off)

    def __str__(self) -> str:
        base = reg_name(self.base)
        if self.offset is None:
            return f"[{base}]"
        if not self.pre:
            return f"[{base}], {self._offset_text()}"
        return f"[{base}, {self._offset_text()}]" + ("!" if self.writeback else "")


# instructions --------------------------------------------------------------

DATA_OPS = ("mov", "mvn", "add", "sub", "rsb", "and", "orr", "eor")
CMP_OPS = ("cmp", "cmn", "tst", "teq")
_UNARY_OPS = ("mov", "mvn")
_BASES = DATA_OPS + CMP_OPS + ("ldr", "str", "ldm", "stm", "push", "pop", "bl", "bx", "b")
_MODES = {"ia": "ia", "ib": "ib", "da": "da", "db": "db", "fd": None, "ea": None, "fa": None, "ed": None}
# stack-oriented aliases depend on direction (load vs store)
_STACK_MODES = {
    ("ldm", "fd"): "ia",
    ("ldm", "ea"): "db",
    ("ldm", "fa"): "da",
    ("ldm", "ed"): "ib",
    ("stm", "fd"): "db",
    ("stm", "ea"): "ia",
    ("stm", "fa"): "ib",
    ("stm", "ed"): "da",
}


@dataclass(frozen=True)
class Instruction:
    address: int
    mnemonic: str
    cond: Cond = Cond.AL
    sets_flags: bool = False
    operands: tuple = ()
    mem_expr: Optional[MemExpr] = None
    reg_list: tuple[int, ...] = ()
    mode: Optional[str] = None  # ia/ib/da/db for ldm/stm
    writeback: bool = False  # ldm/stm "!"
    target: Optional[int] = None
    annotations: frozenset = frozenset()
    encoding: Optional[int] = field(default=None, compare=False)
    executable: bool = True
    raw: str = field(default="", compare=False)

    @property
    def conditional(self) -> bool:
        return self.cond is not Cond.AL

    def full_mnemonic(self) -> str:
        text = self.mnemonic
        if self.mode:
            text += self.mode
        if self.cond is not Cond.AL:
            text += self.cond.value
        if self.sets_flags and self.mnemonic in DATA_OPS:
            text += "s"
        return text

    def operand_text(self) -> str:
        if not self.executable:
            return self.raw
        m = self.mnemonic
        if m in ("b", "bl"):
            return f"{self.target:x}"
        if m in ("ldm", "stm"):
            regs = ", ".join(reg_name(r) for r in self.reg_list)
            bang = "!" if self.writeback else ""
            return f"{reg_name(self.mem_expr.base)}{bang}, {{{regs}}}"
        parts = [str(o) for o in self.operands]
        if self.mem_expr is not None:
            parts.append(str(self.mem_expr))
        return ", ".join(parts)

    def __str__(self) -> str:
        if not self.executable:
            return f"{self.mnemonic} {self.raw}".strip()
        return f"{self.full_mnemonic()} {self.operand_text()}".strip()


@dataclass(frozen=True)
class Function:
    name: str
    start: int
    end: int


@dataclass
class Program:
    instructions: dict[int, Instruction]
    entry: int
    functions: list[Function] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.instructions = dict(sorted(self.instructions.items()))
        self._flags_cache: dict[int, frozenset] = {}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return (
            self.instructions == other.instructions
            and self.entry == other.entry
            and self.functions == other.functions
        )

    def __len__(self) -> int:
        return len(self.instructions)

    def __getitem__(self, address: int) -> Instruction:
        return self.instructions[address]

    def __contains__(self, address: object) -> bool:
        return address in self.instructions

    def __iter__(self):
        return iter(self.instructions.values())

    def function_of(self, address: int) -> Optional[Function]:
        for fn in self.functions:
            if fn.start <= address <= fn.end:
                return fn
        return None

    def literal(self, address: int) -> Optional[int]:
        """Word stored at a code address, if the listing carries encodings."""
        instr = self.instructions.get(address)
        return None if instr is None else instr.encoding


# errors --------------------------------------------------------------------


class ParseError(ValueError):
    pass


class ListingSyntaxError(ParseError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class UnsupportedMnemonic(ParseError):
    def __init__(self, address: int, mnemonic: str):
        super().__init__(f"unsupported instruction {mnemonic!r} at {address:#x}")
        self.address = address
        self.mnemonic = mnemonic


class MissingEntry(ParseError):
    pass


class FlagScanDiverged(RuntimeError):
    def __init__(self, address: int):
        super().__init__(f"flag scan from {address:#x} left the program")
        self.address = address


class AnnotationMismatch(UserWarning):
    pass


# mnemonic decoding ---------------------------------------------------------


def _split_suffix(base: str, suffix: str):
    """Split a mnemonic suffix into (mode, cond, s). Returns None if invalid."""
    mode = cond = None
    s = False
    rest = suffix
    while rest:
        if rest[:2] in Cond._value2member_map_ and cond is None:
            cond = rest[:2]
            rest = rest[2:]
        elif rest[:2] in _UNSUPPORTED_CONDS and cond is None:
            cond = rest[:2]
            rest = rest[2:]
        elif base in ("ldm", "stm") and rest[:2] in _MODES and mode is None:
            mode = rest[:2]
            rest = rest[2:]
        elif rest[0] == "s" and not s and base in DATA_OPS:
            s = True
            rest = rest[1:]
        else:
            return None
    return mode, cond, s


def _decode_mnemonic(word: str):
    word = word.lower()
    for base in _BASES:
        if not word.startswith(base):
            continue
        parsed = _split_suffix(base, word[len(base):])
        if parsed is not None:
            return (base,) + parsed
    return None


# operand parsing -----------------------------------------------------------

_IMM_RE = re.compile(r"#\s*(-?(?:0x[0-9a-f]+|\d+))$", re.I)


def _parse_imm(tok: str) -> Optional[int]:
    m = _IMM_RE.fullmatch(tok.strip())
    if not m:
        return None
    return int(m.group(1), 0)


def _split_top(text: str) -> list[str]:
    """Split on commas outside brackets and braces."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[{":
            depth += 1
        elif ch in "]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur).strip())
    return parts


def _parse_operand2(toks: list[str], fail) -> Operand:
    if len(toks) == 1:
        imm = _parse_imm(toks[0])
        if imm is not None:
            return Imm(imm)
        r = parse_reg(toks[0])
        if r is None:
            fail(f"bad operand {toks[0]!r}")
        return Reg(r)
    if len(toks) == 2:
        r = parse_reg(toks[0])
        m = re.fullmatch(r"(lsl|lsr|asr|asl)\s+(.+)", toks[1].strip(), re.I)
        if r is None or not m:
            fail(f"bad shifted operand {', '.join(toks)!r}")
        kind = m.group(1).lower().replace("asl", "lsl")
        amount = _parse_imm(m.group(2))
        if amount is None:
            fail("register-specified shifts are not supported")
        return Shifted(r, kind, amount)
    fail(f"too many operand parts: {toks}")


def _parse_mem(text: str, fail) -> MemExpr:
    text = text.strip()
    m = re.fullmatch(r"\[([^\]]*)\](!?)\s*(?:,\s*(.+))?", text)
    if not m:
        fail(f"bad memory operand {text!r}")
    inner = _split_top(m.group(1))
    writeback = m.group(2) == "!"
    post = m.group(3)
    base = parse_reg(inner[0])
    if base is None:
        fail(f"bad base register {inner[0]!r}")
    if post is not None:
        if len(inner) != 1:
            fail("post-indexed form takes a bare base register")
        off_toks = _split_top(post)
        pre = False
        writeback = True
    else:
        off_toks = inner[1:]
        pre = True
    if not off_toks:
        return MemExpr(base, None, False, pre, writeback)
    subtract = False
    first = off_toks[0].strip()
    imm = _parse_imm(first)
    if imm is not None and len(off_toks) == 1:
        if imm < 0:
            return MemExpr(base, Imm(-imm), True, pre, writeback)
        return MemExpr(base, Imm(imm), False, pre, writeback)
    if first.startswith("-"):
        subtract = True
        off_toks = [first[1:]] + off_toks[1:]
    elif first.startswith("+"):
        off_toks = [first[1:]] + off_toks[1:]
    off = _parse_operand2(off_toks, fail)
    if isinstance(off, Imm):
        fail("bad memory offset")
    return MemExpr(base, off, subtract, pre, writeback)


def _parse_reg_list(text: str, fail) -> tuple[int, ...]:
    m = re.fullmatch(r"\{(.*)\}", text.strip())
    if not m:
        fail(f"bad register list {text!r}")
    regs: set[int] = set()
    for part in m.group(1).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (parse_reg(x) for x in part.split("-", 1))
            if lo is None or hi is None or hi < lo:
                fail(f"bad register range {part!r}")
            regs.update(range(lo, hi + 1))
        else:
            r = parse_reg(part)
            if r is None:
                fail(f"bad register {part!r}")
            regs.add(r)
    if not regs:
        fail("empty register list")
    return tuple(sorted(regs))


def _decode(address, mnemonic_word, operand_text, annotations, encoding, lineno) -> Instruction:
    def fail(msg):
        raise ListingSyntaxError(lineno, msg)

    decoded = _decode_mnemonic(mnemonic_word)
    if decoded is None:
        raise UnsupportedMnemonic(address, mnemonic_word)
    base, mode, cond_text, s = decoded
    if cond_text in _UNSUPPORTED_CONDS:
        raise UnsupportedMnemonic(address, mnemonic_word)
    cond = Cond(cond_text) if cond_text else Cond.AL
    common = dict(address=address, cond=cond, annotations=annotations, encoding=encoding,
                  raw=operand_text)
    toks = _split_top(operand_text)

    if base in DATA_OPS:
        if base in _UNARY_OPS:
            if len(toks) < 2:
                fail(f"{base} needs two operands")
            rd = parse_reg(toks[0])
            if rd is None:
                fail(f"bad destination {toks[0]!r}")
            ops = (Reg(rd), _parse_operand2(toks[1:], fail))
        else:
            if len(toks) < 3:
                fail(f"{base} needs three operands")
            rd, rn = parse_reg(toks[0]), parse_reg(toks[1])
            if rd is None or rn is None:
                fail("bad register operand")
            ops = (Reg(rd), Reg(rn), _parse_operand2(toks[2:], fail))
        return Instruction(mnemonic=base, sets_flags=s, operands=ops, **common)

    if base in CMP_OPS:
        if len(toks) < 2:
            fail(f"{base} needs two operands")
        rn = parse_reg(toks[0])
        if rn is None:
            fail(f"bad register {toks[0]!r}")
        ops = (Reg(rn), _parse_operand2(toks[1:], fail))
        return Instruction(mnemonic=base, sets_flags=True, operands=ops, **common)

    if base in ("ldr", "str"):
        if len(toks) < 2:
            fail(f"{base} needs a register and an address")
        rd = parse_reg(toks[0])
        if rd is None:
            fail(f"bad register {toks[0]!r}")
        mem = _parse_mem(operand_text.split(",", 1)[1], fail)
        return Instruction(mnemonic=base, operands=(Reg(rd),), mem_expr=mem, **common)

    if base in ("push", "pop"):
        regs = _parse_reg_list(operand_text, fail)
        real = "stm" if base == "push" else "ldm"
        return Instruction(mnemonic=real, mode="db" if base == "push" else "ia", writeback=True,
                           mem_expr=MemExpr(SP), reg_list=regs, **common)

    if base in ("ldm", "stm"):
        m = re.fullmatch(r"\s*(\w+)\s*(!?)\s*,\s*(\{.*\})\s*", operand_text)
        if not m:
            fail(f"bad {base} operands {operand_text!r}")
        rn = parse_reg(m.group(1))
        if rn is None:
            fail(f"bad base register {m.group(1)!r}")
        if mode is None:
            mode = "ia"
        elif _MODES[mode] is None:
            mode = _STACK_MODES[(base, mode)]
        regs = _parse_reg_list(m.group(3), fail)
        return Instruction(mnemonic=base, mode=mode, writeback=m.group(2) == "!",
                           mem_expr=MemExpr(rn), reg_list=regs, **common)

    if base == "bx":
        r = parse_reg(operand_text)
        if r is None:
            fail(f"bad bx operand {operand_text!r}")
        return Instruction(mnemonic="bx", operands=(Reg(r),), **common)

    # b / bl
    m = re.fullmatch(r"\s*(?:0x)?([0-9a-f]+)\s*", operand_text, re.I)
    if not m:
        fail(f"bad branch target {operand_text!r}")
    return Instruction(mnemonic=base, target=int(m.group(1), 16), **common)


# listing parsing ---------------------------------------------------------------

_HEADER_RE = re.compile(r"^\s*([0-9a-f]+)\s+<([^>]+)>:\s*$", re.I)
_LINE_RE = re.compile(r"^\s*([0-9a-f]+):\s+(?:([0-9a-f]{8})\s+)?([a-z][a-z0-9.]*)\b(.*)$", re.I)
_ANNOT_RE = re.compile(r"/([^/]*)/\s*$")
_ANNOT_ALIASES = {"ne": "eq", "ge": "lt", "gt": "le", "hi": "ls"}


def _parse_annotation(text: str, lineno: int) -> frozenset:
    preds = set()
    for word in text.split():
        word = word.lower()
        word = _ANNOT_ALIASES.get(word, word)
        if word not in PREDICATES:
            raise ListingSyntaxError(lineno, f"unknown predicate {word!r} in annotation")
        preds.add(word)
    return frozenset(preds)


def _ends_flow(instr: Instruction) -> bool:
    """Unconditional transfer after which the next address is not reached."""
    if instr.cond is not Cond.AL:
        return False
    if instr.mnemonic in ("b", "bx"):
        return True
    return PC in reg_write_set(instr) and instr.mnemonic != "bl"


def parse_listing(text: str, *, require_entry: bool = True) -> Program:
    """Parse an objdump-style listing into a :class:`Program`."""
    rows = []
    headers: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(("#", "Disassembly", "//")):
            continue
        if re.match(r"^\S+:\s+file format", line):
            continue
        hm = _HEADER_RE.match(line)
        if hm:
            headers.append((int(hm.group(1), 16), hm.group(2)))
            continue
        body = line
        annotations: frozenset = frozenset()
        am = _ANNOT_RE.search(body)
        if am:
            annotations = _parse_annotation(am.group(1), lineno)
            body = body[: am.start()]
        body = body.split(";", 1)[0]
        body = re.sub(r"<[^>]*>", "", body)
        lm = _LINE_RE.match(body)
        if not lm:
            raise ListingSyntaxError(lineno, f"cannot parse {line.strip()!r}")
        address = int(lm.group(1), 16)
        if address % 4:
            raise ListingSyntaxError(lineno, f"address {address:#x} is not word aligned")
        encoding = int(lm.group(2), 16) if lm.group(2) else None
        rows.append((lineno, address, encoding, lm.group(3), lm.group(4).strip(), annotations))

    seen = set()
    decoded: dict[int, Union[Instruction, Exception]] = {}
    for lineno, address, encoding, word, ops, annotations in rows:
        if address in seen:
            raise ListingSyntaxError(lineno, f"duplicate address {address:#x}")
        seen.add(address)
        try:
            decoded[address] = _decode(address, word, ops, annotations, encoding, lineno)
        except ParseError as exc:
            decoded[address] = exc

    functions = _functions(headers, sorted(seen))
    data = _data_addresses(decoded, functions)
    instructions: dict[int, Instruction] = {}
    for lineno, address, encoding, word, ops, annotations in rows:
        item = decoded[address]
        if address in data:
            instructions[address] = Instruction(
                address=address, mnemonic=word.lower(), encoding=encoding,
                executable=False, raw=ops)
        elif isinstance(item, Exception):
            raise item
        else:
            instructions[address] = item

    if not instructions:
        if require_entry:
            raise MissingEntry("listing contains no instructions")
        return Program({}, 0, functions)
    entry = next((f.start for f in functions if f.name == "main"), min(instructions))
    if entry not in instructions:
        raise MissingEntry(f"entry {entry:#x} has no instruction")
    program = Program(instructions, entry, functions)
    for instr in program:
        if instr.executable and instr.target is not None and instr.target not in program:
            raise ListingSyntaxError(0, f"branch at {instr.address:#x} targets unknown {instr.target:#x}")
    return program


def _functions(headers, addresses) -> list[Function]:
    out = []
    headers = sorted(headers)
    for k, (start, name) in enumerate(headers):
        limit = headers[k + 1][0] if k + 1 < len(headers) else None
        body = [a for a in addresses if a >= start and (limit is None or a < limit)]
        out.append(Function(name, start, body[-1] if body else start))
    return out


def _data_addresses(decoded, functions) -> set[int]:
    """Lines after a function's final flow-ending instruction that nothing branches to."""
    targets = {i.target for i in decoded.values() if isinstance(i, Instruction) and i.target is not None}
    spans = functions or [Function("", min(decoded, default=0), max(decoded, default=0))]
    data = set()
    for fn in spans:
        addrs = [a for a in sorted(decoded) if fn.start <= a <= fn.end]
        last_end = None
        for a in addrs:
            item = decoded[a]
            if isinstance(item, Instruction) and _ends_flow(item):
                last_end = a
        if last_end is None:
            continue
        for a in addrs:
            if a > last_end and a not in targets:
                data.add(a)
    return data


def format_program(program: Program) -> str:
    """Render a program back into listing text that :func:`parse_listing` accepts."""
    lines = []
    starts = {f.start: f for f in program.functions}
    for addr, instr in program.instructions.items():
        if addr in starts:
            if lines:
                lines.append("")
            lines.append(f"{addr:08x} <{starts[addr].name}>:")
        enc = f"{instr.encoding:08x}\t" if instr.encoding is not None else ""
        text = f"{addr:>4x}:\t{enc}{instr}"
        if instr.annotations:
            text += "\t/ " + " ".join(sorted(instr.annotations)) + " /"
        lines.append(text)
    return "\n".join(lines) + "\n"


# static metadata -------------------------------------------------------------


def _operand_regs(op) -> set[int]:
    if isinstance(op, Reg):
        return {op.n}
    if isinstance(op, Shifted):
        return {op.reg}
    return set()


def reg_read_set(i: Instruction) -> frozenset:
    if not i.executable:
        return frozenset()
    m = i.mnemonic
    regs: set[int] = set()
    if m in DATA_OPS:
        for op in i.operands[1:]:
            regs |= _operand_regs(op)
    elif m in CMP_OPS or m == "bx":
        for op in i.operands:
            regs |= _operand_regs(op)
    elif m == "ldr":
        regs |= i.mem_expr.registers()
    elif m == "str":
        regs |= i.mem_expr.registers() | {i.operands[0].n}
    elif m == "ldm":
        regs.add(i.mem_expr.base)
    elif m == "stm":
        regs.add(i.mem_expr.base)
        regs.update(i.reg_list)
    return frozenset(regs)


def reg_write_set(i: Instruction) -> frozenset:
    if not i.executable:
        return frozenset()
    m = i.mnemonic
    regs: set[int] = set()
    if m in DATA_OPS:
        regs.add(i.operands[0].n)
    elif m == "ldr":
        regs.add(i.operands[0].n)
        if i.mem_expr.writeback:
            regs.add(i.mem_expr.base)
    elif m == "str":
        if i.mem_expr.writeback:
            regs.add(i.mem_expr.base)
    elif m == "ldm":
        regs.update(i.reg_list)
        if i.writeback:
            regs.add(i.mem_expr.base)
    elif m == "stm":
        if i.writeback:
            regs.add(i.mem_expr.base)
    elif m in ("b", "bx"):
        regs.add(PC)
    elif m == "bl":
        regs.update((PC, LR))
    return frozenset(regs)


def classify(i: Instruction) -> InstrClass:
    m = i.mnemonic
    if m in CMP_OPS:
        return InstrClass.COMPARE
    if m == "ldr":
        return InstrClass.LOAD
    if m == "str":
        return InstrClass.STORE
    if m == "ldm":
        return InstrClass.MULTI_LOAD
    if m == "stm":
        return InstrClass.MULTI_STORE
    if m == "bl":
        return InstrClass.BRANCH_LINK
    if m in ("b", "bx"):
        return InstrClass.BRANCH if i.cond is Cond.AL else InstrClass.COND_BRANCH
    return InstrClass.DATA_PROC


def is_return(i: Instruction) -> bool:
    """Writes pc from a register or the stack (target not statically known)."""
    if not i.executable or i.mnemonic in ("b", "bl"):
        return False
    return PC in reg_write_set(i)


def successors(program: Program, i: Instruction) -> tuple[list[int], bool]:
    """Static successors of ``i`` and whether control may also leave via a return."""
    nxt = i.address + 4
    if i.mnemonic in ("b", "bl"):
        succ = [i.target]
        if i.cond is not Cond.AL and i.mnemonic == "b":
            succ.append(nxt)
        return succ, False
    if is_return(i):
        return ([nxt] if i.cond is not Cond.AL else []), True
    return [nxt], False


def _computed_flags(program: Program, start: Instruction) -> frozenset:
    needed: set[str] = set()
    seen: set[int] = set()
    work, _ = successors(program, start)
    work = list(work)
    while work:
        addr = work.pop()
        if addr in seen:
            continue
        seen.add(addr)
        instr = program.instructions.get(addr)
        if instr is None or not instr.executable:
            raise FlagScanDiverged(start.address)
        if instr.cond.predicate:
            needed.add(instr.cond.predicate)
        if instr.sets_flags and instr.cond is Cond.AL:
            continue
        succ, _ = successors(program, instr)
        work.extend(succ)
    return frozenset(needed)


def flags_needed(program: Program, i: Instruction) -> frozenset:
    """Predicates later read by conditions that depend on ``i``'s flag update."""
    if not i.sets_flags:
        return frozenset()
    cache = program._flags_cache
    if i.address in cache:
        return cache[i.address]
    computed = _computed_flags(program, i)
    result = computed
    if i.annotations:
        if i.annotations != computed:
            warnings.warn(
                f"annotation {sorted(i.annotations)} at {i.address:#x} differs from "
                f"computed {sorted(computed)}; using the annotation",
                AnnotationMismatch,
                stacklevel=2,
            )
        result = frozenset(i.annotations)
    cache[i.address] = result
    return result


# durations -------------------------------------------------------------------


@dataclass(frozen=True)
class DurationTable:
    """Cycles spent per (class, stage); multi transfers cost per register in memory."""

    default: int = 1
    overrides: tuple = ()  # ((InstrClass, Stage), cycles) pairs
    per_register_memory: bool = True

    @classmethod
    def from_mapping(cls, mapping: Mapping, **kw) -> "DurationTable":
        return cls(overrides=tuple(sorted(mapping.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))), **kw)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_map", dict(self.overrides))

    def lookup(self, klass: InstrClass, stage: Stage) -> int:
        return self._map.get((klass, stage), self.default)

    def scaled(self, extra: int) -> "DurationTable":
        items = {(k, s): self.lookup(k, s) + extra for k in InstrClass for s in Stage}
        return DurationTable(default=self.default + extra, overrides=tuple(items.items()),
                             per_register_memory=self.per_register_memory)


def stage_duration(i: Instruction, stage: Stage, table: DurationTable = DurationTable()) -> int:
    klass = classify(i)
    cycles = table.lookup(klass, Stage(stage))
    if (
        stage == Stage.MEMORY
        and table.per_register_memory
        and klass in (InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE)
    ):
        cycles *= len(i.reg_list)
    return cycles


def iter_flag_setters(program: Program) -> Iterable[Instruction]:
    return (i for i in program if i.executable and i.sets_flags)

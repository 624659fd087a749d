"""Timed-automata model generation for an external timed-game solver.

The model document follows the flat XML layout of UPPAAL networks.  Its
declarations hold C-like functions generated per program: ``SetStatusB``,
``cmpU``, ``NDcmp``, ``setcmp`` and ``update``, with one
``if (val[pc]==A)`` block per program address.

Value convention: a known word is held as its signed 32-bit value and
``UNKNOWN`` lies outside that range, so the declared ``int`` type must be at
least 64 bits wide for the generated code to be exact.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional

from .abstraction import AbstractionMap
from .config import ArchConfig, Limits
from .isa import (
    CMP_OPS,
    PC,
    PREDICATES,
    SP,
    Cond,
    Imm,
    Instruction,
    InstrClass,
    Program,
    Reg,
    Shifted,
    Stage,
    classify,
    flags_needed,
    reg_name,
    stage_duration,
)
from .machine import multi_addresses, signed
from .search import WcetReport, compute_wcet

QUERY_TEMPLATE = "control({n},0) : A [ true U WriteBackStage.DONE ]"
REG_NAMES = [reg_name(r) for r in range(16)]
COND_FUNCS = {
    Cond.EQ: "eq", Cond.NE: "ne", Cond.LT: "lt", Cond.GE: "ge",
    Cond.LE: "le", Cond.GT: "gt", Cond.LS: "ls", Cond.HI: "hi",
}


class ExportUnsupported(ValueError):
    def __init__(self, address: int, why: str):
        super().__init__(f"cannot express {address:#x}: {why}")
        self.address = address


# -- expressions ------------------------------------------------------------------


def _operand(op, instr: Instruction) -> tuple[str, list[str]]:
    """C expression for an operand and the registers it depends on."""
    if isinstance(op, Imm):
        return f"({signed(op.value & 0xFFFF_FFFF)})", []
    if isinstance(op, Reg):
        if op.n == PC:
            return f"({instr.address + 8})", []
        return f"val[{REG_NAMES[op.n]}]", [REG_NAMES[op.n]]
    if isinstance(op, Shifted):
        inner, deps = _operand(Reg(op.reg), instr)
        return f"{op.kind}({inner},{op.amount})", deps
    raise ExportUnsupported(instr.address, f"operand {op}")


def _unknown_test(deps: list[str]) -> str:
    return "||".join(f"val[{d}]==UNKNOWN" for d in dict.fromkeys(deps))


def _alu(m: str, a: str, b: str) -> str:
    return {
        "mov": b,
        "mvn": f"(~{b})",
        "add": f"w({a}+{b})",
        "sub": f"w({a}-{b})",
        "rsb": f"w({b}-{a})",
        "and": f"({a}&{b})",
        "orr": f"({a}|{b})",
        "eor": f"({a}^{b})",
    }[m]


def _flag_tests(m: str, a: str, b: str) -> dict:
    if m in ("cmp", "sub", "rsb"):
        x, y = (b, a) if m == "rsb" else (a, b)
        return {
            "eq": f"({x}-({y}))==0",
            "lt": f"({x}-({y}))<0",
            "le": f"({x}-({y}))<=0",
            "ls": f"ule({x},{y})",
        }
    if m in ("cmn", "add"):
        return {
            "eq": f"w({a}+{b})==0",
            "lt": f"({a}+{b})<0",
            "le": f"w({a}+{b})==0||({a}+{b})<0",
            "ls": f"u({a})+u({b})<4294967296||w({a}+{b})==0",
        }
    r = {"tst": f"({a}&{b})", "and": f"({a}&{b})", "teq": f"({a}^{b})", "eor": f"({a}^{b})",
         "orr": f"({a}|{b})", "mov": b, "mvn": f"(~{b})"}[m]
    return {"eq": f"{r}==0", "lt": f"{r}<0", "le": f"{r}<=0", "ls": f"{r}==0"}


class _Lines:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def add(self, text: str) -> None:
        self.lines.append("    " * self.depth + text)

    def open(self, text: str) -> None:
        self.add(text)
        self.depth += 1

    def close(self, text: str = "}") -> None:
        self.depth -= 1
        self.add(text)


# -- update blocks -----------------------------------------------------------------


def _set_pc(out: _Lines, expr: str, deps: list[str]) -> None:
    if deps:
        out.open(f"if ({_unknown_test(deps)}) {{")
        out.add("fault(UNKNOWN_PC);")
        out.close("} else {")
        out.depth += 1
        out.add(f"nextpc=({expr})&~3;")
        out.close()
    else:
        out.add(f"nextpc=({expr})&~3;")


def _data_proc(p: Program, i: Instruction, out: _Lines) -> None:
    m = i.mnemonic
    if m in CMP_OPS:
        (a, da), (b, db) = (_operand(o, i) for o in i.operands)
        rd = None
    else:
        rd = i.operands[0].n
        if m in ("mov", "mvn"):
            a, da = "0", []
            b, db = _operand(i.operands[1], i)
        else:
            (a, da), (b, db) = (_operand(o, i) for o in i.operands[1:3])
        if i.sets_flags and rd == PC:
            raise ExportUnsupported(i.address, "flag-setting write to pc")
    deps = da + db
    needed = sorted(flags_needed(p, i)) if i.sets_flags else []
    tests = _flag_tests(m, a, b) if needed else {}

    def known_body():
        for f in needed:
            out.add(f"if ({tests[f]}) cmp{f}=1; else cmp{f}=0;")
        if rd is None:
            if not needed:
                out.add("// no predicate is read after this comparison")
        elif rd == PC:
            out.add(f"nextpc=({_alu(m, a, b)})&~3;")
        else:
            out.add(f"val[{REG_NAMES[rd]}]={_alu(m, a, b)};")

    if not deps:
        known_body()
        return
    if rd is not None:
        out.open(f"if ({_unknown_test(deps)}) {{")
        if rd == PC:
            out.add("fault(UNKNOWN_PC);")
        else:
            out.add(f"val[{REG_NAMES[rd]}]=UNKNOWN;")
        if needed:
            out.add("// predicates were chosen by setcmp")
        out.close("} else {")
        out.depth += 1
        known_body()
        out.close()
    else:
        out.open(f"if (!({_unknown_test(deps)})) {{ // otherwise setcmp chose the predicates")
        known_body()
        out.close()


def _address_expr(i: Instruction) -> tuple[str, str, list[str]]:
    """(access address, written-back base, dependencies) of ldr/str."""
    mem = i.mem_expr
    base, deps = _operand(Reg(mem.base), i)
    if mem.offset is None:
        updated = base
    else:
        off, od = _operand(mem.offset, i)
        deps = deps + od
        updated = f"w({base}-{off})" if mem.subtract else f"w({base}+{off})"
    return (updated if mem.pre else base), updated, deps


def _single_transfer(i: Instruction, klass: InstrClass, out: _Lines) -> str:
    addr, updated, deps = _address_expr(i)
    via_sp = "true" if i.mem_expr.base == SP else "false"
    rd = i.operands[0].n
    if deps:
        out.open(f"if ({_unknown_test(deps)}) {{")
        out.add("fault(UNKNOWN_ADDRESS);")
        out.close("} else {")
        out.depth += 1
    out.add(f"adr={addr};")
    out.add(f"nextbase={updated};")
    if klass is InstrClass.STORE:
        value, _ = _operand(Reg(rd), i)
        out.add(f"st(adr,{value},{via_sp});")
        if i.mem_expr.writeback:
            out.add(f"val[{REG_NAMES[i.mem_expr.base]}]=nextbase;")
    else:
        out.add(f"tmp=ld(adr,{via_sp});")
        if i.mem_expr.writeback:
            out.add(f"val[{REG_NAMES[i.mem_expr.base]}]=nextbase;")
        if rd == PC:
            out.open("if (tmp==UNKNOWN) {")
            out.add("fault(UNKNOWN_PC);")
            out.close("} else {")
            out.depth += 1
            out.add("nextpc=(tmp)&~3;")
            out.close()
        else:
            out.add(f"val[{REG_NAMES[rd]}]=tmp;")
    if deps:
        out.close()
    return "u(adr)"


def _multi_transfer(i: Instruction, klass: InstrClass, out: _Lines) -> str:
    base_reg = REG_NAMES[i.mem_expr.base]
    via_sp = "true" if i.mem_expr.base == SP else "false"
    offsets, delta = multi_addresses(i, 0)
    offsets = [signed(o) for o in offsets]
    delta = signed(delta)
    out.open(f"if (val[{base_reg}]==UNKNOWN) {{")
    out.add("fault(UNKNOWN_ADDRESS);")
    out.close("} else {")
    out.depth += 1
    out.add(f"adr=val[{base_reg}];")
    for k, off in enumerate(offsets):
        if k:
            out.add(f"MEM(u(adr+({off})));")
    if klass is InstrClass.MULTI_STORE:
        for r, off in zip(i.reg_list, offsets):
            value, _ = _operand(Reg(r), i)
            out.add(f"st(w(adr+({off})),{value},{via_sp});")
        if i.writeback:
            out.add(f"val[{base_reg}]=w(adr+({delta}));")
    else:
        if i.writeback:
            out.add(f"val[{base_reg}]=w(adr+({delta}));")
        for r, off in zip(i.reg_list, offsets):
            if r == PC:
                out.add(f"tmp=ld(w(adr+({off})),{via_sp});")
                out.open("if (tmp==UNKNOWN) {")
                out.add("fault(UNKNOWN_PC);")
                out.close("} else {")
                out.depth += 1
                out.add("nextpc=(tmp)&~3;")
                out.close()
            else:
                out.add(f"val[{REG_NAMES[r]}]=ld(w(adr+({off})),{via_sp});")
    out.close()
    return f"u(adr+({offsets[0]}))"


def _branch(i: Instruction, out: _Lines) -> None:
    if i.mnemonic == "bx":
        expr, deps = _operand(i.operands[0], i)
        _set_pc(out, expr, deps)
        return
    if i.mnemonic == "bl":
        out.add(f"val[lr]={i.address + 4};")
    out.add(f"nextpc={i.target}; // to {i.target:#x}")


def update_block(p: Program, i: Instruction) -> list[str]:
    """Lines of the ``if (val[pc]==A)`` block for one address."""
    out = _Lines()
    a = i.address
    out.open(f"if (val[pc]=={a}) {{ // Instruction {i} at {a:#x}")
    if not i.executable:
        out.add("fault(NON_EXECUTABLE); // data word inside the code")
        out.close(f"}} // end data at {a:#x}")
        return out.lines
    out.add("nextpc=val[pc]+4;")
    if i.cond is not Cond.AL:
        out.open(f"if ({COND_FUNCS[i.cond]}()) {{")
    klass = classify(i)
    mem = "-1"
    out.open("if (!is_abstracted(val[pc])) { // effect of instruction is null if abstracted")
    if klass in (InstrClass.DATA_PROC, InstrClass.COMPARE):
        _data_proc(p, i, out)
    elif klass in (InstrClass.LOAD, InstrClass.STORE):
        mem = _single_transfer(i, klass, out)
    elif klass in (InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE):
        mem = _multi_transfer(i, klass, out)
    else:
        _branch(i, out)
    out.close()
    if mem != "-1":
        # addresses are passed unsigned so that -1 keeps meaning "none"
        out.add(f"SET({a},{mem},1); // scheduled, memory access")
    else:
        out.add(f"SET({a},-1,1); // scheduled, no memory access")
    if i.cond is not Cond.AL:
        out.close("}")
        out.add(f"else SET({a},-1,0); // not scheduled, no memory access")
    out.close(f"}} // end {i.mnemonic} at {a:#x}")
    return out.lines


# -- other generated functions --------------------------------------------------------


def _flag_setters(p: Program) -> list[Instruction]:
    return [i for i in p if i.executable and i.sets_flags]


def _status_functions(p: Program) -> list[str]:
    setters = _flag_setters(p)
    lines = ["bool SetStatusB(int i) { // i is the pc of an instruction"]
    for i in setters:
        lines += [f"    if (i=={i.address}) {{ // {i} [{i.address:#x}]", "        return true;", "    }"]
    lines += ["    return false;", "}", "", "bool cmpU(int i) {"]
    for i in setters:
        ops = i.operands if i.mnemonic in CMP_OPS else i.operands[1:]
        deps = [d for op in ops for d in _operand(op, i)[1]]
        test = _unknown_test(deps) if deps else "false"
        lines.append(f"    if (i=={i.address}) return {test}; // [{i.address:#x}]")
    lines += ["    return false;", "}", "", "void setcmp(int i, bool neq, bool nlt, bool nle, bool nls) {"]
    for i in setters:
        needed = sorted(flags_needed(p, i))
        lines.append(f"    if (i=={i.address}) {{ // {i} [{i.address:#x}]")
        for f in needed:
            lines.append(f"        cmp{f}=n{f};")
        lines.append("    }")
    lines += ["}", "", "bool NDcmp(int i) {", "    return SetStatusB(i) && cmpU(i);", "}"]
    return lines


def _update_function(p: Program) -> list[str]:
    lines = ["void update() {", "    int nextpc, nextbase, adr, tmp;", "    adr=-1;", "    nData=0;"]
    for fn in p.functions or [None]:
        if fn is not None:
            lines.append(f"    // updates for function {fn.name} starting {fn.start} ending {fn.end}")
        for i in p:
            if fn is None or fn.start <= i.address <= fn.end:
                lines += ["    " + ln for ln in update_block(p, i)]
    covered = {i.address for fn in p.functions for i in p if fn.start <= i.address <= fn.end}
    for i in p:
        if p.functions and i.address not in covered:
            lines += ["    " + ln for ln in update_block(p, i)]
    lines += ["    if (err==0) val[pc]=nextpc;", "}"]
    return lines


def _helpers(p: Program, cfg: ArchConfig, depth: int, alpha: AbstractionMap) -> list[str]:
    mc = cfg.machine
    words = max(depth, 1)
    lits = [(i.address, signed(i.encoding)) for i in p if i.encoding is not None]
    lines = [
        "// signed 32-bit view of a word expression",
        "int w(int x) { x = x & 4294967295; if (x >= 2147483648) return x - 4294967296; return x; }",
        "int u(int x) { return x & 4294967295; }",
        "bool ule(int a, int b) { return u(a) <= u(b); }",
        "int lsl(int x, int n) { return w(x << n); }",
        "int lsr(int x, int n) { return w(u(x) >> n); }",
        "int asr(int x, int n) { return x >> n; }",
        "bool eq() { return cmpeq; }", "bool ne() { return !cmpeq; }",
        "bool lt() { return cmplt; }", "bool ge() { return !cmplt; }",
        "bool le() { return cmple; }", "bool gt() { return !cmple; }",
        "bool ls() { return cmpls; }", "bool hi() { return !cmpls; }",
        "",
        "void fault(int kind) { if (err==0) err = kind; }",
        "int lit(int a) {",
    ]
    lines += [f"    if (a=={a}) return {v};" for a, v in lits]
    lines += [
        "    return UNKNOWN;",
        "}",
        "int ld(int a, bool viasp) {",
        "    if (u(a) >= STACK_LOW && u(a) < STACK_BASE) {",
        "        if ((STACK_BASE - u(a)) / 4 > STACK_WORDS) { fault(STACK_OVERFLOW); return UNKNOWN; }",
        "        return stack[(STACK_BASE - u(a)) / 4 - 1];",
        "    }",
        "    if (viasp && u(a) < STACK_LOW) { fault(STACK_OVERFLOW); return UNKNOWN; }",
        "    if (viasp) { fault(STACK_UNDERFLOW); return UNKNOWN; }",
        "    return lit(u(a));",
        "}",
        "void st(int a, int v, bool viasp) {",
        "    if (u(a) >= STACK_LOW && u(a) < STACK_BASE) {",
        "        if ((STACK_BASE - u(a)) / 4 > STACK_WORDS) { fault(STACK_OVERFLOW); return; }",
        "        stack[(STACK_BASE - u(a)) / 4 - 1] = v;",
        "        return;",
        "    }",
        "    if (viasp && u(a) < STACK_LOW) fault(STACK_OVERFLOW);",
        "    else if (viasp) fault(STACK_UNDERFLOW);",
        "}",
        "",
        "// SET(label, memory address, scheduled) hands the instruction to the fetch stage",
        "void MEM(int a) { dataAdr[nData] = a; nData++; }",
        "void SET(int label, int a, int sched) {",
        "    pPC = label; Todo = sched;",
        "    if (a != -1) { dataAdr0 = a; }",
        "}",
    ]
    if alpha.abstracted:
        test = " || ".join(f"a=={a}" for a in sorted(alpha.abstracted))
        lines.append(f"bool is_abstracted(int a) {{ return {test}; }}")
    else:
        lines.append("bool is_abstracted(int a) { return false; }")
    lines += [
        "",
        "void init_val() {",
        "    int k;",
        "    for (k = 0; k < 16; k++) val[k] = UNKNOWN;",
        f"    for (k = 0; k < STACK_WORDS; k++) stack[k] = UNKNOWN;",
        f"    val[pc] = {p.entry}; val[sp] = {signed(mc.stack_base)}; val[lr] = INIT_LR;",
        "    cmpeq = 0; cmplt = 0; cmple = 0; cmpls = 0; err = 0;",
        "}",
    ]
    return lines


def _declarations(p: Program, cfg: ArchConfig, depth: int, alpha: AbstractionMap) -> str:
    mc = cfg.machine
    lines = ["// registers"]
    lines += [f"const int {n} = {k};" for k, n in enumerate(REG_NAMES)]
    lines += [
        "const int UNKNOWN = 4294967296; // outside the signed 32-bit range",
        f"const int INIT_LR = {signed(mc.init_lr)};",
        f"const int STACK_BASE = {mc.stack_base};",
        f"const int STACK_LOW = {mc.stack_low};",
        f"const int STACK_WORDS = {max(depth, 1)}; // maximal stack size of the analysed runs",
        "const int UNKNOWN_ADDRESS = 1; const int UNKNOWN_PC = 2; const int STACK_OVERFLOW = 3;",
        "const int STACK_UNDERFLOW = 4; const int NON_EXECUTABLE = 5;",
        "int val[16];",
        "int stack[STACK_WORDS];",
        "bool cmpeq, cmplt, cmple, cmpls;",
        "int err;",
        "int pPC, Todo, dataAdr0, nData;",
        "int dataAdr[16];",
        "",
        "// pipeline handshakes",
        "chan fetch, decode, execute, memory, writeback, iread, idone, dread, ddone;",
        "urgent chan go;",
        "",
    ]
    lines += _helpers(p, cfg, depth, alpha)
    lines.append("")
    lines += _status_functions(p)
    lines.append("")
    lines += _update_function(p)
    return "\n".join(lines) + "\n"


# -- templates -----------------------------------------------------------------------


def _template(nta, name: str, params: str, decl: str, locations, init: str, edges) -> None:
    t = ET.SubElement(nta, "template")
    ET.SubElement(t, "name").text = name
    if params:
        ET.SubElement(t, "parameter").text = params
    ET.SubElement(t, "declaration").text = decl
    ids = {}
    for k, (loc, inv, urgent) in enumerate(locations):
        ids[loc] = f"id{name}{k}"
        el = ET.SubElement(t, "location", id=ids[loc])
        ET.SubElement(el, "name").text = loc
        if inv:
            ET.SubElement(el, "label", kind="invariant").text = inv
        if urgent:
            ET.SubElement(el, "urgent")
    ET.SubElement(t, "init", ref=ids[init])
    for src, dst, labels, controllable in edges:
        attrs = {"controllable": "false"} if not controllable else {}
        e = ET.SubElement(t, "transition", **attrs)
        ET.SubElement(e, "source", ref=ids[src])
        ET.SubElement(e, "target", ref=ids[dst])
        for kind, text in labels:
            ET.SubElement(e, "label", kind=kind).text = text


def _stage_duration_fn(p: Program, cfg: ArchConfig, stage: Stage) -> str:
    lines = [f"int dur(int a) {{ // {stage.name.lower()} stage durations"]
    groups: dict[int, list[int]] = {}
    for i in p:
        if i.executable:
            groups.setdefault(stage_duration(i, stage, cfg.durations), []).append(i.address)
    for d, addrs in sorted(groups.items()):
        if d != 1:
            lines.append(f"    if ({' || '.join(f'a=={a}' for a in addrs)}) return {d};")
    lines += ["    return 1;", "}", "clock x;", "int me;"]
    return "\n".join(lines)


def _templates(nta, p: Program, cfg: ArchConfig) -> None:
    _template(
        nta, "Prog", "", "",
        [("Start", "", True), ("Run", "", False), ("End", "", False)],
        "Start",
        [
            ("Start", "Run", [("assignment", "init_val()")], True),
            ("Run", "Run", [("guard", "!NDcmp(val[pc]) && val[pc]!=INIT_LR && err==0"),
                            ("synchronisation", "fetch!"), ("assignment", "update()")], True),
            ("Run", "Run", [("select", "neq:bool, nlt:bool, nle:bool, nls:bool"),
                            ("guard", "NDcmp(val[pc]) && val[pc]!=INIT_LR && err==0 && (!neq || nle) && (!nlt || nle) && !(neq && nlt) && (!neq || nls)"),
                            ("synchronisation", "fetch!"),
                            ("assignment", "setcmp(val[pc],neq,nlt,nle,nls), update()")], False),
            ("Run", "End", [("guard", "val[pc]==INIT_LR")], True),
        ],
    )
    stage_names = ["FetchStage", "DecodeStage", "ExecuteStage", "MemoryStage", "WriteBackStage"]
    channels = ["fetch", "decode", "execute", "memory", "writeback", None]
    for k, (name, stage) in enumerate(zip(stage_names, Stage)):
        inbound, outbound = channels[k], channels[k + 1]
        locs = [("Idle", "", False), ("Busy", "x <= dur(me)", False), ("Ready", "", True)]
        edges = [("Idle", "Busy", [("synchronisation", f"{inbound}?"), ("assignment", "x = 0, me = pPC")], True)]
        if stage is Stage.FETCH:
            locs.append(("WaitCache", "", False))
            edges = [
                ("Idle", "WaitCache", [("synchronisation", "fetch?"), ("assignment", "me = pPC")], True),
                ("WaitCache", "Busy", [("synchronisation", "idone?"), ("assignment", "x = 0")], True),
            ]
        if stage is Stage.MEMORY:
            locs.append(("WaitCache", "", False))
            edges.append(("Busy", "WaitCache", [("guard", "x >= dur(me) && Todo == 1"),
                                                ("synchronisation", "dread!")], True))
            edges.append(("WaitCache", "Ready", [("synchronisation", "ddone?")], True))
            edges.append(("Busy", "Ready", [("guard", "x >= dur(me) && Todo == 0")], True))
        else:
            edges.append(("Busy", "Ready", [("guard", "x >= dur(me)")], True))
        if outbound:
            edges.append(("Ready", "Idle", [("synchronisation", f"{outbound}!")], True))
        else:
            locs.append(("DONE", "", False))
            edges.append(("Ready", "Idle", [("guard", "val[pc]!=INIT_LR")], True))
            edges.append(("Ready", "DONE", [("guard", "val[pc]==INIT_LR")], True))
        _template(nta, name, "", _stage_duration_fn(p, cfg, stage), locs, "Idle", edges)

    for name, cc, req, ack in (("ICache", cfg.icache, "iread", "idone"), ("DCache", cfg.dcache, "dread", "ddone")):
        decl = "\n".join([
            f"const int K = {cc.size}; const int B = {cc.line}; const int J = {cc.ways};",
            f"const int CACHE_SPEED = {cc.hit_latency}; const int PMT = {cc.pmt};",
            f"const int TRANSACTION = {cc.transaction_cycles};",
            f"// policy {cc.policy.value}, write hit {cc.write_hit.value}, write miss {cc.write_miss.value}",
            "int tags[K / B]; bool dirty[K / B];",
            "clock y; int n;",
            "bool hit(int a) { return false; } // filled by the cache refinement",
        ])
        _template(
            nta, name, "", decl,
            [("Idle", "", False), ("Hit", "y <= CACHE_SPEED", False), ("Miss", "y <= TRANSACTION", False)],
            "Idle",
            [
                ("Idle", "Hit", [("synchronisation", f"{req}?"), ("guard", "hit(pPC)"), ("assignment", "y = 0")], True),
                ("Idle", "Miss", [("synchronisation", f"{req}?"), ("guard", "!hit(pPC)"), ("assignment", "y = 0, n = 0")], True),
                ("Miss", "Miss", [("guard", "y >= TRANSACTION && n < PMT - 1"), ("assignment", "y = 0, n++")], True),
                ("Miss", "Hit", [("guard", "y >= TRANSACTION && n == PMT - 1"), ("assignment", "y = 0")], True),
                ("Hit", "Idle", [("guard", "y >= CACHE_SPEED"), ("synchronisation", f"{ack}!")], True),
            ],
        )


def export_model(
    p: Program,
    cfg: ArchConfig = ArchConfig(),
    *,
    report: Optional[WcetReport] = None,
    abstraction: Optional[AbstractionMap] = None,
    limits: Limits = Limits(),
) -> tuple[str, str]:
    """(model XML, query text).  Runs the analysis if no report is given."""
    alpha = abstraction or AbstractionMap()
    if report is None:
        report = compute_wcet(p, cfg, limits, abstracted=alpha.abstracted)
    nta = ET.Element("nta")
    ET.SubElement(nta, "declaration").text = _declarations(p, cfg, report.max_stack_depth, alpha)
    _templates(nta, p, cfg)
    names = ["Prog", "FetchStage", "DecodeStage", "ExecuteStage", "MemoryStage", "WriteBackStage", "ICache", "DCache"]
    ET.SubElement(nta, "system").text = f"system {', '.join(names)};\n"
    ET.indent(nta)
    body = ET.tostring(nta, encoding="unicode")
    header = (
        '<?xml version="1.0" encoding="utf-8"?>\n'
        "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' "
        "'http://www.it.uu.se/research/group/darts/uppaal/flat-1_1.dtd'>\n"
    )
    query = QUERY_TEMPLATE.format(n=2 * report.wcet) + "\n"
    return header + body + "\n", query


def query_line(wcet: int) -> str:
    return QUERY_TEMPLATE.format(n=2 * wcet)


__all__ = ["ExportUnsupported", "export_model", "update_block", "query_line", "PREDICATES"]

import random
import re
import xml.etree.ElementTree as ET

import pytest

from armwcet import benchmarks
from armwcet.abstraction import heuristic_abstraction
from armwcet.config import ArchConfig, MachineConfig
from armwcet.export import ExportUnsupported, export_model, query_line
from armwcet.isa import parse_listing
from armwcet.machine import MASK, AdversaryChoice, Deterministic, Fault, MachineState, Preds, step
from armwcet.search import compute_wcet

from model_interp import FAULT_CODES, ModelInterpreter, declarations, update_source
from progen import random_program

CFG = ArchConfig()
MCFG = MachineConfig()
QUERY_RE = re.compile(r"^control\(\d+,0\) : A \[ true U WriteBackStage\.DONE \]$")


def parse_xml(text):
    assert text.startswith("<?xml")
    return ET.fromstring(text.split("\n", 2)[2])


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_well_formed_with_one_block_per_address(name):
    p = benchmarks.load(name)
    xml, query = export_model(p, CFG)
    root = parse_xml(xml)
    names = {t.find("name").text for t in root.iter("template")}
    assert {"Prog", "FetchStage", "WriteBackStage", "ICache", "DCache"} <= names
    body = update_source(declarations(xml))
    blocks = [int(m.group(1)) for line in body if (m := re.match(r"\s*if \(val\[pc\]==(\d+)\) \{", line))]
    assert sorted(blocks) == sorted(i.address for i in p)
    assert QUERY_RE.fullmatch(query.rstrip("\n"))


def test_query_scales_with_wcet():
    p = benchmarks.load("fib")
    _, query = export_model(p, CFG)
    assert query.rstrip("\n") == "control(1052,0) : A [ true U WriteBackStage.DONE ]" == query_line(526)


def test_report_reused():
    p = benchmarks.load("bs")
    r = compute_wcet(p, CFG)
    assert export_model(p, CFG, report=r)[1].rstrip("\n") == query_line(r.wcet)


def test_abstraction_stub_and_list():
    p = benchmarks.load("fib")
    plain, _ = export_model(p, CFG)
    abst, _ = export_model(p, CFG, abstraction=heuristic_abstraction(p))
    assert "is_abstracted" in declarations(plain) and plain != abst


def test_unsupported_rejected():
    p = parse_listing("00000000 <main>:\n 0:\tadds\tpc, r0, #4\n 4:\tmov\tpc, lr\n")
    with pytest.raises(ExportUnsupported):
        export_model(p, CFG, report=compute_wcet(benchmarks.load("fib"), CFG))


def _random_state(rng, addr):
    regs = []
    for _ in range(16):
        c = rng.random()
        if c < 0.2:
            regs.append(None)
        elif c < 0.5:
            regs.append(rng.randrange(-20, 40) & MASK)
        elif c < 0.7:
            regs.append(rng.randrange(MCFG.stack_low - 16, MCFG.stack_base + 16))
        else:
            regs.append(rng.getrandbits(32))
    regs[15] = addr
    if rng.random() < 0.7:
        regs[13] = MCFG.stack_base - 4 * rng.randrange(0, 12)
    stack = {
        MCFG.stack_base - 4 * k: rng.getrandbits(32) if rng.random() < 0.7 else rng.randrange(0, 0x60, 4)
        for k in range(1, 20) if rng.random() < 0.6
    }
    preds = Preds(*(rng.random() < 0.5 for _ in range(4)))
    return MachineState(tuple(regs), preds, stack, {}, 0)


def _known(stack):
    return {a: v for a, v in stack.items() if v is not None}


def _round_trip(p, abstracted=frozenset(), samples=100, seed=1):
    xml, _ = export_model(p, CFG, report=compute_wcet(p, CFG, abstracted=abstracted),
                          abstraction=None if not abstracted else heuristic_abstraction(p))
    model = ModelInterpreter(xml, p, MCFG, abstracted)
    rng = random.Random(seed)
    mismatches = []
    for instr in p:
        for _ in range(samples):
            s = _random_state(rng, instr.address)
            out = step(p, s, MCFG, abstracted)
            if isinstance(out, AdversaryChoice):
                for c in out.choices:
                    got = model.run(MachineState(s.regs, c.preds, s.stack, s.memory, 0))
                    want = (0, c.state.regs, c.state.preds, _known(c.state.stack), out.issue.data_addrs)
                    if (got["err"], got["regs"], got["preds"], got["stack"], got["data"]) != want:
                        mismatches.append((instr.address, s))
            elif isinstance(out, Deterministic):
                got = model.run(s)
                n = out.next
                want = (0, n.regs, n.preds, _known(n.stack), out.issue.data_addrs, out.issue.scheduled)
                if (got["err"], got["regs"], got["preds"], got["stack"], got["data"], got["scheduled"]) != want:
                    mismatches.append((instr.address, s))
            elif isinstance(out, Fault):
                if model.run(s)["err"] != FAULT_CODES.get(out.kind):
                    mismatches.append((instr.address, s))
    return mismatches


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_update_matches_step(name):
    assert _round_trip(benchmarks.load(name)) == []


def test_update_matches_abstract_step():
    p = benchmarks.load("fib")
    assert _round_trip(p, heuristic_abstraction(p).abstracted, samples=40) == []


@pytest.mark.parametrize("seed", range(5))
def test_update_matches_step_on_generated(seed):
    assert _round_trip(random_program(seed), samples=30, seed=seed) == []

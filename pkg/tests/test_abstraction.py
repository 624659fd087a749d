import pytest

from armwcet import benchmarks
from armwcet.abstraction import (
    AbstractionMap, CounterExample, Equivalent, InvalidAbstraction, abstract_step_semantics,
    check_equivalence, heuristic_abstraction, parse_abstraction_file,
)
from armwcet.config import ArchConfig
from armwcet.isa import parse_listing
from armwcet.machine import init_state
from armwcet.search import compute_wcet

CFG = ArchConfig()
FIB_ALPHA = AbstractionMap.of({0xC, 0x10, 0x1C, 0x28, 0x2C})


def test_fib_value_computation_abstracts_cleanly():
    p = benchmarks.load("fib")
    verdict = check_equivalence(p, FIB_ALPHA, CFG)
    assert isinstance(verdict, Equivalent) and verdict
    assert compute_wcet(p, CFG).wcet == compute_wcet(p, CFG, abstracted=FIB_ALPHA.abstracted).wcet


def test_abstracting_loop_counter_is_caught():
    p = benchmarks.load("fib")
    verdict = check_equivalence(p, AbstractionMap.of({0x18}), CFG)
    assert isinstance(verdict, CounterExample) and not verdict
    assert (verdict.address, verdict.register) == (0x20, "r2")
    assert verdict.to_dict()["verdict"] == "NO"


@pytest.mark.parametrize("addr", [0x4, 0x30, 0x34, 0x3C, 0x1000])
def test_invalid_sets_rejected(addr):
    with pytest.raises(InvalidAbstraction):
        AbstractionMap.of({addr}).validate(benchmarks.load("fib"))


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_heuristic_is_sound_and_time_preserving(name):
    p = benchmarks.load(name)
    alpha = heuristic_abstraction(p)
    alpha.validate(p)
    assert check_equivalence(p, alpha, CFG)
    assert compute_wcet(p, CFG).wcet == compute_wcet(p, CFG, abstracted=alpha.abstracted).wcet


def test_heuristic_covers_fib_value_chain():
    assert FIB_ALPHA.abstracted <= heuristic_abstraction(benchmarks.load("fib")).abstracted


def test_dead_write_before_overwrite_is_abstractable():
    p = parse_listing("00000000 <main>:\n 0:\tmov\tr1, #4\n 4:\tmov\tr1, #5\n"
                      " 8:\tcmp\tr1, r0\n c:\tmovgt\tr2, #1\n 10:\tmov\tpc, lr\n")
    assert 0x0 in heuristic_abstraction(p)
    assert 0x4 not in heuristic_abstraction(p)
    assert not check_equivalence(p, AbstractionMap.of({0x4}), CFG)


def test_abstract_step_only_moves_pc():
    p = benchmarks.load("fib")
    s = init_state(p, registers={15: 0x18, 2: 5})
    out = abstract_step_semantics(p, p[0x18], s)
    assert out.next.regs[2] == 5 and out.next.regs[15] == 0x1C


def test_parse_abstraction_file():
    assert parse_abstraction_file("# fib\nc\n0x10  # mov\n\n").abstracted == {0xC, 0x10}
    with pytest.raises(ValueError):
        parse_abstraction_file("zz\n")


def test_equivalent_to_dict():
    d = check_equivalence(benchmarks.load("bs"), AbstractionMap(), CFG).to_dict()
    assert d["verdict"] == "YES" and d["paths"] == 31

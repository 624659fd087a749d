import pytest
from hypothesis import given, strategies as st

from armwcet import benchmarks
from armwcet.config import MachineConfig
from armwcet.isa import parse_listing
from armwcet.machine import (
    AdversaryChoice, Deterministic, Fault, FaultKind, MachineFault, NondeterministicRun,
    Preds, Terminated, choice_allowed, flag_values, init_state, outcome_choices,
    run_concrete, signed, step,
)

words = st.integers(0, 0xFFFF_FFFF)


def prog(*lines):
    body = "\n".join(f" {4 * k:x}:\t{text}" for k, text in enumerate(lines))
    return parse_listing("00000000 <main>:\n" + body + "\n")


def final_state(p, cfg=MachineConfig(), **kw):
    s = init_state(p, cfg, **kw)
    while True:
        out = step(p, s, cfg)
        if isinstance(out, Terminated):
            return s
        assert isinstance(out, Deterministic), out
        s = out.next


def test_fib_computes_fibonacci():
    p = benchmarks.load("fib")
    s = final_state(p)
    assert s.regs[0] == 30  # main restores r0 = 30 after the call
    for n, want in [(2, 1), (3, 2), (10, 55), (30, 832040)]:
        s = init_state(p, registers={0: n, 15: 0})  # enter fib directly
        while True:
            out = step(p, s)
            if isinstance(out, Terminated):
                break
            s = out.next
        assert s.regs[0] == want


def test_outcome_choice_labels():
    labels = lambda f: [c[0] for c in outcome_choices(frozenset(f))]
    assert labels({"le"}) == ["LT|EQ", "GT"]
    assert labels({"eq"}) == ["LT|GT", "EQ"]
    assert labels({"ls"}) == ["LS", "HI"]
    assert labels({"eq", "lt", "le", "ls"}) == ["LT/LS", "LT/HI", "EQ/LS", "GT/LS", "GT/HI"]


def test_choice_allowed():
    (_, lt_eq, _), (_, gt, _) = outcome_choices(frozenset({"le"}))
    assert choice_allowed(lt_eq, frozenset({"EQ"}))
    assert not choice_allowed(gt, frozenset({"LT", "EQ"}))
    assert choice_allowed(gt, frozenset({"LS"}))  # no unsigned component to reject


@given(words, words)
def test_cmp_flags_match_integer_comparison(a, b):
    f = flag_values("cmp", a, b)
    assert f == {"eq": a == b, "lt": signed(a) < signed(b), "le": signed(a) <= signed(b), "ls": a <= b}


@given(words, words)
def test_concrete_cmp_matches_flag_values(a, b):
    p = prog("cmp\tr0, r1", "moveq\tr2, #1", "movlt\tr3, #1", "movle\tr4, #1", "movls\tr5, #1", "mov\tpc, lr")
    s = final_state(p, registers={0: a, 1: b, 2: 0, 3: 0, 4: 0, 5: 0})
    f = flag_values("cmp", a, b)
    assert s.regs[2:6] == tuple(int(f[k]) for k in ("eq", "lt", "le", "ls"))


@given(words, words)
def test_arithmetic_wraps(a, b):
    p = prog("add\tr2, r0, r1", "sub\tr3, r0, r1", "rsb\tr4, r0, r1", "eor\tr5, r0, r1", "mov\tpc, lr")
    s = final_state(p, registers={0: a, 1: b})
    m = 0xFFFF_FFFF
    assert s.regs[2:6] == ((a + b) & m, (a - b) & m, (b - a) & m, a ^ b)


def test_unknown_propagates_and_splits():
    p = prog("add\tr1, r0, #1", "cmp\tr1, #3", "movgt\tr2, #1", "mov\tpc, lr")
    s = init_state(p)
    s = step(p, s).next
    assert s.regs[1] is None
    out = step(p, s)
    assert isinstance(out, AdversaryChoice)
    assert [c.label for c in out.choices] == ["LT|EQ", "GT"]
    assert [c.preds.le for c in out.choices] == [True, False]


def test_stack_store_load_and_unknown_cells():
    p = prog("mov\tr0, #7", "str\tr0, [sp, #-4]", "ldr\tr1, [sp, #-4]", "ldr\tr2, [sp, #-8]", "mov\tpc, lr")
    s = final_state(p)
    assert s.regs[1] == 7 and s.regs[2] is None
    base = MachineConfig().stack_base
    s = final_state(p, memory={base - 8: 5})
    assert s.regs[2] == 5


def test_multi_transfer_push_pop():
    p = prog("mov\tr4, #1", "mov\tr5, #2", "stmdb\tsp!, {r4, r5}", "mov\tr4, #0",
             "ldmia\tsp!, {r4, r5}", "mov\tpc, lr")
    s = final_state(p)
    assert s.regs[4:6] == (1, 2)
    assert s.regs[13] == MachineConfig().stack_base


def test_literal_load_from_code():
    p = benchmarks.load("bs")
    s = init_state(p, registers={})
    for _ in range(4):  # mov, b, stmdb, ldr
        s = step(p, s).next
    assert s.regs[4] == 0x158


@pytest.mark.parametrize("lines, kind", [
    (["ldr\tr0, [r1]"], FaultKind.UNKNOWN_ADDRESS),
    (["mov\tpc, r1"], FaultKind.UNKNOWN_PC),
    (["str\tr0, [sp, #-8192]"], FaultKind.STACK_OVERFLOW),
    (["ldr\tr0, [sp]"], FaultKind.STACK_UNDERFLOW),
    (["b\t0"], FaultKind.RUN_BOUND),
])
def test_faults(lines, kind):
    p = prog(*lines, "mov\tpc, lr")
    cfg = MachineConfig(run_bound=50)
    with pytest.raises(MachineFault) as info:
        run_concrete(p, cfg)
    assert info.value.fault.kind is kind


def test_non_executable_word():
    p = benchmarks.load("bs")
    s = init_state(p, registers={15: 0x54})
    out = step(p, s)
    assert isinstance(out, Fault) and out.kind is FaultKind.NON_EXECUTABLE


def test_run_concrete_detects_nondeterminism():
    with pytest.raises(NondeterministicRun) as info:
        run_concrete(benchmarks.load("cnt"))
    assert info.value.address in benchmarks.load("cnt")


def test_abstracted_instruction_only_advances_pc():
    p = prog("mov\tr0, #3", "add\tr0, r0, #1", "mov\tpc, lr")
    s = step(p, init_state(p)).next
    out = step(p, s, abstracted=frozenset({4}))
    assert out.next.regs[0] == 3 and out.next.regs[15] == 8
    assert out.issue.data_addrs == ()


def test_step_is_pure():
    p = benchmarks.load("fib")
    s = init_state(p)
    assert step(p, s) == step(p, s)
    assert s.step_count == 0 and s.preds == Preds()

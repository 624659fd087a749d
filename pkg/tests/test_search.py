import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from armwcet import benchmarks
from armwcet.config import ArchConfig, Limits, MachineConfig
from armwcet.isa import parse_listing
from armwcet.search import (
    AnalysisFault, LimitExceeded, WitnessMismatch, brute_force_wcet, compute_wcet,
    enumerate_traces, parse_constraints, replay, simulate_single,
)

from progen import random_program

CFG = ArchConfig()

# frozen after cross-checking against brute_force_wcet
GOLDEN = {
    "fib": (526, 526, 0, 1),
    "bs": (715, 510, 15, 31),
    "stalls": (339, 339, 0, 1),
    "twosplit": (258, 253, 4, 9),
    "cnt": (446, 446, 15, 16),
}


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_golden_reports(name):
    r = compute_wcet(benchmarks.load(name), CFG)
    assert (r.wcet, r.bcet, r.splits, r.leaves) == GOLDEN[name]


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_engine_equals_brute_force(name):
    p = benchmarks.load(name)
    r = compute_wcet(p, CFG)
    assert (r.wcet, r.witness) == brute_force_wcet(p, CFG)


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_witness_replays_to_wcet(name):
    p = benchmarks.load(name)
    r = compute_wcet(p, CFG)
    cycles, _ = replay(p, CFG, r.witness)
    assert cycles == r.wcet


def test_bs_witness_is_smallest_worst_strategy():
    r = compute_wcet(benchmarks.load("bs"), CFG)
    assert r.witness == ((0x2C, "LT"),) * 4
    assert r.max_path_moves == 4


def test_replay_rejects_wrong_witness():
    p = benchmarks.load("bs")
    with pytest.raises(WitnessMismatch):
        replay(p, CFG, [(0x44, "LT")])
    with pytest.raises(WitnessMismatch):
        replay(p, CFG, [(0x2C, "NOPE")])


def test_constraints_restrict_adversary():
    p = benchmarks.load("bs")
    free = compute_wcet(p, CFG)
    only_eq = compute_wcet(p, CFG, constraints={0x2C: {"EQ"}})
    assert only_eq.constrained
    assert only_eq.wcet <= free.wcet and only_eq.leaves == 1
    assert all(label == "EQ" for _, label in only_eq.witness)


def test_parse_constraints():
    text = "# comment\n2c eq, gt\n44 LT|EQ  # trailing\n\n"
    assert parse_constraints(text) == {0x2C: {"EQ", "GT"}, 0x44: {"LT", "EQ"}}
    with pytest.raises(ValueError):
        parse_constraints("2c\n")
    with pytest.raises(ValueError):
        parse_constraints("2c XX\n")


def test_limits_report_partial_results():
    p = benchmarks.load("bs")
    with pytest.raises(LimitExceeded) as info:
        compute_wcet(p, CFG, Limits(max_splits=0))
    assert info.value.limit == "max_splits" and 0x2C in info.value.addresses
    with pytest.raises(LimitExceeded) as info:
        compute_wcet(p, CFG, Limits(max_states=10))
    assert info.value.limit == "max_states"


def test_run_bound_is_limit():
    cfg = ArchConfig(machine=MachineConfig(run_bound=20))
    with pytest.raises(LimitExceeded) as info:
        compute_wcet(benchmarks.load("fib"), cfg)
    assert info.value.limit == "K_p"


def test_fault_carries_path():
    p = parse_listing("00000000 <main>:\n 0:\tldr\tr0, [r1]\n 4:\tmov\tpc, lr\n")
    with pytest.raises(AnalysisFault) as info:
        compute_wcet(p, CFG)
    assert info.value.fault.address == 0 and info.value.path == ()


@pytest.mark.parametrize("name", benchmarks.NAMES)
def test_parallel_identical(name):
    p = benchmarks.load(name)
    assert compute_wcet(p, CFG, jobs=1) == compute_wcet(p, CFG, jobs=3)


@pytest.mark.parametrize("name", benchmarks.MULTI_PATH)
def test_memo_keeps_wcet_and_witness(name):
    p = benchmarks.load(name)
    a, b = compute_wcet(p, CFG), compute_wcet(p, CFG, memo=True)
    assert (a.wcet, a.witness) == (b.wcet, b.witness)
    assert b.states <= a.states


def test_report_json_shape():
    r = compute_wcet(benchmarks.load("twosplit"), CFG)
    d = json.loads(r.to_json())
    assert d["wcet"] == 258
    assert d["witness"] == [{"address": "0x8", "outcome": "LT"}, {"address": "0x18", "outcome": "LT"}]


def test_enumerated_traces_cover_every_leaf():
    p = benchmarks.load("twosplit")
    assert len(enumerate_traces(p, CFG)) == compute_wcet(p, CFG).leaves


def test_simulate_single_concrete():
    p = benchmarks.load("fib")
    assert simulate_single(p, CFG).clock == 526
    st_ = simulate_single(benchmarks.load("stalls"), CFG, log_events=True)
    assert st_.events


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_generated_programs_match_brute_force(seed):
    p = random_program(seed)
    r = compute_wcet(p, CFG)
    assert (r.wcet, r.witness) == brute_force_wcet(p, CFG)
    assert r.bcet <= r.wcet

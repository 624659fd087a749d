import pytest

from armwcet.config import ConfigError, Policy, load_config


def test_defaults():
    arch, limits = load_config()
    assert arch.icache.pmt == 8 and arch.dcache.hit_latency == 1
    assert limits.max_states > 0


def test_sections_override_in_order():
    arch, limits = load_config(text="""
[memory]
transaction_cycles = 5
[dcache]
ways = 2
policy = lru
[limits]
k_p = 99
max_splits = 7
""")
    assert arch.icache.transaction_cycles == 5 == arch.dcache.transaction_cycles
    assert arch.dcache.ways == 2 and arch.dcache.policy is Policy.LRU
    assert arch.icache.ways == 4
    assert arch.machine.run_bound == 99 and limits.max_splits == 7


def test_preset_and_random_policy():
    arch, _ = load_config(preset="arm9-paper", text="[icache]\npolicy = random\n")
    assert arch.icache.policy is Policy.ALWAYS_MISS
    assert arch.icache.transaction_cycles == 10


def test_pipeline_durations():
    arch, _ = load_config(text="[pipeline]\nexecute = 2\n")
    assert arch.durations != load_config()[0].durations


@pytest.mark.parametrize("text", [
    "[bogus]\nx=1\n",
    "[limits]\nfoo=1\n",
    "[dcache]\nsize = 100\n",
    "[machine]\nnope = 3\n",
])
def test_errors(text):
    with pytest.raises(ConfigError):
        load_config(text=text)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_config(preset="nope")


def test_with_policy():
    arch, _ = load_config()
    lru = arch.with_policy(Policy.LRU)
    assert lru.icache.policy is lru.dcache.policy is Policy.LRU

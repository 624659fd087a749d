"""WCET analysis of ARM9-subset programs as a game against unknown data."""

from .abstraction import AbstractionMap, CounterExample, Equivalent, check_equivalence, heuristic_abstraction
from .cache import Access, Cache
from .config import ArchConfig, CacheConfig, Limits, MachineConfig, Policy, load_config
from .isa import Program, parse_listing
from .machine import init_state, run_concrete, step
from .pipeline import ArchState, ClockSchedule, simulate_trace
from .power import max_free_slow_window, wcet_under_schedule
from .search import LimitExceeded, WcetReport, compute_wcet, replay, simulate_single

__version__ = "0.1.0"

__all__ = [
    "AbstractionMap", "CounterExample", "Equivalent", "check_equivalence", "heuristic_abstraction",
    "Access", "Cache", "ArchConfig", "CacheConfig", "Limits", "MachineConfig", "Policy", "load_config",
    "Program", "parse_listing", "init_state", "run_concrete", "step",
    "ArchState", "ClockSchedule", "simulate_trace", "max_free_slow_window", "wcet_under_schedule",
    "LimitExceeded", "WcetReport", "compute_wcet", "replay", "simulate_single",
]

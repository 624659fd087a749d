"""Bundled example listings."""

from __future__ import annotations

from importlib import resources

from ..isa import Program, parse_listing

NAMES = ("fib", "bs", "stalls", "twosplit", "cnt")
MULTI_PATH = ("bs", "twosplit", "cnt")


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.arm").read_text(encoding="utf-8")


def load(name: str) -> Program:
    return parse_listing(source(name))

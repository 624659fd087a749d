"""Random loop-free listings with a bounded number of adversary choices."""

from __future__ import annotations

import random

from armwcet.isa import parse_listing

_CONDS = ["eq", "ne", "lt", "ge", "le", "gt", "ls", "hi"]
_ALU = ["add", "sub", "rsb", "and", "orr", "eor"]


def random_listing(rng: random.Random, max_compares: int = 4, length: int = 24) -> str:
    """Text of a program whose every path passes at most ``max_compares``
    comparisons; branches only go forward so every run terminates."""
    body: list[tuple[str, str, object]] = []  # (mnemonic, operands, forward target index)
    for k in range(rng.randint(1, 3)):
        body.append(("ldr", f"r{k}, [sp, #-{4 * (k + 1)}]", None))
    body.append(("mov", f"r4, #{rng.randint(0, 20)}", None))
    compares = rng.randint(1, max_compares)
    sites = sorted(rng.sample(range(length), compares))
    for pos in range(length):
        if pos in sites:
            a = rng.choice(["r0", "r1", "r2", "r4"])
            b = rng.choice([f"#{rng.randint(-3, 12)}", "r3", "r4"])
            body.append(("cmp", f"{a}, {b}", None))
            for _ in range(rng.randint(1, 3)):
                body.append(_conditional(rng))
            continue
        body.append(_plain(rng))
    body.append(("mov", "pc, lr", None))

    lines = ["00000000 <main>:"]
    n = len(body)
    for idx, (mn, ops, target) in enumerate(body):
        if target == "fwd":
            dest = rng.randint(idx + 1, n - 1)
            ops = f"{4 * dest:x}"
        lines.append(f"  {4 * idx:x}:\t{mn}\t{ops}")
    return "\n".join(lines) + "\n"


def _conditional(rng: random.Random):
    cond = rng.choice(_CONDS)
    kind = rng.random()
    if kind < 0.3:
        return (f"b{cond}", "", "fwd")
    if kind < 0.5:
        return (f"ldr{cond}", f"r{rng.randint(5, 6)}, [sp, #-{4 * rng.randint(1, 6)}]", None)
    op = rng.choice(_ALU)
    return (f"{op}{cond}", f"r{rng.randint(3, 7)}, r{rng.randint(0, 7)}, #{rng.randint(0, 9)}", None)


def _plain(rng: random.Random):
    kind = rng.random()
    if kind < 0.35:
        op = rng.choice(_ALU)
        return (op, f"r{rng.randint(3, 7)}, r{rng.randint(0, 7)}, r{rng.randint(0, 7)}", None)
    if kind < 0.5:
        return ("mov", f"r{rng.randint(3, 7)}, #{rng.randint(0, 255)}", None)
    if kind < 0.65:
        return ("ldr", f"r{rng.randint(3, 7)}, [sp, #-{4 * rng.randint(1, 8)}]", None)
    if kind < 0.8:
        return ("str", f"r{rng.randint(0, 7)}, [sp, #-{4 * rng.randint(1, 8)}]", None)
    if kind < 0.9:
        regs = sorted(rng.sample(range(3, 8), rng.randint(1, 3)))
        return ("stmdb", "sp, {" + ", ".join(f"r{r}" for r in regs) + "}", None)
    regs = sorted(rng.sample(range(3, 8), rng.randint(1, 3)))
    return ("ldmdb", "sp, {" + ", ".join(f"r{r}" for r in regs) + "}", None)


def random_program(seed: int, **kw):
    return parse_listing(random_listing(random.Random(seed), **kw))

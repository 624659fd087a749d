"""Command-line front end: analyze, simulate, check-abs, export, power."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .abstraction import (
    AbstractionMap,
    InvalidAbstraction,
    check_equivalence,
    heuristic_abstraction,
    parse_abstraction_file,
)
from .config import ArchConfig, ConfigError, Limits, Policy, load_config
from .export import ExportUnsupported, export_model
from .isa import ParseError, Program, parse_listing, reg_name
from .machine import MachineFault, NondeterministicRun
from .power import max_free_slow_window
from .search import AnalysisFault, LimitExceeded, WcetReport, compute_wcet, parse_constraints, simulate_single

EXIT_OK, EXIT_PARSE, EXIT_LIMITS, EXIT_FAULT, EXIT_NONDET, EXIT_NOT_EQUIV = range(6)

_REG_NUMBERS = {reg_name(r): r for r in range(16)} | {f"r{r}": r for r in range(16)}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="armwcet", description="WCET analysis of annotated ARM listings")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", type=Path, help="annotated disassembly listing")
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--preset", choices=["arm9-paper"], help="named timing preset")
        p.add_argument("--policy", help="override both cache replacement policies")
        p.add_argument("--max-states", type=int)
        p.add_argument("--max-splits", type=int)
        p.add_argument("--k-p", type=int, help="bound on executed instructions per run")
        p.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")

    a = sub.add_parser("analyze", help="compute the WCET over all adversary strategies")
    common(a)
    a.add_argument("--constraints", type=Path, help="file of 'ADDR outcome[,outcome...]' lines")
    a.add_argument("--abs", type=Path, help="abstraction file to apply")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--memo", action="store_true", help="skip subtrees whose full state was seen")
    a.add_argument("--no-info", action="store_true", help="do not write <file>.info")

    s = sub.add_parser("simulate", help="cycle trace of one concrete run")
    common(s)
    s.add_argument("--reg", action="append", default=[], metavar="R=V", help="initial register value")
    s.add_argument("--mem", action="append", default=[], metavar="ADDR=V", help="initial memory word")
    s.add_argument("--trace", metavar="PATH", help="write the cycle trace here instead of stdout")

    c = sub.add_parser("check-abs", help="verify an abstraction keeps the WCET")
    common(c)
    c.add_argument("absfile", nargs="?", type=Path, help="abstraction file (omit with --heuristic)")
    c.add_argument("--heuristic", action="store_true", help="use the bundled liveness heuristic")

    e = sub.add_parser("export", help="write the timed-automata model and query")
    common(e)
    e.add_argument("--abs", type=Path, help="abstraction file to include")
    e.add_argument("--out", type=Path, help="output stem (default: next to the listing)")

    w = sub.add_parser("power", help="longest slow-clock start with no WCET cost")
    common(w)
    w.add_argument("--slow-factor", type=int, default=4)
    return parser


def _load(args) -> tuple[Program, ArchConfig, Limits]:
    cfg, limits = load_config(args.config, preset=args.preset)
    if args.policy:
        cfg = cfg.with_policy(Policy.parse(args.policy))
    if args.max_states is not None:
        limits = replace(limits, max_states=args.max_states)
    if args.max_splits is not None:
        limits = replace(limits, max_splits=args.max_splits)
    if args.k_p is not None:
        cfg = replace(cfg, machine=replace(cfg.machine, run_bound=args.k_p))
    program = parse_listing(args.file.read_text(encoding="utf-8"))
    return program, cfg, limits


def _emit_json(args, payload: dict) -> None:
    if not args.json:
        return
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.json == "-":
        sys.stdout.write(text)
    else:
        Path(args.json).write_text(text, encoding="utf-8")


def _int(text: str) -> int:
    return int(text, 0)


def _assignments(items: list[str], keys) -> dict:
    out = {}
    for item in items:
        name, _, value = item.partition("=")
        if not value:
            raise ValueError(f"expected NAME=VALUE, got {item!r}")
        out[keys(name.strip())] = _int(value.strip())
    return out


def _register(name: str) -> int:
    if name.lower() not in _REG_NUMBERS:
        raise ValueError(f"unknown register {name!r}")
    return _REG_NUMBERS[name.lower()]


def _info_lines(report: WcetReport, extra: Optional[list[str]] = None) -> str:
    lines = [
        f"wcet: {report.wcet}",
        f"bcet: {report.bcet}",
        f"max_stack_depth: {report.max_stack_depth}",
        f"splits: {report.splits}",
        f"leaves: {report.leaves}",
        f"states: {report.states}",
        f"max_path_moves: {report.max_path_moves}",
        f"constrained: {str(report.constrained).lower()}",
    ]
    return "\n".join(lines + (extra or [])) + "\n"


def _write_info(args, report: WcetReport, extra=None) -> None:
    if getattr(args, "no_info", False):
        return
    Path(str(args.file) + ".info").write_text(_info_lines(report, extra), encoding="utf-8")


def cmd_analyze(args) -> int:
    p, cfg, limits = _load(args)
    constraints = parse_constraints(args.constraints.read_text()) if args.constraints else None
    alpha = parse_abstraction_file(args.abs.read_text()) if args.abs else AbstractionMap()
    alpha.validate(p)
    try:
        report = compute_wcet(p, cfg, limits, abstracted=alpha.abstracted, constraints=constraints,
                              jobs=args.jobs, memo=args.memo)
    except LimitExceeded as exc:
        where = ", ".join(f"{a:#x}" for a in exc.addresses)
        r = exc.report
        print(f"limit {exc.limit} exceeded after {r.splits} splits and {r.states} states")
        if where:
            print(f"adversary choice points involved: {where}")
        print("add outcome constraints for these addresses and re-run")
        _write_info(args, r, [f"limit: {exc.limit}", f"addresses: {where}"])
        _emit_json(args, {"status": "limit", "limit": exc.limit,
                          "addresses": [f"{a:#x}" for a in exc.addresses], "partial": r.to_dict()})
        return EXIT_LIMITS
    except AnalysisFault as exc:
        print(f"fault: {exc.fault}")
        _emit_json(args, {"status": "fault", "fault": str(exc.fault),
                          "path": [{"address": f"{a:#x}", "outcome": o} for a, o in exc.path]})
        if not getattr(args, "no_info", False):
            Path(str(args.file) + ".info").write_text(f"fault: {exc.fault}\n", encoding="utf-8")
        return EXIT_FAULT

    print(f"WCET: {report.wcet} cycles")
    print(f"BCET: {report.bcet} cycles (informational)")
    print(f"splits: {report.splits}  leaves: {report.leaves}  states: {report.states}")
    print(f"max adversary moves on a path: {report.max_path_moves}  max stack depth: {report.max_stack_depth} words")
    if report.witness:
        print("witness: " + " ".join(f"{a:#x}:{o}" for a, o in report.witness))
    if report.constrained:
        print("note: outcome constraints were applied; the bound holds only if they are true")
    _write_info(args, report)
    _emit_json(args, {"status": "ok", "report": report.to_dict()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    p, cfg, _ = _load(args)
    regs = _assignments(args.reg, _register)
    mem = _assignments(args.mem, _int)
    try:
        arch = simulate_single(p, cfg, registers=regs, memory=mem, log_events=True)
    except NondeterministicRun as exc:
        print(f"comparison at {exc.address:#x} depends on unknown data; supply inputs with --reg/--mem")
        _emit_json(args, {"status": "nondeterministic", "address": f"{exc.address:#x}"})
        return EXIT_NONDET
    except MachineFault as exc:
        print(f"fault: {exc.fault}")
        _emit_json(args, {"status": "fault", "fault": str(exc.fault)})
        return EXIT_FAULT
    trace = "\n".join(["cycle,stage,instr_addr,action"] + (arch.events or [])) + "\n"
    if args.trace:
        Path(args.trace).write_text(trace, encoding="utf-8")
    else:
        sys.stdout.write(trace)
    print(f"cycles: {arch.clock}")
    _emit_json(args, {"status": "ok", "cycles": arch.clock, "instructions": len(arch.retired),
                      "stalls": {f"{a:#x}": n for a, n in sorted(arch.stalls.items())}})
    return EXIT_OK


def cmd_check_abs(args) -> int:
    p, cfg, limits = _load(args)
    if args.heuristic:
        alpha = heuristic_abstraction(p)
    elif args.absfile is not None:
        alpha = parse_abstraction_file(args.absfile.read_text())
    else:
        alpha = AbstractionMap()
    try:
        verdict = check_equivalence(p, alpha, cfg, limits)
    except InvalidAbstraction as exc:
        print(f"NO: {exc}")
        _emit_json(args, {"verdict": "NO", "reason": str(exc)})
        return EXIT_NOT_EQUIV
    except LimitExceeded as exc:
        print(f"limit {exc.limit} exceeded")
        return EXIT_LIMITS
    except AnalysisFault as exc:
        print(f"fault: {exc.fault}")
        return EXIT_FAULT
    payload = verdict.to_dict()
    payload["abstracted"] = [f"{a:#x}" for a in sorted(alpha.abstracted)]
    if verdict:
        print(f"YES ({len(alpha)} abstracted instructions, {verdict.paths} paths checked)")
        code = EXIT_OK
    else:
        reg = f" on {verdict.register}" if verdict.register else ""
        print(f"NO: counterexample at {verdict.address:#x}{reg}: {verdict.reason}")
        code = EXIT_NOT_EQUIV
    _emit_json(args, payload)
    return code


def cmd_export(args) -> int:
    p, cfg, limits = _load(args)
    alpha = parse_abstraction_file(args.abs.read_text()) if args.abs else AbstractionMap()
    alpha.validate(p)
    try:
        model, query = export_model(p, cfg, abstraction=alpha, limits=limits)
    except ExportUnsupported as exc:
        print(f"export failed: {exc}")
        return EXIT_PARSE
    except LimitExceeded as exc:
        print(f"limit {exc.limit} exceeded while bounding the WCET")
        return EXIT_LIMITS
    except AnalysisFault as exc:
        print(f"fault: {exc.fault}")
        return EXIT_FAULT
    stem = args.out if args.out else args.file.with_suffix("")
    xml_path, q_path = Path(f"{stem}.xml"), Path(f"{stem}.q")
    xml_path.write_text(model, encoding="utf-8")
    q_path.write_text(query, encoding="utf-8")
    print(f"wrote {xml_path} and {q_path}")
    _emit_json(args, {"model": str(xml_path), "query": query.strip()})
    return EXIT_OK


def cmd_power(args) -> int:
    p, cfg, limits = _load(args)
    try:
        result = max_free_slow_window(p, cfg, args.slow_factor, limits)
    except LimitExceeded as exc:
        print(f"limit {exc.limit} exceeded")
        return EXIT_LIMITS
    except AnalysisFault as exc:
        print(f"fault: {exc.fault}")
        return EXIT_FAULT
    d = result.to_dict()
    print(f"T*: {d['T*']}  WCET: {d['WCET']}  ratio: {d['ratio%']}%  (slow factor {result.slow_factor})")
    _emit_json(args, d)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "check-abs": cmd_check_abs,
    "export": cmd_export,
    "power": cmd_power,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ConfigError, InvalidAbstraction, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

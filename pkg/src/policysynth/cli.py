"""Command-line interface: synth, check, eval, enum-stats, repair, simulate.

Exit codes: 0 ok, 1 usage or IO error, 2 UNSAT, 3 capacity exceeded,
4 validation failure. Every run emits a single-line JSON run report
(subcommand, input digests, per-phase timing, candidate counts, outcome)
on stderr, or to --report FILE.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

from .dimensions import check_policy
from .dsl import print_policy
from .enumeration import MODES, EnumConfig, enum_count_report
from .errors import (
    CapacityExceeded,
    ParseError,
    PolicyError,
    SchemaError,
    TypeCheckError,
    UnknownAction,
    UnknownInput,
    UnknownOperator,
    Unsat,
)
from .interp import WorldState, eval_policy
from .paramsolve import DEFAULT_CAPACITY, apply_adjustments, policy_params, repair
from .simkit import SimConfig, grid_starts, perturb, score
from .synth import L3
from .worldio import load_demos, load_domain, load_policy, save_policy

_VALIDATION_ERRORS = (SchemaError, ParseError, TypeCheckError, UnknownAction,
                      UnknownInput, UnknownOperator)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNSAT = 2
EXIT_CAPACITY = 3
EXIT_VALIDATION = 4


def _digest(path):
    try:
        with open(path, "rb") as fh:
            return "sha256:" + hashlib.sha256(fh.read()).hexdigest()
    except OSError:
        return None


class _Report:
    def __init__(self, subcommand):
        self.data = {"subcommand": subcommand, "inputs": {}, "timing": {},
                     "counts": {}, "outcome": "error"}
        self.t0 = time.perf_counter()

    def add_input(self, label, path):
        if path:
            self.data["inputs"][label] = _digest(path)

    def finish(self, outcome, dest=None):
        self.data["timing"]["total"] = round(time.perf_counter() - self.t0, 6)
        self.data["outcome"] = outcome
        line = json.dumps(self.data, sort_keys=True)
        if dest:
            with open(dest, "w", encoding="utf-8") as fh:
                fh.write(line + "\n")
        else:
            print(line, file=sys.stderr)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="policysynth",
        description="Synthesize, check, repair, and simulate action "
                    "selection policies.")
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--report", help="write the JSON run report here "
                                        "instead of stderr")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for simulation (default 1)")

    p = sub.add_parser("synth", help="synthesize a policy from demonstrations")
    p.add_argument("--domain", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--sketch")
    p.add_argument("--max-depth", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY)
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("check", help="type-check a policy and verify "
                                     "demonstration consistency")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--demos")
    common(p)

    p = sub.add_parser("eval", help="evaluate a policy on world states")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--demos", help="JSONL records to evaluate")
    p.add_argument("--world", help="inline JSON: "
                   '{"start": "...", "world": {...}}')
    common(p)

    p = sub.add_parser("enum-stats", help="feature counts per pruning mode")
    p.add_argument("--domain", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--modes", nargs="*", default=list(MODES))
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--out", help="write CSV here instead of stdout")
    common(p)

    p = sub.add_parser("repair", help="minimally adjust policy thresholds "
                                      "to satisfy corrections")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--corrections", required=True)
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY)
    p.add_argument("--out", required=True)
    p.add_argument("--adjustments-csv", help="write the adjustment table "
                                             "(name,old,delta,new) here")
    common(p)

    p = sub.add_parser("simulate", help="score a policy over a start grid")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--grid", default="20x15", help="NXxNY ball-position grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", nargs="*", default=[],
                   help="factor overrides, e.g. friction=1.5 accel=0.9")
    p.add_argument("--csv", help="write per-cell outcomes here")
    common(p)

    return parser


def _cmd_synth(args, report):
    domain = load_domain(args.domain)
    demos = load_demos(args.demos, domain)
    sketch = load_policy(args.sketch, domain) if args.sketch else None
    report.add_input("domain", args.domain)
    report.add_input("demos", args.demos)
    report.add_input("sketch", args.sketch)
    stats = {}
    result = L3(args.max_depth, demos, domain, sketch=sketch,
                tolerance=args.tolerance, capacity=args.capacity, stats=stats)
    report.data["counts"] = {k: v for k, v in stats.items()
                             if not k.endswith("_seconds")}
    report.data["timing"]["enumeration"] = round(stats.get("enum_seconds", 0.0), 6)
    report.data["timing"]["solving"] = round(stats.get("solve_seconds", 0.0), 6)
    if isinstance(result, Unsat):
        print(f"UNSAT: {result.detail}", file=sys.stderr)
        return EXIT_UNSAT
    save_policy(result, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_check(args, report):
    domain = load_domain(args.domain)
    policy = load_policy(args.policy, domain)
    report.add_input("domain", args.domain)
    report.add_input("policy", args.policy)
    check_policy(policy, domain.type_env())
    if args.demos:
        report.add_input("demos", args.demos)
        demos = load_demos(args.demos, domain)
        for i, d in enumerate(demos, start=1):
            got = eval_policy(policy, d.world)
            if got != d.next_action:
                print(f"record {i}: policy chose {got}, demonstration says "
                      f"{d.next_action} (start {d.start_action})")
                return EXIT_VALIDATION
        print(f"ok: policy is well-typed and consistent with "
              f"{len(demos)} demonstrations")
    else:
        print("ok: policy is well-typed")
    return EXIT_OK


def _cmd_eval(args, report):
    domain = load_domain(args.domain)
    policy = load_policy(args.policy, domain)
    report.add_input("domain", args.domain)
    report.add_input("policy", args.policy)
    if args.world:
        raw = json.loads(args.world)
        bindings = {k: tuple(v) if isinstance(v, list) else float(v)
                    for k, v in raw["world"].items()}
        w = WorldState(raw["start"], bindings)
        print(eval_policy(policy, w))
        return EXIT_OK
    if args.demos:
        report.add_input("demos", args.demos)
        for d in load_demos(args.demos, domain):
            print(eval_policy(policy, d.world))
        return EXIT_OK
    print("eval needs --world or --demos", file=sys.stderr)
    return EXIT_USAGE


def _cmd_enum_stats(args, report):
    domain = load_domain(args.domain)
    demos = load_demos(args.demos, domain)
    report.add_input("domain", args.domain)
    report.add_input("demos", args.demos)
    for mode in args.modes:
        if mode not in MODES:
            print(f"unknown mode {mode!r}; choose from {', '.join(MODES)}",
                  file=sys.stderr)
            return EXIT_USAGE
    configs = [EnumConfig(args.depth, mode, args.tolerance)
               for mode in args.modes]
    worlds = [d.world for d in demos]
    rows = enum_count_report(configs, domain.type_env(), worlds)
    lines = ["mode,depth,count"]
    lines += [f"{mode},{depth},{count}" for mode, depth, count in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    report.data["counts"] = {mode: count for mode, _, count in rows}
    return EXIT_OK


def _cmd_repair(args, report):
    domain = load_domain(args.domain)
    policy = load_policy(args.policy, domain)
    corrections = load_demos(args.corrections, domain)
    report.add_input("domain", args.domain)
    report.add_input("policy", args.policy)
    report.add_input("corrections", args.corrections)
    deltas = repair(policy, corrections, capacity=args.capacity)
    if isinstance(deltas, Unsat):
        print(f"UNSAT: {deltas.detail}", file=sys.stderr)
        return EXIT_UNSAT
    repaired = apply_adjustments(policy, deltas)
    save_policy(repaired, args.out)
    lines = ["name,old,delta,new"]
    for name, old, _dim in policy_params(policy):
        delta = deltas.get(name, 0.0)
        lines.append(f"{name},{old!r},{delta!r},{old + delta!r}")
    text = "\n".join(lines) + "\n"
    if args.adjustments_csv:
        with open(args.adjustments_csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    report.data["counts"]["adjusted"] = sum(1 for v in deltas.values() if v)
    return EXIT_OK


def _cmd_simulate(args, report):
    domain = load_domain(args.domain)
    policy = load_policy(args.policy, domain)
    report.add_input("domain", args.domain)
    report.add_input("policy", args.policy)
    check_policy(policy, domain.type_env())
    try:
        nx, ny = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        print(f"bad --grid {args.grid!r}; expected NXxNY", file=sys.stderr)
        return EXIT_USAGE
    factors = {}
    for kv in args.perturb:
        key, _, value = kv.partition("=")
        if key not in ("friction", "accel") or not value:
            print(f"bad --perturb {kv!r}; expected friction=F or accel=F",
                  file=sys.stderr)
            return EXIT_USAGE
        factors[key] = float(value)
    cfg = SimConfig(seed=args.seed)
    if factors:
        cfg = perturb(cfg, friction=factors.get("friction", 1.0),
                      accel=factors.get("accel", 1.0))
    starts = grid_starts(cfg, nx=nx, ny=ny)
    result = score(policy, cfg, starts, jobs=args.jobs)
    print(f"{result.rate:.4f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("x,y,outcome\n")
            for x, y, outcome in result.cells:
                fh.write(f"{x!r},{y!r},{outcome}\n")
    report.data["counts"]["episodes"] = len(starts)
    report.data["counts"]["successes"] = sum(
        1 for _, _, o in result.cells if o == "success")
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "check": _cmd_check,
    "eval": _cmd_eval,
    "enum-stats": _cmd_enum_stats,
    "repair": _cmd_repair,
    "simulate": _cmd_simulate,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code == 0 else EXIT_USAGE
    report = _Report(args.command)
    try:
        code = _COMMANDS[args.command](args, report)
    except CapacityExceeded as ex:
        print(f"capacity exceeded: {ex}", file=sys.stderr)
        report.finish("capacity", args.report)
        return EXIT_CAPACITY
    except _VALIDATION_ERRORS as ex:
        print(f"validation error: {ex}", file=sys.stderr)
        report.finish("validation-error", args.report)
        return EXIT_VALIDATION
    except OSError as ex:
        print(f"io error: {ex}", file=sys.stderr)
        report.finish("io-error", args.report)
        return EXIT_USAGE
    except PolicyError as ex:
        print(f"error: {ex}", file=sys.stderr)
        report.finish("error", args.report)
        return EXIT_USAGE
    outcomes = {EXIT_OK: "ok", EXIT_UNSAT: "unsat", EXIT_USAGE: "usage",
                EXIT_VALIDATION: "inconsistent"}
    report.finish(outcomes.get(code, "error"), args.report)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

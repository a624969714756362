"""Command-line interface: ``gpv analyze|cutoff|check|validate|example``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .analysis import analyze
from .checker import EngineError, QueryError, ResourceLimit, check
from .cutoff import Inapplicable, comparison_table, compute_cutoff, render_rows
from .harness import EXAMPLES, cutoff_probe, gen_example
from .model import Fairness, GlobalDeadlock, LocalDeadlock, Property, RepeatTarget, SpecError, Target
from .textio import ParseError, parse_protocol, render_report, render_source, run_to_json, verdict_to_json

OK, FOUND, INAPPLICABLE, INPUT_ERROR, RESOURCE_LIMIT = 0, 1, 2, 3, 4

QUERY_HELP = "global-deadlock | local-deadlock[:state] | target:q | repeat-target:q | prop:<formula>"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_query(text: str, k: int = 1):
    head, _, arg = text.partition(":")
    if head == "global-deadlock" and not arg:
        return GlobalDeadlock()
    if head == "local-deadlock":
        return LocalDeadlock(arg or None)
    if head == "target" and arg:
        return Target(arg)
    if head == "repeat-target" and arg:
        return RepeatTarget(arg)
    if head == "prop" and arg:
        return Property(arg, k)
    raise UsageError(f"bad query {text!r}; expected {QUERY_HELP}")


def parse_fairness(value, query, initializing: bool = False) -> Fairness:
    """``--fair`` without a value picks strong for deadlocks and unconditional otherwise."""
    if value is None:
        kind = "none"
    elif value == "auto":
        kind = "strong" if isinstance(query, (GlobalDeadlock, LocalDeadlock)) else "uncond"
    else:
        kind = value
    try:
        return Fairness(kind, initializing)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    return parse_protocol(text)


def _add_query(p, required=True):
    p.add_argument("--query", required=required, help=QUERY_HELP)
    p.add_argument("--fair", nargs="?", const="auto", choices=("none", "uncond", "strong", "auto"),
                   help="fairness; without a value: strong for deadlocks, unconditional otherwise")
    p.add_argument("--initializing", action="store_true", help="fair runs must revisit init")
    p.add_argument("-k", type=int, default=1, help="number of indexed B-processes in a property")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gpv", description="Cutoffs and model checking for guarded protocols.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="structural report of a protocol")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("cutoff", help="cutoff rows for a query")
    p.add_argument("file")
    _add_query(p, required=False)
    p.add_argument("--table", action="store_true", help="all rows of the comparison table")
    p.add_argument("--mode", default="guard-membership", choices=("guard-membership", "deadset"),
                   help="state classification used by the conjunctive global-deadlock row")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("check", help="model-check one instance")
    p.add_argument("file")
    p.add_argument("-n", type=int, required=True)
    _add_query(p)
    p.add_argument("--engine", default="auto", choices=("auto", "explicit", "counter"))
    p.add_argument("--witness", metavar="FILE", help="write the witness run as JSON")
    p.add_argument("--budget-states", type=int, default=None)
    p.add_argument("--budget-secs", type=float, default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("validate", help="probe a cutoff empirically")
    p.add_argument("file")
    _add_query(p)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--engine", default="auto", choices=("auto", "explicit", "counter"))
    p.add_argument("--budget-states", type=int, default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("example", help="print a generated protocol")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--cycles", type=int, default=4)
    p.add_argument("--height", type=int, default=2)
    p.add_argument("-o", "--output", metavar="FILE")
    return ap


def _budget(value):
    if value is not None:
        return value
    env = os.environ.get("GPV_BUDGET_STATES")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"GPV_BUDGET_STATES must be an integer, got {env!r}") from None
    return None


def _cmd_analyze(args) -> int:
    spec = _load(args.file)
    report = analyze(spec)
    if args.json:
        rows = [r.to_json() for r in comparison_table(spec)]
        sys.stdout.write(render_report({"analysis": report, "cutoffs": rows}))
        return OK
    g = report["guards"]
    print(f"kind: {report['kind']}")
    print(f"|Q_A| = {report['A_size']}, |Q_B| = {report['B_size']}")
    print(f"|G_A| = {g['G_A_count']}, |G_B| = {g['G_B_count']}, |G| = {g['G']}, |B|_G = {g['B_G']}")
    for name in g["G_B"]:
        print(f"  guard: {name}")
    if "core" in report:
        print(f"m = {report['enable']['m']}, Q* = {report['enable']['Q_star']}")
        print(f"N = {report['core']['N']}, |N*| = {report['core']['N_star_size']}")
    else:
        for mode, c in report["classification"].items():
            print(f"{mode}: k1 = {c['k1']}, k2 = {c['k2']}, k3 = {c['k3']}")
        for q, ds in report["deadsets"].items():
            print(f"  deadsets of {q}: {ds}")
        print("predicates: " + ", ".join(f"{k}={v}" for k, v in report["predicates"].items()))
    return OK


def _row_value(row) -> str:
    v = row.new
    if isinstance(v, Inapplicable):
        return f"inapplicable: {v.reason}"
    return str(v) + (f" (safe {row.safe_variant})" if row.safe_variant is not None else "")


def _cmd_cutoff(args) -> int:
    spec = _load(args.file)
    if args.table:
        rows = comparison_table(spec, args.k)
        if args.json:
            sys.stdout.write(render_report({"cutoffs": [r.to_json() for r in rows]}))
        else:
            sys.stdout.write(render_rows(rows))
        return OK
    if not args.query:
        raise UsageError("cutoff needs --query or --table")
    query = parse_query(args.query, args.k)
    fairness = parse_fairness(args.fair, query, args.initializing)
    row = compute_cutoff(spec, query, fairness, args.k, args.mode)
    if args.json:
        sys.stdout.write(render_report({"cutoffs": [row.to_json()]}))
    else:
        print(f"{_row_value(row)}  [{row.theorem}]")
        for note in row.notes:
            print(f"  note: {note}")
    return OK if row.applicable else INAPPLICABLE


def _cmd_check(args) -> int:
    spec = _load(args.file)
    query = parse_query(args.query, args.k)
    fairness = parse_fairness(args.fair, query, args.initializing)
    t0 = time.monotonic()
    try:
        v = check(spec, args.n, query, fairness, engine=args.engine,
                  max_states=_budget(args.budget_states), max_secs=args.budget_secs)
    except ResourceLimit as err:
        print(f"Unknown: {err}", file=sys.stderr)
        return RESOURCE_LIMIT
    except EngineError as err:
        print(f"unsupported: {err}", file=sys.stderr)
        return INAPPLICABLE
    except QueryError as err:
        raise UsageError(str(err)) from None
    if args.witness and v.witness is not None:
        with open(args.witness, "w", encoding="utf-8") as fh:
            json.dump(run_to_json(v.witness), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.json:
        report = {"verdicts": [verdict_to_json(v, args.query, args.n)],
                  "timings": {"check": time.monotonic() - t0}}
        sys.stdout.write(render_report(report))
    else:
        st = v.stats
        print(f"{v.result.value} (n = {args.n}, engine {st.get('engine')}, {st.get('states')} states)")
        if v.witness is not None:
            w = v.witness
            kind = "finite" if w.finite else f"lasso with loop of {len(w.loop)}"
            print(f"witness: {kind}, stem of {len(w.stem)} configurations")
        for note in v.notes:
            print(f"note: {note}")
    return OK if v.ok else FOUND


def _cmd_validate(args) -> int:
    spec = _load(args.file)
    query = parse_query(args.query, args.k)
    fairness = parse_fairness(args.fair, query, args.initializing)
    try:
        table = cutoff_probe(spec, query, fairness, n_max=args.max_n, engine=args.engine,
                             max_states=_budget(args.budget_states))
    except ValueError as err:
        if isinstance(err, SpecError):
            raise
        print(f"inapplicable: {err}", file=sys.stderr)
        return INAPPLICABLE
    except QueryError as err:
        raise UsageError(str(err)) from None
    if args.json:
        sys.stdout.write(render_report({"verdicts": [table.to_json()]}))
    else:
        data = table.to_json()
        print(f"{data['query']} ({data['fairness']}), cutoff {data['cutoff']}: {data['consistency']}")
        for r in data["rows"]:
            verdict = "unknown" if r["verdict"] is None else ("found" if r["verdict"] else "not found")
            print(f"  n = {r['n']:<3} {verdict:<10} {r['states']} states {r['note']}")
    return OK if table.consistent else FOUND


def _cmd_example(args) -> int:
    try:
        spec = gen_example(args.name, cycles=args.cycles, height=args.height)
    except ValueError as err:
        raise UsageError(str(err)) from None
    text = render_source(spec)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return OK


COMMANDS = {
    "analyze": _cmd_analyze,
    "cutoff": _cmd_cutoff,
    "check": _cmd_check,
    "validate": _cmd_validate,
    "example": _cmd_example,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return INPUT_ERROR
    except ParseError as err:
        print(f"{getattr(args, 'file', '')}: {err}", file=sys.stderr)
        return INPUT_ERROR
    except SpecError as err:
        print(f"invalid protocol: {err}", file=sys.stderr)
        return INPUT_ERROR
    except SystemExit as err:  # --help
        return err.code if isinstance(err.code, int) else INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Protocol description format, canonical rendering and JSON reports.

Grammar (``#`` starts a comment; items end at ``;`` or a newline)::

    system conjunctive
    template B {
      states: init, tr, r, tw, w;
      init: init;
      inputs: go;                       # optional
      trans init -> tr [true];
      trans tr -> r [not w] on go;
    }

Guards: ``true``, ``not q1 & not q2`` (conjunctive), ``oneof{q1,q2}``
(disjunctive) and ``oneof{..} & oneof{..}`` (conjdisj only).  Template A may
be omitted; it then stands for an absent process.

Diagnostic codes: E001 syntax, E010 unknown state or bad transition
endpoint, E011 init excluded by a conjunctive guard, E012 duplicate names,
E013 guard syntax does not match the system kind, E014 missing init or empty
template, E015 missing or repeated section, E016 unknown input.
"""

from __future__ import annotations

import json
import re
from typing import Optional

from .model import (
    INERT_A,
    Configuration,
    ExplicitState,
    Guard,
    Kind,
    RunRep,
    SpecError,
    System,
    Template,
    Transition,
)


class ParseError(SpecError):
    def __init__(self, code: str, message: str, line: int = 0, col: int = 0):
        super().__init__(code, f"line {line}, column {col}: {message}" if line else message)
        self.line = line
        self.col = col


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_TRANS = re.compile(rf"trans\s+({_NAME})\s*->\s*({_NAME})\s*(?:\[(.*)\])?\s*(?:on\s+({_NAME}))?\s*$")


def _items(text: str):
    """Yield ``(line, col, item)`` for every statement, comments stripped."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        start, depth = 0, 0
        for pos, ch in enumerate(line + ";"):
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth = max(depth - 1, 0)
            elif depth == 0 and ch in ";{}":
                piece = line[start:pos]
                if piece.strip():
                    yield lineno, start + 1 + len(piece) - len(piece.lstrip()), piece.strip()
                if ch != ";":
                    yield lineno, pos + 1, ch
                start = pos + 1


def _names(text: str, line: int, col: int) -> list:
    out = [s.strip() for s in text.split(",")]
    for s in out:
        if not re.fullmatch(_NAME, s):
            raise ParseError("E001", f"bad name {s!r}", line, col)
    return out


def parse_guard(text: str, kind: Kind, line: int = 0, col: int = 0) -> Guard:
    text = text.strip()
    if text in ("", "true"):
        return Guard.true()
    parts = [p.strip() for p in text.split("&")]
    if all(p.startswith("not ") or p.startswith("not\t") for p in parts):
        if kind != Kind.CONJUNCTIVE:
            raise ParseError("E013", f"conjunctive guard '{text}' in a {kind.value} system", line, col)
        states = [p[3:].strip() for p in parts]
        for s in states:
            if not re.fullmatch(_NAME, s):
                raise ParseError("E001", f"bad state name {s!r} in guard", line, col)
        return Guard.excluded(states)
    sets = []
    for p in parts:
        m = re.fullmatch(r"oneof\s*\{(.*)\}", p)
        if not m:
            raise ParseError("E001", f"cannot parse guard '{text}'", line, col)
        if not m.group(1).strip():
            raise ParseError("E001", "empty state set in guard", line, col)
        sets.append(_names(m.group(1), line, col))
    if kind == Kind.CONJUNCTIVE:
        raise ParseError("E013", f"disjunctive guard '{text}' in a conjunctive system", line, col)
    if len(sets) > 1 and kind != Kind.CONJDISJ:
        raise ParseError("E013", "conjunctions of oneof-sets need system kind conjdisj", line, col)
    return Guard.conj(sets) if len(sets) > 1 else Guard.exists(sets[0])


def parse_protocol(text: str) -> System:
    """Parse a protocol description; raises :class:`ParseError` on any problem."""
    kind: Optional[Kind] = None
    templates: dict = {}
    cur = None  # (name, fields, line)
    expect_brace = None
    for line, col, item in _items(text):
        if expect_brace is not None:
            if item != "{":
                raise ParseError("E001", "expected '{' after template name", line, col)
            cur = expect_brace
            expect_brace = None
            continue
        if cur is None:
            m = re.fullmatch(r"system\s+(\S+)", item)
            if m:
                if kind is not None:
                    raise ParseError("E015", "system kind declared twice", line, col)
                try:
                    kind = Kind(m.group(1))
                except ValueError:
                    raise ParseError("E001", f"unknown system kind {m.group(1)!r}", line, col) from None
                continue
            m = re.fullmatch(r"template\s+(\S+)\s*(\{)?", item)
            if m or item.startswith("template"):
                name = m.group(1) if m else ""
                if name not in ("A", "B"):
                    raise ParseError("E001", "template name must be A or B", line, col)
                if name in templates:
                    raise ParseError("E015", f"template {name} declared twice", line, col)
                if kind is None:
                    raise ParseError("E015", "the system line must come first", line, col)
                entry = (name, {"trans": []}, line)
                if m.group(2):
                    cur = entry
                else:
                    expect_brace = entry
                continue
            if item == "{":
                raise ParseError("E001", "'{' without template header", line, col)
            raise ParseError("E001", f"unexpected {item!r}", line, col)
        if item == "}":
            templates[cur[0]] = _build_template(cur, kind)
            cur = None
            continue
        _template_item(cur[1], item, kind, line, col)
    if cur is not None or expect_brace is not None:
        raise ParseError("E001", "unterminated template block", cur[2] if cur else 0, 1)
    if kind is None:
        raise ParseError("E015", "missing system line")
    if "B" not in templates:
        raise ParseError("E015", "missing template B")
    try:
        return System(kind, templates["B"], templates.get("A", INERT_A))
    except SpecError as err:
        if isinstance(err, ParseError):
            raise
        raise ParseError(err.code, err.message) from None


def _template_item(fields: dict, item: str, kind: Kind, line: int, col: int) -> None:
    m = re.fullmatch(r"(states|init|inputs)\s*:\s*(.*)", item)
    if m:
        key, val = m.groups()
        if key in fields:
            raise ParseError("E015", f"'{key}' declared twice", line, col)
        if key == "init":
            if not re.fullmatch(_NAME, val.strip()):
                raise ParseError("E001", f"bad init state {val.strip()!r}", line, col)
            fields[key] = (val.strip(), line, col)
        else:
            fields[key] = (_names(val, line, col) if val.strip() else [], line, col)
        return
    if item.startswith("trans"):
        m = _TRANS.match(item)
        if not m:
            raise ParseError("E001", "expected 'trans <from> -> <to> [<guard>] (on <input>)?'", line, col)
        src, dst, gtext, inp = m.groups()
        fields["trans"].append((Transition(src, dst, parse_guard(gtext or "", kind, line, col), inp), line, col))
        return
    raise ParseError("E001", f"unexpected {item!r} in template", line, col)


def _build_template(entry, kind: Kind) -> Template:
    name, fields, line = entry
    if "init" not in fields:
        raise ParseError("E014", f"template {name} must declare at least init", line, 1)
    init, iline, icol = fields["init"]
    states = fields.get("states", ([init], iline, icol))[0]
    if len(set(states)) != len(states):
        raise ParseError("E012", f"duplicate state in template {name}", line, 1)
    if init not in states:
        raise ParseError("E014", f"init {init!r} is not a declared state", iline, icol)
    inputs = fields.get("inputs", ([], 0, 0))[0]
    if len(set(inputs)) != len(inputs):
        raise ParseError("E012", f"duplicate input in template {name}", line, 1)
    trans = []
    for t, tl, tc in fields["trans"]:
        for s in (t.src, t.dst):
            if s not in states:
                raise ParseError("E010", f"unknown state {s!r} in template {name}", tl, tc)
        if t.input is not None and t.input not in inputs:
            raise ParseError("E016", f"unknown input {t.input!r}", tl, tc)
        trans.append(t)
    return Template(tuple(states), init, tuple(trans), tuple(inputs))


def render_source(spec: System) -> str:
    """Canonical source text; ``parse_protocol(render_source(s)) == s``."""
    out = [f"system {spec.kind.value}"]
    for name, tpl in (("A", spec.A), ("B", spec.B)):
        if name == "A" and tpl == INERT_A:
            continue
        out.append(f"template {name} {{")
        out.append(f"  states: {', '.join(tpl.states)};")
        out.append(f"  init: {tpl.init};")
        if tpl.inputs:
            out.append(f"  inputs: {', '.join(tpl.inputs)};")
        for t in tpl.transitions:
            on = f" on {t.input}" if t.input else ""
            out.append(f"  trans {t.src} -> {t.dst} [{t.guard}]{on};")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- witnesses


def run_to_json(run: RunRep) -> dict:
    def conf(c: Configuration):
        return {"state": [c.state.a, list(c.state.bs)], "mover": c.mover, "inputs": list(c.inputs)}

    return {"n": run.n, "stem": [conf(c) for c in run.stem], "loop": [conf(c) for c in run.loop]}


def run_from_json(data: dict) -> RunRep:
    def conf(d):
        a, bs = d["state"]
        inputs = tuple(None if x is None else str(x) for x in d.get("inputs", ()))
        return Configuration(ExplicitState(a, tuple(bs)), inputs, d["mover"])

    return RunRep(int(data["n"]), tuple(conf(c) for c in data["stem"]), tuple(conf(c) for c in data["loop"]))


# ---------------------------------------------------------------- reports

SECTIONS = ("analysis", "cutoffs", "verdicts", "timings")


def _plain(x):
    """Convert report values into JSON-ready builtins with stable formatting."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_plain(v) for v in x)
    if isinstance(x, Guard):
        return str(x)
    if isinstance(x, RunRep):
        return run_to_json(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return round(x, 6)
    if hasattr(x, "value"):
        return x.value
    if hasattr(x, "item"):
        return _plain(x.item())
    return str(x)


def render_report(report: dict) -> str:
    """Canonical JSON: every section present, sorted keys, two-space indent."""
    body = {s: report.get(s, [] if s in ("cutoffs", "verdicts") else {}) for s in SECTIONS}
    for k, v in report.items():
        body.setdefault(k, v)
    return json.dumps(_plain(body), sort_keys=True, indent=2) + "\n"


def verdict_to_json(v, query: str, n: int) -> dict:
    return {
        "query": query,
        "n": n,
        "result": v.result.value,
        "witness": run_to_json(v.witness) if v.witness is not None else None,
        "stats": {k: val for k, val in v.stats.items() if k != "seconds"},
        "notes": list(v.notes),
    }

"""Cutoff values from structural analysis, with comparison columns.

Every formula is written once as a string over the symbols ``|B|``,
``|B|_G``, ``|G|``, ``|G_U|``, ``k``, ``m``, ``|N*|`` and ``k_1..k_3``;
the same string is rendered in the symbolic tables and evaluated for the
numeric rows, so the two can never drift apart.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import analysis as an
from .model import (
    NONFAIR,
    Fairness,
    GlobalDeadlock,
    Kind,
    LocalDeadlock,
    Property,
    RepeatTarget,
    System,
    Target,
)

STATIC = "StaticallyImpossible"


@dataclass(frozen=True)
class Inapplicable:
    reason: str

    def to_json(self):
        return {"inapplicable": self.reason}


Value = Union[int, str, Inapplicable, None]

# ---------------------------------------------------------------- formulas

_TERM = re.compile(r"([+-]?)(\d*)(\|B\|_G|\|B\||\|G_U\||\|G\||\|N\*\||k_1|k_2|k_3|k|m|)")


def evaluate(formula: str, env: dict) -> int:
    """Evaluate a linear formula such as ``2|B|-2k_1-2k_2-k_3``."""
    total, pos = 0, 0
    text = formula.replace(" ", "")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot evaluate {formula!r} at {text[pos:]!r}")
        sign, coef, sym = m.groups()
        c = int(coef) if coef else 1
        v = env[sym] if sym else 1
        total += (-1 if sign == "-" else 1) * c * v
        pos = m.end()
    return total


# symbolic tables: (query, fairness, EK, AJK, new)
DISJUNCTIVE_TABLE = (
    ("k-indexed", "non-fair", "|B|+k+1", "|B|+k+1", "|B|_G+k+1 and |G|+k+1"),
    ("k-indexed", "fair", "-", "2|B|+k-1", "|B|+|G|+k"),
    ("local-deadlock", "non-fair", "-", "|B|+2", "m+|G|+1, with m<|B|"),
    ("local-deadlock", "fair", "-", "2|B|-1", "|B|+|G|"),
    ("global-deadlock", "", "-", "2|B|-1", "|B|+|N*| with |N*|<|B|"),
)

CONJUNCTIVE_TABLE = (
    ("k-indexed", "non-fair", "k+1", "k+1", "unchanged"),
    ("k-indexed", "fair", "-", "k+1", "unchanged"),
    ("local-deadlock", "non-fair", "-", "|B|+1*", "|G_U|+2*"),
    ("local-deadlock", "fair", "-", "2|B|-2*", "2|G_U|+1*"),
    ("global-deadlock", "", "2|B|+1", "2|B|-2", "2|B|-2k_1-2k_2-k_3"),
)

FOOTNOTES = {
    "conjunctive": (
        "*: systems have to be 1-conjunctive; in fair case, they additionally have to be initializing",
        "k_1: number of free states",
        "k_2: number of non-blocking states (that are not free)",
        "k_3: number of not self-blocking states (that are not free or non-blocking)",
    ),
    "disjunctive": (),
}


def symbolic_table(kind: str) -> str:
    """Tab-separated rendering of the symbolic cutoff table for a system kind."""
    rows = DISJUNCTIVE_TABLE if kind == "disjunctive" else CONJUNCTIVE_TABLE
    lines = [f"# {kind}", "\t".join(("query", "fairness", "EK", "AJK", "new"))]
    lines += ["\t".join(r) for r in rows]
    lines += FOOTNOTES[kind]
    return "\n".join(lines) + "\n"


def _cell_formulas(cell: str) -> list:
    """The evaluable formulas inside a table cell."""
    cell = cell.split(",")[0].split(" with ")[0]
    return [c.strip().rstrip("*") for c in cell.split(" and ")]


def _eval_cell(cell: str, env: dict) -> Optional[int]:
    if cell == "-":
        return None
    return min(evaluate(f, env) for f in _cell_formulas(cell))


# ---------------------------------------------------------------- rows


@dataclass
class CutoffRow:
    query: str
    fairness: str
    k: int
    new: Value
    theorem: str
    ek: Value = None
    ajk: Value = None
    safe_variant: Optional[int] = None
    formula: str = ""
    notes: list = field(default_factory=list)
    initializing: bool = False

    @property
    def applicable(self) -> bool:
        return not isinstance(self.new, Inapplicable)

    @property
    def discharge(self) -> Union[int, str, None]:
        """The size a checker run must reach to settle the query (safe value)."""
        if isinstance(self.new, Inapplicable):
            return None
        if self.new == STATIC:
            return STATIC
        return self.safe_variant if self.safe_variant is not None else self.new

    def to_json(self) -> dict:
        def val(v):
            return v.to_json() if isinstance(v, Inapplicable) else v

        return {
            "query": self.query,
            "fairness": self.fairness,
            "initializing": self.initializing,
            "k": self.k,
            "ek": val(self.ek),
            "ajk": val(self.ajk),
            "new": val(self.new),
            "theorem": self.theorem,
            "applicable": self.applicable,
            "safe_variant": self.safe_variant,
            "formula": self.formula,
            "notes": list(self.notes),
        }


def query_name(query) -> str:
    if isinstance(query, GlobalDeadlock):
        return "global-deadlock"
    if isinstance(query, LocalDeadlock):
        return "local-deadlock"
    if isinstance(query, Target):
        return f"target:{query.state}"
    if isinstance(query, RepeatTarget):
        return f"repeat-target:{query.state}"
    if isinstance(query, Property):
        return f"prop:{query.formula}"
    raise ValueError(f"unknown query {query!r}")


def environment(spec: System, k: int = 1, proc: str = "B") -> dict:
    """Values of every formula symbol for a system."""
    gi = an.nontrivial_guards(spec)
    b = spec.B.size
    env = {"|B|": b, "|B|_G": gi.b_g, "|G|": len(gi.G), "k": k, "|G_U|": len(gi.G_B if proc == "B" else gi.G_A)}
    if spec.kind == Kind.CONJDISJ:
        env["|G|"] = len(gi.conjuncts)
        env["m"] = b - 1
        env["|N*|"] = b - 1
    elif spec.kind == Kind.DISJUNCTIVE:
        ei = an.enable_sets(spec)
        env["m"] = _deadlock_m(spec, ei)
        env["|N*|"] = an.self_enabling_core(ei).n_star_size
    else:
        for mode, prefix in (("guard-membership", ""), ("deadset", "deadset:")):
            d = an.classify_states(spec, mode)
            env[prefix + "k_1"], env[prefix + "k_2"], env[prefix + "k_3"] = d.k1, d.k2, d.k3
    return env


def _deadlock_m(spec: System, ei) -> int:
    """m over Q*_B, widened to every state whose enabling set misses some B-state."""
    B = set(spec.B.states)
    cand = [len(e) for q, e in ei.enable.items() if q in ei.q_star or not B <= e]
    return max(cand, default=0)


def structurally_initializing(tpl) -> bool:
    """Every cycle passes init, so every infinitely moving process revisits it."""
    cycles, truncated = an.simple_cycles(tpl)
    return not truncated and all(tpl.init in c.states for c in cycles)


_FAIR_NAMES = {"none": "non-fair", "uncond": "fair", "strong": "fair"}


def compute_cutoff(
    spec: System,
    query,
    fairness: Fairness = NONFAIR,
    k: int = None,
    mode: str = "guard-membership",
) -> CutoffRow:
    """Cutoff row for one query and fairness assumption."""
    if k is None:
        k = getattr(query, "k", 1)
    proc = getattr(query, "proc", "B")
    env = environment(spec, k, proc)
    name = query_name(query)
    row = CutoffRow(name, fairness.kind, k, None, "", initializing=fairness.initializing)
    if spec.kind == Kind.CONJUNCTIVE:
        _conjunctive(spec, query, fairness, env, row, mode)
    else:
        _disjunctive(spec, query, fairness, env, row)
    if not spec.closed:
        row.notes.append("open templates: input handling follows the all-inputs disabledness rule")
    return row


def _set(row: CutoffRow, formula: str, env: dict, tag: str) -> None:
    row.formula = formula
    row.new = _eval_cell(formula, env)
    row.theorem = tag


def _disjunctive(spec, query, fairness, env, row):
    tables = {r[:2]: r for r in DISJUNCTIVE_TABLE}
    tag = "disjunctive" if spec.kind == Kind.DISJUNCTIVE else "conjdisj"
    if spec.kind == Kind.CONJDISJ:
        row.notes.append("|G| counts distinct conjuncts; m and |N*| are replaced by |B|-1")
    fair = _FAIR_NAMES[fairness.kind]
    if isinstance(query, Property):
        if fairness.kind == "strong":
            row.new = Inapplicable("k-indexed cutoffs cover unconditional fairness only")
            row.theorem = tag
            return
        r = tables[("k-indexed", fair)]
        _columns(row, r, env)
        _set(row, r[4], env, f"{tag}:k-indexed-{fair}")
        if fair == "non-fair":
            row.notes.append("the |G|+1 variant proven for 1-indexed properties is not used")
        return
    if isinstance(query, LocalDeadlock):
        r = tables[("local-deadlock", fair)]
        _columns(row, r, env)
        _set(row, r[4], env, f"{tag}:local-deadlock-{fair}")
        if fair == "fair":
            row.safe_variant = row.new + 1
            row.notes.append("safe_variant is |B|+|G|+1, one above the table value")
        return
    if isinstance(query, GlobalDeadlock):
        r = tables[("global-deadlock", "")]
        _columns(row, r, env)
        _set(row, r[4], env, f"{tag}:global-deadlock")
        return
    if isinstance(query, (Target, RepeatTarget)):
        if isinstance(query, Target) and fairness.fair:
            row.notes.append("fair target reachability is read as F all-in-q on fair runs")
        _set(row, "|B|", env, f"{tag}:target")
        return
    row.new = Inapplicable("unsupported query")


def _columns(row, r, env):
    row.ek = _eval_cell(r[2], env)
    row.ajk = _eval_cell(r[3], env)


def _conjunctive(spec, query, fairness, env, row, mode):
    tables = {r[:2]: r for r in CONJUNCTIVE_TABLE}
    fair = _FAIR_NAMES[fairness.kind]
    if isinstance(query, Property):
        r = tables[("k-indexed", fair)]
        _columns(row, r, env)
        _set(row, "k+1", env, f"conjunctive:k-indexed-{fair}")
        return
    if isinstance(query, GlobalDeadlock):
        r = tables[("global-deadlock", "")]
        _columns(row, r, env)
        prefix = "" if mode == "guard-membership" else "deadset:"
        local = dict(env, k_1=env[prefix + "k_1"], k_2=env[prefix + "k_2"], k_3=env[prefix + "k_3"])
        value = max(0, evaluate(r[4], local))
        row.formula = r[4]
        row.theorem = "conjunctive:global-deadlock"
        other = "deadset" if mode == "guard-membership" else "guard-membership"
        oprefix = "" if other == "guard-membership" else "deadset:"
        ovalue = max(0, evaluate(r[4], dict(env, k_1=env[oprefix + "k_1"], k_2=env[oprefix + "k_2"],
                                            k_3=env[oprefix + "k_3"])))
        row.notes.append(f"mode {mode}: formula value {value}; mode {other}: {ovalue}")
        sinks = [q for q in spec.B.states if not spec.B.outgoing(q)]
        if sinks:
            row.notes.append(f"states without exits ({', '.join(sinks)}) deadlock alone; at least 1 process")
            row.new = max(value, 1)
        else:
            row.new = STATIC if value <= 1 else value
        return
    if isinstance(query, LocalDeadlock):
        tpl = spec.B if getattr(query, "proc", "B") == "B" else spec.A
        which = "B" if tpl is spec.B else "A"
        preds = an.template_predicates(spec, which)
        one = preds.one_conjunctive
        r = tables[("local-deadlock", fair)]
        row.ek = None
        init_ok = fairness.initializing or structurally_initializing(tpl)
        if fair == "non-fair":
            row.ajk = evaluate("|B|+1", env) if one else Inapplicable("template is not 1-conjunctive")
            gates = [n for n, ok in (("1-conjunctive", one),
                                     ("effectively-1-conjunctive", preds.effectively_one_conjunctive),
                                     ("freely-traversable", preds.freely_traversable),
                                     ("alternation-free", preds.alternation_free)) if ok]
            if gates:
                _set(row, "|G_U|+2", env, "conjunctive:local-deadlock-non-fair via " + "+".join(gates))
                return
            seg = an.segment_analysis(spec) if which == "B" else an.SegmentInfo(False, "A-template")
            if seg.applicable:
                env2 = dict(env, n_a=seg.n_a, n_b=seg.n_b)
                row.formula = "|G_B|+n_a+n_b+5"
                row.new = env2["|G_U|"] + seg.n_a + seg.n_b + 5
                row.theorem = "conjunctive:single-2-conjunctive-segments"
                row.notes.append(f"n_a={seg.n_a}, n_b={seg.n_b}, a={seg.a}, b={seg.b}, q_l={seg.q_l}")
                return
            row.new = Inapplicable("quadratic lower bound: no general cutoff implemented "
                                   f"(segment structure: {seg.reason})")
            row.theorem = "conjunctive:local-deadlock"
            return
        row.ajk = (evaluate("2|B|-2", env) if one and init_ok
                   else Inapplicable("template is not 1-conjunctive" if not one else "runs must be initializing"))
        gates = [n for n, ok in (("1-conjunctive", one),
                                 ("effectively-1-conjunctive", preds.effectively_one_conjunctive),
                                 ("alternation-free", preds.alternation_free)) if ok]
        if not gates:
            row.new = Inapplicable("fair local-deadlock cutoff needs a 1-conjunctive, effectively "
                                   "1-conjunctive or alternation-free template")
            row.theorem = "conjunctive:local-deadlock-fair"
            return
        if not init_ok:
            row.new = Inapplicable("fair local-deadlock cutoff needs initializing runs")
            row.theorem = "conjunctive:local-deadlock-fair"
            return
        if not fairness.initializing:
            row.notes.append("every cycle of the template passes init, so fair runs are initializing")
        _set(row, "2|G_U|+1", env, "conjunctive:local-deadlock-fair via " + "+".join(gates))
        return
    if isinstance(query, (Target, RepeatTarget)):
        row.new = Inapplicable("open question: no conjunctive target cutoff known")
        row.theorem = "conjunctive:target"
        return
    row.new = Inapplicable("unsupported query")


# ---------------------------------------------------------------- tables


def comparison_table(spec: System, k: int = 1) -> list:
    """Numeric rows for every line of the table matching the system kind."""
    rows = [
        compute_cutoff(spec, Property("A G true", k), NONFAIR, k),
        compute_cutoff(spec, Property("A G true", k), Fairness("uncond"), k),
        compute_cutoff(spec, LocalDeadlock(), NONFAIR, k),
        compute_cutoff(spec, LocalDeadlock(), Fairness("strong", spec.kind == Kind.CONJUNCTIVE), k),
        compute_cutoff(spec, GlobalDeadlock(), NONFAIR, k),
    ]
    for r in rows:
        if r.query.startswith("prop:"):
            r.query = "k-indexed"
    if spec.kind != Kind.CONJUNCTIVE:
        q = spec.B.init
        rows.append(compute_cutoff(spec, Target(q), NONFAIR, k))
        rows.append(compute_cutoff(spec, RepeatTarget(q), NONFAIR, k))
        for r in rows[-2:]:
            r.query = r.query.split(":")[0]
    return rows


def render_rows(rows: list) -> str:
    def val(v):
        if v is None:
            return "-"
        if isinstance(v, Inapplicable):
            return f"inapplicable ({v.reason})"
        return str(v)

    lines = []
    for r in rows:
        fair = r.fairness + ("+init" if r.initializing else "")
        extra = f" [safe {r.safe_variant}]" if r.safe_variant is not None else ""
        lines.append(f"{r.query:<18} {fair:<12} ek={val(r.ek):<4} ajk={val(r.ajk):<6} "
                     f"new={val(r.new)}{extra}  ({r.theorem})")
    return "\n".join(lines) + "\n"

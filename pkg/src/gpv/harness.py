"""Example templates, random corpora and empirical cutoff probes."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .model import (
    NONFAIR,
    Fairness,
    GlobalDeadlock,
    Guard,
    Kind,
    LocalDeadlock,
    System,
    Template,
    Transition,
)

EXAMPLES = ("reader-writer", "reader-writer-fixed", "quadratic", "toy-disjunctive")


def reader_writer(fixed: bool = False) -> System:
    """Readers enter via tr when no writer is active; writers wait in tw."""
    enter = Guard.excluded(["tw"]) if fixed else Guard.true()
    T = [
        Transition("init", "tr", enter),
        Transition("tr", "r", Guard.excluded(["w"])),
        Transition("r", "init"),
        Transition("init", "tw"),
        Transition("tw", "w", Guard.excluded(["w", "r"])),
        Transition("w", "init"),
    ]
    return System(Kind.CONJUNCTIVE, Template(("init", "tr", "r", "tw", "w"), "init", T))


def quadratic(cycles: int = 4, height: int = 2) -> System:
    """Template family whose local-deadlock onset grows with width and height.

    ``cycles`` letter states each return to init through a chain u1..u_height;
    the chain steps alternately exclude the first and the second letter of
    every pair.  State ql has one 2-conjunctive exit per letter pair.
    """
    if cycles not in (4, 6) or height not in (2, 4):
        raise ValueError("quadratic supports cycles in {4, 6} and height in {2, 4}")
    letters = "abcdef"[:cycles]
    pairs = [letters[i:i + 2] for i in range(0, cycles, 2)]
    us = [f"u{i}" for i in range(1, height + 1)]
    qs = [f"q{i}" for i in range(1, len(pairs))]
    T = []
    for x in letters:
        T += [Transition("init", x), Transition(x, "u1")]
    first = Guard.excluded([p[0] for p in pairs])
    second = Guard.excluded([p[1] for p in pairs])
    chain = us + ["init"]
    for i in range(height):
        T.append(Transition(chain[i], chain[i + 1], first if i % 2 == 0 else second))
    T.append(Transition("u1", "ql"))
    T.append(Transition("ql", "u1", Guard.excluded(pairs[0])))
    for q, p in zip(qs, pairs[1:]):
        T += [Transition("ql", q, Guard.excluded(p)), Transition(q, "ql")]
    states = ("init", *letters, *us, "ql", *qs)
    return System(Kind.CONJUNCTIVE, Template(states, "init", T))


def toy_disjunctive() -> System:
    T = [
        Transition("i", "x"),
        Transition("x", "y", Guard.exists(["x"])),
        Transition("y", "i", Guard.exists(["y"])),
    ]
    return System(Kind.DISJUNCTIVE, Template(("i", "x", "y"), "i", T))


def gen_example(name: str, **params) -> System:
    if name == "reader-writer":
        return reader_writer(False)
    if name == "reader-writer-fixed":
        return reader_writer(True)
    if name == "quadratic":
        return quadratic(params.get("cycles", 4), params.get("height", 2))
    if name == "toy-disjunctive":
        return toy_disjunctive()
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


# ---------------------------------------------------------------- random corpora


def random_spec(
    seed: int,
    kind: str = "disjunctive",
    states: int = 4,
    guards: int = 3,
    arity: int = 2,
    density: float = 0.4,
    with_a: bool = False,
) -> System:
    """Deterministic random system; ``guards`` bounds the distinct non-trivial guards.

    Every B-state gets at least one outgoing transition.  Conjunctive guards
    never exclude init states.  ``with_a`` adds a two-state A-template.
    """
    rng = random.Random(seed)
    kind = Kind(kind)
    bs = ["init"] + [f"s{i}" for i in range(1, states)]
    a_states = ["a0", "a1"] if with_a else []
    universe = bs + a_states
    blockers = [q for q in universe if q not in ("init", "a0")]

    pool = []
    for _ in range(guards):
        if kind == Kind.CONJUNCTIVE:
            if not blockers:
                break
            k = rng.randint(1, min(arity, len(blockers)))
            pool.append(Guard.excluded(rng.sample(blockers, k)))
        elif kind == Kind.DISJUNCTIVE:
            k = rng.randint(1, min(arity, len(universe)))
            pool.append(Guard.exists(rng.sample(universe, k)))
        else:
            sets = [rng.sample(universe, rng.randint(1, min(arity, len(universe)))) for _ in range(rng.randint(1, 2))]
            pool.append(Guard.conj(sets))

    def guard():
        if not pool or rng.random() < 0.35:
            return Guard.true()
        return rng.choice(pool)

    def transitions(names):
        out = []
        for q in names:
            targets = [r for r in names if r != q and rng.random() < density]
            if not targets:
                targets = [rng.choice([r for r in names if r != q])]
            for r in targets:
                out.append(Transition(q, r, guard()))
        return out

    B = Template(tuple(bs), "init", tuple(transitions(bs)))
    A = Template(tuple(a_states), "a0", tuple(transitions(a_states))) if with_a else None
    return System(kind, B, A) if A is not None else System(kind, B)


def random_one_conjunctive(seed: int, states: int = 4, guards: int = 3, density: float = 0.4) -> System:
    """Conjunctive random system whose guards each exclude exactly one state."""
    return random_spec(seed, "conjunctive", states, guards, 1, density)


# ---------------------------------------------------------------- probes


@dataclass
class ProbeRow:
    n: int
    verdict: object  # bool (searched-for run exists) or None when unknown
    states: int = 0
    seconds: float = 0.0
    note: str = ""


@dataclass
class ProbeTable:
    query: str
    fairness: str
    cutoff: object
    rows: list = field(default_factory=list)
    consistent: bool = True
    first_disagreement: object = None
    monotone: bool = True

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "fairness": self.fairness,
            "cutoff": self.cutoff,
            "consistency": "Consistent" if self.consistent else f"Inconsistent({self.first_disagreement})",
            "monotone_onset": self.monotone,
            "rows": [
                {"n": r.n, "verdict": r.verdict, "states": r.states, "seconds": round(r.seconds, 3), "note": r.note}
                for r in self.rows
            ],
        }


def cutoff_probe(
    spec: System,
    query,
    fairness: Fairness = NONFAIR,
    n_max: int = None,
    cutoff=None,
    n_min: int = None,
    engine: str = "auto",
    max_states: int = None,
) -> ProbeTable:
    """Check ``query`` for a range of sizes and compare every size >= c with c.

    ``cutoff`` defaults to the safe value of the matching cutoff row.  A cutoff
    that is statically impossible is probed as "never found" from size 1.
    """
    from .checker import ResourceLimit, check
    from .cutoff import STATIC, compute_cutoff, query_name

    if cutoff is None:
        row = compute_cutoff(spec, query, fairness)
        cutoff = row.discharge
        if cutoff is None:
            raise ValueError(f"no applicable cutoff: {row.new}")
    static = cutoff == STATIC
    c = 1 if static else int(cutoff)
    k = getattr(query, "k", 1)
    lo = n_min if n_min is not None else max(k, 1)
    hi = n_max if n_max is not None else c + 2
    table = ProbeTable(query_name(query), fairness.kind + ("+init" if fairness.initializing else ""), cutoff)
    for n in range(lo, hi + 1):
        t0 = time.monotonic()
        try:
            v = check(spec, n, query, fairness, engine=engine, max_states=max_states)
            row = ProbeRow(n, v.found, v.stats.get("states", 0), time.monotonic() - t0)
        except ResourceLimit as err:
            row = ProbeRow(n, None, 0, time.monotonic() - t0, f"Unknown: {err}")
        table.rows.append(row)
    ref = next((r.verdict for r in table.rows if r.n == c), None)
    for r in table.rows:
        if r.verdict is None:
            continue
        expect = False if static else ref
        if r.n >= c and expect is not None and r.verdict != expect:
            table.consistent = False
            table.first_disagreement = r.n
            break
    if isinstance(query, (GlobalDeadlock, LocalDeadlock)):
        seen = False
        for r in table.rows:
            if r.verdict is None:
                continue
            if seen and not r.verdict:
                table.monotone = False
            seen = seen or r.verdict
    return table

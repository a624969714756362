"""End-to-end acceptance checks, one test per criterion."""

import itertools
import random
import resource
import time
from pathlib import Path
from collections import Counter

import pytest

from gpv.analysis import analyze, classify_states, degree_bound, max_independent_set, minimal_deadsets
from gpv.checker import Result, check
from gpv.cutoff import STATIC, comparison_table, compute_cutoff, symbolic_table
from gpv.harness import (
    cutoff_probe,
    quadratic,
    random_one_conjunctive,
    random_spec,
    reader_writer,
)
from gpv.model import (
    NONFAIR,
    ExplicitState,
    Fairness,
    GlobalDeadlock,
    LocalDeadlock,
    Property,
    RepeatTarget,
    Target,
    enabled_transitions,
)
from gpv.witness import CASES, PremiseError, source_run, transfer_run, transfer_size, validate_run

FIXTURE = Path(__file__).parent / "fixtures" / "cutoff_tables.txt"

STRONG = Fairness("strong")


def test_reader_writer_numbers(criterion):
    with criterion(1, "reader-writer structural numbers and cutoffs"):
        t0 = time.monotonic()
        spec = reader_writer()
        rep = analyze(spec)
        assert rep["guards"]["G_B_count"] == 2
        cls = classify_states(spec)
        assert (cls.k1, cls.k2) == (3, 2)
        assert compute_cutoff(spec, LocalDeadlock(), STRONG).new == 5
        gd = compute_cutoff(spec, GlobalDeadlock())
        assert gd.new == STATIC and "formula value 0" in gd.notes[0]

        fixed = reader_writer(True)
        assert analyze(fixed)["guards"]["G_B_count"] == 3
        assert compute_cutoff(fixed, LocalDeadlock(), STRONG).new == 7
        gd = compute_cutoff(fixed, GlobalDeadlock(), mode="guard-membership")
        assert gd.new == STATIC and "guard-membership: formula value 1" in gd.notes[0]
        assert time.monotonic() - t0 < 1.0


def test_reader_writer_bug_and_fix(criterion):
    with criterion(2, "reader-writer deadlock at n = 5, fixed variant clean at n = 7"):
        spec = reader_writer()
        t0 = time.monotonic()
        v = check(spec, 5, LocalDeadlock(), STRONG, engine="explicit")
        assert time.monotonic() - t0 < 60
        assert v.result == Result.DEADLOCK
        assert validate_run(spec, 5, v.witness)
        assert {c.state.bs[0] for c in v.witness.loop} == {"tw"}

        t0 = time.monotonic()
        v = check(reader_writer(True), 7, LocalDeadlock(), Fairness("strong", True), engine="explicit")
        assert time.monotonic() - t0 < 60
        assert v.result == Result.NO_DEADLOCK


def onset(cycles, height, below, at):
    spec = quadratic(cycles, height)
    out = []
    for n in (below, at):
        t0 = time.monotonic()
        v = check(spec, n, LocalDeadlock("ql"), NONFAIR, engine="counter")
        assert time.monotonic() - t0 < 600
        out.append(v.found)
    assert resource.getrusage(resource.RUSAGE_SELF).ru_maxrss < 4 * 1024 * 1024  # KiB
    return out


def test_quadratic_onsets(criterion):
    with criterion(3, "quadratic family deadlock onsets 9 and 13"):
        assert onset(4, 2, 8, 9) == [False, True]
        assert onset(6, 2, 12, 13) == [False, True]


@pytest.mark.slow
def test_quadratic_height_onset(criterion):
    with criterion("3b", "quadratic(6,4) deadlock onset 19"):
        assert onset(6, 4, 18, 19) == [False, True]


def row_queries(spec, row):
    q = spec.B.states[-1]
    if row.query == "k-indexed":
        return [Property(f"A GF B1.{q}", 1), Property(f"A G (B1.{q} -> F B1.{spec.B.init})", 1),
                Property(f"E F B1.{q}", 1)]
    if row.query == "local-deadlock":
        return [LocalDeadlock()]
    if row.query == "global-deadlock":
        return [GlobalDeadlock()]
    if row.query == "target":
        return [Target(s) for s in spec.B.states]
    if row.query == "repeat-target":
        return [RepeatTarget(s) for s in spec.B.states]
    raise AssertionError(row.query)


def probe_corpus(specs):
    probes, bad = 0, []
    for seed, spec in specs:
        for row in comparison_table(spec):
            if not row.applicable:
                continue
            fairness = Fairness(row.fairness, row.initializing)
            for q in row_queries(spec, row):
                table = cutoff_probe(spec, q, fairness, cutoff=row.discharge)
                probes += 1
                if not table.consistent:
                    bad.append((seed, row.query, row.fairness, q, table.first_disagreement))
    return probes, bad


def test_cutoff_probe_soundness(criterion):
    with criterion(4, "cutoff rows consistent up to c + 2 on 120 + 120 random systems"):
        disj = [(s, random_spec(s, "disjunctive", states=3 + s % 2, guards=3, with_a=s % 3 == 0)) for s in range(120)]
        for _, spec in disj:
            assert spec.B.size <= 4 and analyze(spec)["guards"]["G"] <= 3
        conj = [(s, random_one_conjunctive(s, states=3 + s % 3, guards=3)) for s in range(120)]
        probes, bad = probe_corpus(disj + conj)
        assert probes >= 200
        assert bad == []


def test_engine_agreement(criterion):
    with criterion(5, "counter and explicit engines agree on 200 instances"):
        queries = [("gd", lambda s: GlobalDeadlock()), ("ld", lambda s: LocalDeadlock()),
                   ("target", lambda s: Target(s.B.states[-1]))]
        count, disagree = 0, []
        for seed in itertools.count():
            if count >= 200:
                break
            kind = ("disjunctive", "conjunctive", "conjdisj")[seed % 3]
            spec = random_spec(seed, kind, states=3 + seed % 3, with_a=seed % 2 == 0)
            n = 1 + seed % 4
            for name, make in queries:
                q = make(spec)
                a = check(spec, n, q, engine="counter")
                b = check(spec, n, q, engine="explicit")
                count += 1
                if a.found != b.found:
                    disagree.append((seed, n, name))
                for v in (a, b):
                    if v.witness is not None:
                        assert validate_run(spec, n, v.witness)
        assert disagree == []


def transfer_corpus():
    for seed in itertools.count():
        d = random_spec(seed, "disjunctive", states=3 + seed % 2, guards=2, with_a=seed % 2 == 0)
        c = random_one_conjunctive(seed, states=4 + seed % 2, guards=3)
        yield seed, d, c


def test_transfer_constructions(criterion):
    with criterion(6, "every transfer case: 10 instances from size c + 2, all valid"):
        ok, failures = Counter(), []
        for seed, disj, conj in transfer_corpus():
            if all(ok[c] >= 10 for c in CASES) or seed > 400:
                break
            for case in CASES:
                if ok[case] >= 10:
                    continue
                spec = conj if case.startswith("B") else disj
                targets = spec.B.states if case.startswith("C") else [None]
                for target in targets:
                    size = transfer_size(spec, case)
                    x = source_run(spec, case, size + 2, target, max_states=200_000)
                    if x is None:
                        continue
                    try:
                        y = transfer_run(spec, x, case, target)
                    except PremiseError as err:
                        failures.append((seed, case, target, str(err)))
                        continue
                    except Exception as err:  # noqa: BLE001 - every failure is reported
                        failures.append((seed, case, target, f"{type(err).__name__}: {err}"))
                        continue
                    assert y.n == size and validate_run(spec, size, y)
                    ok[case] += 1
        assert failures == []
        assert all(ok[c] >= 10 for c in CASES), dict(ok)


def brute_independence(nodes, edges):
    idx = {v: i for i, v in enumerate(nodes)}
    adj = [0] * len(nodes)
    for a, b in edges:
        adj[idx[a]] |= 1 << idx[b]
        adj[idx[b]] |= 1 << idx[a]
    best = 0
    for mask in range(1 << len(nodes)):
        size = bin(mask).count("1")
        if size <= best:
            continue
        if all(not (mask >> i) & 1 or not adj[i] & mask for i in range(len(nodes))):
            best = size
    return best


def test_independent_set_bounds(criterion):
    with criterion(7, "degree bound and exact N* on 1000 conflict graphs"):
        rng = random.Random(2024)
        for _ in range(1000):
            n = rng.randint(0, 12)
            nodes = [f"q{i}" for i in range(n)]
            p = rng.random()
            edges = [e for e in itertools.combinations(nodes, 2) if rng.random() < p]
            exact = len(max_independent_set(nodes, edges))
            assert exact == brute_independence(nodes, edges)
            assert degree_bound(nodes, edges) >= exact


def test_table_regression(criterion):
    with criterion(8, "symbolic cutoff tables match the checked-in fixture"):
        text = symbolic_table("disjunctive") + symbolic_table("conjunctive")
        assert text.encode() == FIXTURE.read_bytes()


def place(spec, q, members):
    """Process 1 in q, one other process in each member state (A-states go to A)."""
    a = next((s for s in members if s in spec.A.states), spec.A.init)
    bs = [q] + [s for s in members if s in spec.B.states]
    return ExplicitState(a, tuple(bs))


def blocked(spec, state):
    return not enabled_transitions(spec, state, 1)


def test_deadsets(criterion):
    with criterion(9, "minimal deadsets block and are minimal on 200 states"):
        checked = 0
        for seed in itertools.count():
            if checked >= 200:
                break
            spec = random_spec(seed, "conjunctive", states=4 + seed % 3, guards=3, arity=2, with_a=seed % 2 == 0)
            for q in spec.B.states:
                ds = minimal_deadsets(spec, q)
                universe = sorted({x for t in spec.B.outgoing(q) for x in t.guard.excluded_states})
                for d in ds.sets:
                    assert blocked(spec, place(spec, q, d))
                    for i in range(len(d)):
                        assert not blocked(spec, place(spec, q, d[:i] + d[i + 1:]))
                # completeness: every blocking placement contains a reported deadset
                for k in range(len(universe) + 1):
                    for combo in itertools.combinations(universe, k):
                        if sum(s in spec.A.states for s in combo) > 1:
                            continue
                        if blocked(spec, place(spec, q, combo)) and not ds.truncated:
                            assert any(set(d) <= set(combo) for d in ds.sets)
                checked += 1

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpv.analysis import (
    analyze,
    classify_states,
    cycle_inventory,
    degree_bound,
    enable_sets,
    max_independent_set,
    minimal_deadsets,
    nontrivial_guards,
    segment_analysis,
    self_enabling_core,
    template_predicates,
)
from gpv.cutoff import compute_cutoff
from gpv.harness import quadratic, reader_writer, toy_disjunctive
from gpv.model import Guard, Kind, LocalDeadlock, System, Template, Transition


def free_template(kind=Kind.CONJUNCTIVE):
    T = (Transition("init", "s"), Transition("s", "t"), Transition("t", "init"))
    return System(kind, Template(("init", "s", "t"), "init", T))


def test_reader_writer_guards():
    g = nontrivial_guards(reader_writer())
    assert g.G_B == {Guard.excluded(["w"]), Guard.excluded(["w", "r"])}
    assert len(nontrivial_guards(reader_writer(True)).G_B) == 3


def test_trivial_guards_only():
    g = nontrivial_guards(free_template())
    assert not g.G and g.b_g == 0


def test_toy_enable_sets():
    e = enable_sets(toy_disjunctive())
    assert e.enable["x"] == {"x"} and e.enable["y"] == {"y"}
    assert e.q_star == {"x", "y"} and e.m == 1
    core = self_enabling_core(e)
    assert set(core.N) == {"x", "y"} and core.n_star_size == 2


def test_trivial_template_enable_sets():
    e = enable_sets(free_template(Kind.DISJUNCTIVE))
    assert not e.q_star and e.m == 0
    assert self_enabling_core(e).n_star_size == 0


def test_conjunctive_enable_sets_use_allowed_states():
    e = enable_sets(reader_writer())
    assert e.enable["tr"] == {"a0", "init", "tr", "r", "tw"}


def test_reader_writer_deadsets():
    spec = reader_writer()
    assert minimal_deadsets(spec, "tw").sets == (("r",), ("w",))
    assert minimal_deadsets(spec, "r").sets == ()


def test_hitting_set_deadset():
    T = (Transition("init", "q"), Transition("q", "a", Guard.excluded(["a"])), Transition("q", "b", Guard.excluded(["b"])),
         Transition("a", "init"), Transition("b", "init"))
    spec = System(Kind.CONJUNCTIVE, Template(("init", "q", "a", "b"), "init", T))
    assert minimal_deadsets(spec, "q").sets == (("a", "b"),)


@pytest.mark.parametrize("mode", ["deadset", "guard-membership"])
def test_reader_writer_classification(mode):
    d = classify_states(reader_writer(), mode)
    assert (d.k1, d.k2, d.k3) == (3, 2, 0)
    assert d.D1 == {"init", "r", "w"}


def test_fixed_reader_writer_classification():
    d = classify_states(reader_writer(True), "guard-membership")
    assert (d.k1, d.k2, d.k3) == (3, 1, 1)


def test_trivial_template_classification():
    d = classify_states(free_template())
    assert (d.k1, d.k2, d.k3) == (3, 0, 0)


def test_reader_writer_predicates():
    p = template_predicates(reader_writer()).flags()
    assert p == {"oneConjunctive": False, "effectivelyOneConjunctive": False,
                 "freelyTraversable": False, "alternationFree": True}


def test_trivial_template_predicates():
    assert all(template_predicates(free_template()).flags().values())


def test_reader_writer_cycles():
    inv = cycle_inventory(reader_writer().B)
    states = {c.states for c in inv.cycles}
    assert {("init", "tr", "r"), ("init", "tw", "w")} <= states
    lasso = next(lo for lo in inv.lassos if lo.states == ("init", "tr", "r"))
    assert lasso.guards == {Guard.excluded(["w"])}


def test_acyclic_template():
    T = (Transition("init", "s"),)
    inv = cycle_inventory(Template(("init", "s"), "init", T))
    assert not inv.cycles and not inv.lassos


def test_quadratic_letter_cycles():
    inv = cycle_inventory(quadratic(4, 2).B)
    letters = [c for c in inv.cycles if "init" in c.states]
    assert sorted(c.states[1] for c in letters) == ["a", "b", "c", "d"]


def segment_template(extra_a_cycle=False):
    T = [
        Transition("init", "a", Guard.excluded(["b"])), Transition("a", "pa"), Transition("pa", "init", Guard.excluded(["a"])),
        Transition("init", "b", Guard.excluded(["a"])), Transition("b", "pb"), Transition("pb", "init", Guard.excluded(["b"])),
        Transition("init", "ql"), Transition("ql", "init", Guard.excluded(["a", "b"])),
    ]
    if extra_a_cycle:
        T.append(Transition("a", "init"))
    return System(Kind.CONJUNCTIVE, Template(("init", "a", "pa", "b", "pb", "ql"), "init", tuple(T)))


def test_segment_counts():
    spec = segment_template()
    info = segment_analysis(spec)
    assert info.applicable and (info.n_a, info.n_b) == (1, 1)
    row = compute_cutoff(spec, LocalDeadlock())
    g_b = len(nontrivial_guards(spec).G_B)
    assert row.theorem == "conjunctive:single-2-conjunctive-segments"
    assert row.new == g_b + 7 == 10


def test_segment_needs_unique_cycle():
    info = segment_analysis(segment_template(extra_a_cycle=True))
    assert not info.applicable and info.reason == "non-unique cycle C_a"


def test_reader_writer_segments_inapplicable():
    assert not segment_analysis(reader_writer()).applicable


def brute_mis(nodes, edges):
    es = {frozenset(e) for e in edges}
    for k in range(len(nodes), -1, -1):
        for c in itertools.combinations(nodes, k):
            if all(frozenset(p) not in es for p in itertools.combinations(c, 2)):
                return k
    return 0


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 9))
    nodes = [f"v{i}" for i in range(n)]
    pairs = list(itertools.combinations(nodes, 2))
    edges = [p for p in pairs if draw(st.booleans())]
    return nodes, edges


@given(graphs())
def test_independent_set_is_maximum(g):
    nodes, edges = g
    mis = max_independent_set(nodes, edges)
    es = {frozenset(e) for e in edges}
    assert all(frozenset(p) not in es for p in itertools.combinations(mis, 2))
    assert len(mis) == brute_mis(nodes, edges)
    assert degree_bound(nodes, edges) >= len(mis)


def test_degree_bound_without_edges():
    assert degree_bound(["a", "b", "c"], []) == 3


def test_analyze_report_sections():
    r = analyze(reader_writer())
    assert r["guards"]["G_B_count"] == 2
    assert r["classification"]["guard-membership"]["k1"] == 3
    assert r["deadsets"]["tw"] == [["r"], ["w"]]
    r = analyze(toy_disjunctive())
    assert r["core"]["N_star_size"] == 2 and r["enable"]["m"] == 1


def test_deadsets_rejected_for_disjunctive():
    with pytest.raises(ValueError):
        minimal_deadsets(toy_disjunctive(), "x")


def test_random_state_deadsets_block():
    from gpv.harness import random_spec

    spec = random_spec(11, "conjunctive", states=5, guards=3)
    for q in spec.B.states:
        for d in minimal_deadsets(spec, q).sets:
            for t in spec.B.outgoing(q):
                assert not t.guard.holds(set(d))


def test_segment_cutoff_is_consistent():
    from gpv.harness import cutoff_probe

    assert cutoff_probe(segment_template(), LocalDeadlock()).consistent

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpv.cutoff import (
    STATIC,
    Inapplicable,
    comparison_table,
    compute_cutoff,
    evaluate,
    render_rows,
    symbolic_table,
)
from gpv.harness import random_one_conjunctive, random_spec, reader_writer, toy_disjunctive
from gpv.model import (
    NONFAIR,
    Fairness,
    GlobalDeadlock,
    Kind,
    LocalDeadlock,
    Property,
    RepeatTarget,
    System,
    Target,
    Template,
    Transition,
)

FIXTURE = Path(__file__).parent / "fixtures" / "cutoff_tables.txt"
STRONG_INIT = Fairness("strong", True)


def test_reader_writer_fair_local_deadlock():
    row = compute_cutoff(reader_writer(), LocalDeadlock(), STRONG_INIT)
    assert row.new == 5
    assert "alternation-free" in row.theorem
    assert isinstance(row.ajk, Inapplicable)


def test_reader_writer_global_deadlock_impossible():
    row = compute_cutoff(reader_writer(), GlobalDeadlock())
    assert row.new == STATIC and row.discharge == STATIC
    assert "formula value 0" in row.notes[0]


def test_fixed_reader_writer():
    spec = reader_writer(True)
    assert compute_cutoff(spec, LocalDeadlock(), STRONG_INIT).new == 7
    row = compute_cutoff(spec, GlobalDeadlock(), mode="guard-membership")
    assert row.new == STATIC and "guard-membership: formula value 1" in row.notes[0]


def test_toy_global_deadlock_row():
    row = compute_cutoff(toy_disjunctive(), GlobalDeadlock())
    assert row.ek is None and row.ajk == 5 and row.new == 5


def test_unguarded_disjunctive_property():
    spec = System(Kind.DISJUNCTIVE, Template(("init", "s"), "init", (Transition("init", "s"), Transition("s", "init"))))
    assert compute_cutoff(spec, Property("G true", 1), NONFAIR).new == 2


def test_disjunctive_fair_row_has_safe_variant():
    row = compute_cutoff(toy_disjunctive(), LocalDeadlock(), Fairness("strong"))
    assert row.new == 5 and row.safe_variant == 6 and row.discharge == 6


def test_symbolic_tables_match_fixture():
    text = symbolic_table("disjunctive") + symbolic_table("conjunctive")
    assert text == FIXTURE.read_text(encoding="utf-8")


@pytest.mark.parametrize("formula,env,value", [
    ("|B|+k+1", {"|B|": 4, "k": 2}, 7),
    ("2|B|-1", {"|B|": 3}, 5),
    ("2|B|-2k_1-2k_2-k_3", {"|B|": 5, "k_1": 3, "k_2": 1, "k_3": 1}, 1),
    ("m+|G|+1", {"m": 1, "|G|": 2}, 4),
    ("|B|+|N*|", {"|B|": 3, "|N*|": 2}, 5),
])
def test_evaluate(formula, env, value):
    assert evaluate(formula, env) == value


@pytest.mark.parametrize("spec", [reader_writer(), reader_writer(True), toy_disjunctive()])
def test_render_rows_lists_each_row(spec):
    rows = comparison_table(spec)
    assert len(render_rows(rows).splitlines()) == len(rows)


@given(st.integers(0, 400), st.sampled_from(["disjunctive", "conjunctive"]))
def test_cutoffs_are_positive_or_static(seed, kind):
    spec = random_spec(seed, kind, states=4, guards=3)
    for row in comparison_table(spec):
        if row.applicable and row.new != STATIC:
            assert isinstance(row.new, int) and row.new >= 1
            if row.safe_variant is not None:
                assert row.safe_variant >= row.new


@given(st.integers(0, 400))
def test_queries_cover_all_rows(seed):
    spec = random_one_conjunctive(seed)
    for q in (GlobalDeadlock(), LocalDeadlock(), Target("init"), RepeatTarget("init")):
        row = compute_cutoff(spec, q)
        assert row.query

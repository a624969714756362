import pytest

from gpv.analysis import nontrivial_guards
from gpv.cutoff import STATIC
from gpv.harness import (
    EXAMPLES,
    cutoff_probe,
    gen_example,
    quadratic,
    random_one_conjunctive,
    random_spec,
    reader_writer,
    toy_disjunctive,
)
from gpv.model import GlobalDeadlock, Kind, LocalDeadlock, check_system


def test_reader_writer_shape():
    spec = reader_writer()
    assert spec.kind == Kind.CONJUNCTIVE and spec.B.size == 5
    assert len(nontrivial_guards(spec).G_B) == 2


def test_quadratic_guards_do_not_grow_with_height():
    assert len(nontrivial_guards(quadratic(4, 2)).G_B) == len(nontrivial_guards(quadratic(4, 4)).G_B)


def test_quadratic_rejects_other_shapes():
    with pytest.raises(ValueError):
        quadratic(5, 2)


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_are_valid(name):
    check_system(gen_example(name))


def test_unknown_example():
    with pytest.raises(ValueError):
        gen_example("nope")


def test_seeds_are_deterministic():
    assert random_spec(1) == random_spec(1)
    assert random_spec(1) != random_spec(2)


@pytest.mark.parametrize("seed", range(50))
def test_conjunctive_guards_keep_init_neutral(seed):
    spec = random_spec(seed, "conjunctive", with_a=True)
    check_system(spec)
    for t in spec.B.transitions + spec.A.transitions:
        assert "init" not in t.guard.excluded_states and "a0" not in t.guard.excluded_states


@pytest.mark.parametrize("seed", range(30))
def test_one_conjunctive_corpus(seed):
    spec = random_one_conjunctive(seed)
    assert all(len(t.guard.excluded_states) <= 1 for t in spec.B.transitions)


def test_toy_global_deadlock_probe():
    table = cutoff_probe(toy_disjunctive(), GlobalDeadlock(), n_max=7)
    assert table.cutoff == 5 and table.consistent
    assert [r.verdict for r in table.rows] == [True, True, False, False, False, False, False]


def test_quadratic_onset_probe():
    table = cutoff_probe(quadratic(4, 2), LocalDeadlock("ql"), cutoff=9, n_min=6, n_max=10, engine="counter")
    assert [(r.n, r.verdict) for r in table.rows] == [(6, False), (7, False), (8, False), (9, True), (10, True)]
    assert table.consistent and table.monotone


def test_static_cutoff_probe_expects_absence():
    table = cutoff_probe(reader_writer(), GlobalDeadlock(), n_max=4)
    assert table.cutoff == STATIC and table.consistent
    assert not any(r.verdict for r in table.rows)


def test_budget_limit_yields_unknown_rows():
    table = cutoff_probe(quadratic(4, 2), LocalDeadlock(), cutoff=9, n_min=9, n_max=9, max_states=10)
    assert table.rows[0].verdict is None and "Unknown" in table.rows[0].note

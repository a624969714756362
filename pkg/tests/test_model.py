import itertools

import pytest

from gpv.harness import reader_writer, toy_disjunctive
from gpv.model import (
    ExplicitState,
    Fairness,
    Guard,
    Kind,
    SpecError,
    System,
    Template,
    Transition,
    check_system,
    enabled_processes,
    guard_holds,
    initial_state,
    successors,
    to_counter,
)


def rw_state(*bs):
    return ExplicitState("a0", tuple(bs))


def test_conjunctive_guard_blocked_by_reader():
    spec = reader_writer()
    s = rw_state("tw", "r", "init", "init", "init")
    assert not guard_holds(spec, s, 1, Guard.excluded(["w", "r"]))


def test_trivial_guard_always_holds():
    spec = reader_writer()
    for bs in itertools.product(spec.B.states, repeat=3):
        for p in range(4):
            assert guard_holds(spec, rw_state(*bs), p, Guard.true())


def test_disjunctive_guard_ignores_mover():
    spec = toy_disjunctive()
    assert not guard_holds(spec, rw_state("x", "i", "i"), 1, Guard.exists(["x"]))
    assert guard_holds(spec, rw_state("x", "x", "i"), 1, Guard.exists(["x"]))


def brute_exists(others, states):
    return any(o in states for o in others)


def test_disjunctive_guard_matches_brute_force():
    spec = toy_disjunctive()
    for bs in itertools.product(spec.B.states, repeat=3):
        s = rw_state(*bs)
        for p in (1, 2, 3):
            others = [b for j, b in enumerate(bs, 1) if j != p]
            for g in (["x"], ["y"], ["x", "y"]):
                assert guard_holds(spec, s, p, Guard.exists(g)) == brute_exists(others, g)


def test_enabled_processes_reader_writer():
    spec = reader_writer()
    s = rw_state("tw", "r", "tr", "init", "init")
    assert enabled_processes(spec, s) == {2, 3, 4, 5}


def test_all_enabled_initially():
    spec = toy_disjunctive()
    assert enabled_processes(spec, initial_state(spec, 3)) == {1, 2, 3}


def test_initial_successor_count():
    spec = reader_writer()
    assert len(successors(spec, initial_state(spec, 2))) == 4


def test_deadlocked_state_has_no_successors():
    spec = toy_disjunctive()
    assert successors(spec, rw_state("x")) == []


def test_counter_projection_of_successors():
    spec = reader_writer()
    for bs in itertools.product(spec.B.states, repeat=3):
        s = rw_state(*bs)
        explicit = {to_counter(spec, t, 0) for _, t, _ in successors(spec, s)}
        counted = {t for _, t, _ in successors(spec, to_counter(spec, s, 0))}
        assert explicit == counted


def test_conjunctive_guard_may_not_exclude_init():
    tpl = Template(("init", "s"), "init", (Transition("init", "s", Guard.excluded(["init"])), Transition("s", "init")))
    with pytest.raises(SpecError):
        check_system(System(Kind.CONJUNCTIVE, tpl))


def test_fairness_rejects_initializing_without_fairness():
    with pytest.raises(ValueError):
        Fairness("none", True)
    with pytest.raises(ValueError):
        Fairness("weak")

from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpv.checker import (
    Acceptance,
    QueryError,
    ResourceLimit,
    Result,
    StateSpace,
    check,
    fair_lasso_search,
    fair_run,
    run_is_fair,
)
from gpv.checker.fair import Graph
from gpv.harness import quadratic, random_spec, reader_writer, toy_disjunctive
from gpv.model import (
    NONFAIR,
    Fairness,
    GlobalDeadlock,
    LocalDeadlock,
    Property,
    RepeatTarget,
    Target,
    enabled_processes,
    initial_state,
    successors,
    to_counter,
)
from gpv.witness import validate_run

STRONG = Fairness("strong")


def explicit_reachable(spec, n):
    start = initial_state(spec, n)
    seen, todo = {start}, deque([start])
    while todo:
        s = todo.popleft()
        for _, t, _ in successors(spec, s):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen


def test_reader_writer_parked_writer():
    spec = reader_writer()
    v = check(spec, 5, LocalDeadlock(), STRONG, engine="explicit")
    assert v.result == Result.DEADLOCK
    w = v.witness
    assert validate_run(spec, 5, w)
    assert {c.state.bs[0] for c in w.loop} == {"tw"}
    assert all("r" in c.state.bs[1:] for c in w.loop)
    assert run_is_fair(spec, w, STRONG, exclude=(1,))


def test_reader_writer_small_fair_deadlock_is_vacuous():
    spec = reader_writer()
    w = check(spec, 3, LocalDeadlock(), STRONG, engine="explicit").witness
    assert w is not None
    assert all(1 not in enabled_processes(spec, c.state) for c in w.loop)


def test_fixed_reader_writer_small_sizes():
    spec = reader_writer(True)
    for n in range(2, 5):
        v = check(spec, n, LocalDeadlock(), Fairness("strong", True), engine="explicit")
        assert v.result == Result.NO_DEADLOCK


def test_single_self_loop_is_not_fair_for_two():
    g = Graph(size=1, src=np.array([0]), dst=np.array([0]), mover=np.array([1], dtype=np.int8),
              enabled=np.array([6], dtype=np.uint64), occupied=np.zeros(1, np.uint64))
    assert fair_lasso_search(g, Acceptance("uncond", False, (1, 2))) is None
    assert fair_lasso_search(g, Acceptance("uncond", False, (1,))) == [(0, 1)]


def test_toy_never_returns_to_all_init():
    # the last process leaving y needs company in y, so all-in-i only holds initially
    spec = toy_disjunctive()
    for fairness in (NONFAIR, Fairness("uncond")):
        assert not check(spec, 3, RepeatTarget("i"), fairness).found
    assert check(spec, 3, Target("i")).found


def test_repeat_init_fair():
    spec = reader_writer()
    v = check(spec, 3, RepeatTarget("init"), Fairness("uncond"))
    assert v.found
    w = v.witness
    assert validate_run(spec, 3, w)
    assert any(set(c.state.bs) == {"init"} for c in w.loop)
    assert run_is_fair(spec, w, Fairness("uncond"))


def test_toy_global_deadlock_only_for_small_sizes():
    spec = toy_disjunctive()
    assert check(spec, 2, GlobalDeadlock()).result == Result.DEADLOCK
    for n in (3, 4, 5):
        assert check(spec, n, GlobalDeadlock()).result == Result.NO_DEADLOCK


def test_single_process_counter_graph_is_explicit_graph():
    spec = reader_writer()
    assert len(StateSpace(spec, 1, 0).explore()) == len(StateSpace(spec, 1, 1).explore())


@pytest.mark.parametrize("seed", range(20))
def test_counter_reachability_projects_explicit(seed):
    spec = random_spec(seed, ("disjunctive", "conjunctive")[seed % 2], states=4, with_a=seed % 3 == 0)
    for n in (1, 2, 3):
        reach = explicit_reachable(spec, n)
        assert len(StateSpace(spec, n, n).explore()) == len(reach)
        assert len(StateSpace(spec, n, 0).explore()) == len({to_counter(spec, s, 0) for s in reach})


def test_quadratic_counter_state_count_is_small():
    space = StateSpace(quadratic(4, 2), 9, 1).explore()
    assert len(space) < 9 ** 9 / 1000


def test_budget_raises_resource_limit():
    with pytest.raises(ResourceLimit):
        check(quadratic(4, 2), 9, LocalDeadlock(), max_states=50)


def test_uncond_local_deadlock_is_rejected():
    with pytest.raises(QueryError):
        check(reader_writer(), 3, LocalDeadlock(), Fairness("uncond"))


def test_unknown_target_is_rejected():
    with pytest.raises(QueryError):
        check(reader_writer(), 3, Target("nowhere"))


def test_properties():
    spec = reader_writer()
    assert check(spec, 3, Property("A G !(B1.w & B2.w)", 2)).ok
    assert not check(spec, 3, Property("A G !(B1.r & B2.r)", 2)).ok
    assert check(spec, 2, Property("E F B1.w", 1)).found


def test_property_violation_witness_validates():
    spec = reader_writer()
    v = check(spec, 3, Property("A G !(B1.r & B2.r)", 2))
    assert v.witness is not None and validate_run(spec, 3, v.witness)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["disjunctive", "conjunctive"]), st.integers(1, 3),
       st.sampled_from(["gd", "ld", "ld-strong", "target", "repeat"]))
def test_witnesses_validate(seed, kind, n, q):
    spec = random_spec(seed, kind, states=4, with_a=seed % 2 == 0)
    query, fairness = {
        "gd": (GlobalDeadlock(), NONFAIR),
        "ld": (LocalDeadlock(), NONFAIR),
        "ld-strong": (LocalDeadlock(), STRONG),
        "target": (Target("init"), NONFAIR),
        "repeat": (RepeatTarget(spec.B.states[-1]), NONFAIR),
    }[q]
    v = check(spec, n, query, fairness)
    if v.witness is not None:
        assert validate_run(spec, n, v.witness)
        if q == "ld-strong":
            assert run_is_fair(spec, v.witness, STRONG, exclude=(1,))
        if q == "gd":
            assert v.witness.finite


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_fair_runs_are_fair(seed, n):
    spec = random_spec(seed, "disjunctive", states=4)
    run = fair_run(spec, n, Fairness("uncond"))
    if run is not None:
        assert validate_run(spec, n, run)
        assert run_is_fair(spec, run, Fairness("uncond"))

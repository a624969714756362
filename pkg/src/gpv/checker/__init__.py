"""Model checking of finite instances (A, B)^(1,n)."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from ..model import (
    NONFAIR,
    Fairness,
    GlobalDeadlock,
    LocalDeadlock,
    Property,
    RepeatTarget,
    RunRep,
    System,
    Target,
    enabled_processes,
)
from .concretize import ConcretizationError, to_run
from .fair import STUTTER, Acceptance, Graph, find_fair_loop
from .props import Atom, Formula, evaluate, monitor_for, parse_formula, search_target
from .space import ResourceLimit, StateSpace

__all__ = [
    "Acceptance", "EngineError", "Formula", "QueryError", "ResourceLimit", "Result",
    "StateSpace", "Verdict", "check", "counter_reachability", "fair_lasso_search",
    "fair_run", "parse_formula", "run_is_fair",
]


class Result(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    DEADLOCK = "DeadlockFound"
    NO_DEADLOCK = "NoDeadlock"
    REACHABLE = "TargetReachable"
    UNREACHABLE = "TargetUnreachable"


GOOD = {Result.HOLDS, Result.NO_DEADLOCK, Result.REACHABLE}


class EngineError(ValueError):
    """The requested engine cannot decide the query."""


class QueryError(ValueError):
    """The query is malformed or contradictory."""


@dataclass
class Verdict:
    result: Result
    witness: Optional[RunRep] = None
    stats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        """True when the searched-for run exists (deadlock, counterexample, target)."""
        if self.stats.get("existential", False):
            return self.result == Result.HOLDS
        return self.result in (Result.DEADLOCK, Result.VIOLATED, Result.REACHABLE)

    @property
    def ok(self) -> bool:
        return self.result in GOOD


def counter_reachability(spec: System, n: int, distinguished: int, max_states=None, max_secs=None):
    """Explore the counter abstraction with ``distinguished`` tracked B-processes."""
    return StateSpace(spec, n, distinguished).explore(max_states, max_secs)


# ---------------------------------------------------------------- helpers


def _fair_graph(space: StateSpace, src, dst, mover, trans) -> Graph:
    rows = space.rows
    occupied = np.zeros(len(space), dtype=np.uint64)
    for code in space.classes():
        j = code - space.cnt0
        occupied |= (rows[:, space.cnt0 + j] > 0).astype(np.uint64) << np.uint64(code)
    at_init = {}
    for p in space.parties():
        if p == 0:
            at_init[p] = rows[:, 0] == space.c.a_init
        else:
            at_init[p] = rows[:, p] == space.c.b_init - space.na
    tdst = np.array([t[1] for t in space.trans] or [0], dtype=np.int64) - space.na
    return Graph(
        size=len(space), src=src, dst=dst, mover=mover,
        enabled=space.enabled_bits(rows), occupied=occupied, at_init=at_init,
        edge_dst_state=tdst[trans.astype(np.int64)] if len(trans) else np.zeros(0, np.int64),
        class_base=space.cnt0, init_state=space.c.b_init - space.na,
    )


def _acceptance(space, fairness: Fairness, exclude=(), buchi=None) -> Acceptance:
    if not fairness.fair:
        return Acceptance(buchi=buchi or [])
    parties = tuple(p for p in space.parties() if p not in exclude)
    return Acceptance(fairness.kind, fairness.initializing, parties, tuple(space.classes()), buchi or [])


def fair_lasso_search(graph: Graph, acceptance: Acceptance, alive=None):
    """Loop ``[(node, mover), ...]`` meeting the acceptance, or None."""
    if alive is None:
        alive = np.ones(graph.size, dtype=bool)
    return find_fair_loop(graph, acceptance, alive)


def run_is_fair(spec: System, run: RunRep, fairness: Fairness, exclude=()) -> bool:
    """Check the fairness conditions literally on the loop of an explicit run."""
    if not fairness.fair:
        return True
    if run.finite:
        return False
    procs = [p for p in range(run.n + 1) if p not in exclude and not (p == 0 and spec.A.inert)]
    movers = {c.mover for c in run.loop}
    if fairness.kind == "uncond":
        if any(p not in movers for p in procs):
            return False
    else:
        for c in run.loop:
            en = enabled_processes(spec, c.state, c.inputs or None)
            if any(p in en and p not in movers for p in procs):
                return False
    if fairness.initializing:
        for p in procs:
            if p not in movers:
                continue
            init = spec.A.init if p == 0 else spec.B.init
            if not any(c.state.local(p) == init for c in run.loop):
                return False
    return True


def _engine_space(spec, n, engine, k_needed):
    if engine == "auto":
        engine = "counter" if spec.closed else "explicit"
    if engine == "counter":
        if not spec.closed:
            raise EngineError("the counter engine handles closed systems only")
        return StateSpace(spec, n, min(k_needed, n)), "counter"
    if engine == "explicit":
        return StateSpace(spec, n, n), "explicit"
    raise EngineError(f"unknown engine {engine!r}")


def _product(space, base_src, base_dst, base_mov, base_tr, monitor, P, Q):
    """Product of the explored graph with a monitor; node id = base * M + m."""
    M = monitor.states
    N = len(space)
    src, dst, mov, tr = [], [], [], []
    for a, b, cond in monitor.trans:
        if a < 0:
            continue
        ok = cond(P[base_dst], Q[base_dst])
        src.append(base_src[ok] * M + a)
        dst.append(base_dst[ok] * M + b)
        mov.append(base_mov[ok])
        tr.append(base_tr[ok])
    roots = []
    for r in space.roots:
        for a, b, cond in monitor.trans:
            if a < 0 and cond(P[r:r + 1], Q[r:r + 1])[0]:
                roots.append(int(r) * M + b)
    src = np.concatenate(src) if src else np.zeros(0, np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, np.int64)
    mov = np.concatenate(mov) if mov else np.zeros(0, np.int8)
    tr = np.concatenate(tr) if tr else np.zeros(0, np.int16)
    return N * M, src, dst, mov, tr, sorted(set(roots))


def _bfs_tree(size, src, dst, roots):
    """Reachable mask and predecessor array from a virtual root."""
    V = size
    s = np.concatenate([src, np.full(len(roots), V)])
    d = np.concatenate([dst, np.array(roots, dtype=np.int64)])
    mat = csr_matrix((np.ones(len(s), dtype=np.int8), (s, d)), shape=(V + 1, V + 1))
    order, pred = breadth_first_order(mat, V, directed=True, return_predecessors=True)
    reach = np.zeros(V + 1, dtype=bool)
    reach[order] = True
    return reach[:V], pred, mat


def _path(pred, src, dst, mov, target, virtual):
    order = np.argsort(src, kind="stable")
    s_sorted = src[order]
    chain = []
    v = target
    while pred[v] != virtual and pred[v] >= 0:
        u = int(pred[v])
        lo, hi = np.searchsorted(s_sorted, [u, u + 1])
        cand = order[lo:hi]
        e = cand[dst[cand] == v][0]
        chain.append((u, int(mov[e])))
        v = u
    chain.reverse()
    return chain


# ---------------------------------------------------------------- check


def check(
    spec: System,
    n: int,
    query,
    fairness: Fairness = NONFAIR,
    engine: str = "auto",
    max_states: int = None,
    max_secs: float = None,
) -> Verdict:
    """Decide ``query`` on (A, B)^(1,n)."""
    if n < 1:
        raise QueryError("n must be at least 1")
    t0 = time.monotonic()
    if isinstance(query, Property):
        f = query.formula
        if isinstance(f, str):
            f = parse_formula(f)
        k = max(query.k, f.index_count)
        if n < k:
            raise QueryError(f"property needs {k} B-processes but n = {n}")
        req = f.index_count
    elif isinstance(query, LocalDeadlock):
        if query.proc not in ("A", "B"):
            raise QueryError("local deadlock process must be A or B")
        if fairness.kind == "uncond":
            raise QueryError("unconditional fairness forces the deadlocked process to move")
        if query.state is not None:
            tpl = spec.A if query.proc == "A" else spec.B
            if query.state not in tpl.states:
                raise QueryError(f"unknown state {query.state!r}")
        req = 1 if query.proc == "B" else 0
    elif isinstance(query, (Target, RepeatTarget)):
        if query.state not in spec.B.states:
            raise QueryError(f"{query.state!r} is not a B-state")
        req = 0
    elif isinstance(query, GlobalDeadlock):
        req = 0
    else:
        raise QueryError(f"unsupported query {query!r}")

    space, used = _engine_space(spec, n, engine, req)
    try:
        verdict = _decide(space, query, fairness, max_states, max_secs)
    except ConcretizationError as err:
        if used == "explicit":
            raise
        space = StateSpace(spec, n, n)
        used = "explicit"
        verdict = _decide(space, query, fairness, max_states, max_secs)
        verdict.notes.append(f"counter witness fell back to the explicit engine: {err}")
    verdict.stats.update(engine=used, n=n, seconds=round(time.monotonic() - t0, 3))
    return verdict


def _decide(space: StateSpace, query, fairness: Fairness, max_states=None, max_secs=None) -> Verdict:
    if space.rows is None:
        space.explore(max_states, max_secs)
    stats = {"states": len(space), "distinguished": space.k}
    rows = space.rows

    if isinstance(query, GlobalDeadlock) or (isinstance(query, Target) and not fairness.fair):
        if isinstance(query, GlobalDeadlock):
            hit = space.stuck(rows)
            if fairness.fair:
                # fair runs are infinite, so none of them is globally deadlocked
                hit[:] = False
        else:
            hit = space.all_b_in(rows, space.c.index[query.state])
        idx = np.nonzero(hit)[0]
        if not len(idx):
            res = Result.NO_DEADLOCK if isinstance(query, GlobalDeadlock) else Result.UNREACHABLE
            return Verdict(res, None, stats)
        v = int(idx[0])
        stem = space.path_to(v)
        if isinstance(query, GlobalDeadlock):
            return Verdict(Result.DEADLOCK, to_run(space, stem, [], v), stats)
        return Verdict(Result.REACHABLE, _complete(space, stem, v), stats)

    if isinstance(query, LocalDeadlock):
        mover = 1 if query.proc == "B" else 0
        F = space.disabled(rows, mover)
        if query.state is not None:
            q = space.c.index[query.state]
            F &= space.local_of(rows, mover) == q
        ids = np.nonzero(F)[0]
        src, dst, mov, tr = space.edges(ids)
        keep = F[dst]
        g = _fair_graph(space, src[keep], dst[keep], mov[keep], tr[keep])
        acc = _acceptance(space, fairness, exclude=(mover,))
        loop = find_fair_loop(g, acc, F)
        if loop is None:
            return Verdict(Result.NO_DEADLOCK, None, stats)
        run = _lasso_run(space, space.path_to(loop[0][0]), loop, fairness, exclude=(mover,))
        return Verdict(Result.DEADLOCK, run, stats)

    # Buchi-style queries on a product with a monitor
    if isinstance(query, Property):
        f = query.formula if not isinstance(query.formula, str) else parse_formula(query.formula)
        template, p, q, existential = search_target(f)
    elif isinstance(query, Target):
        template, p, q, existential = "F", Atom("ALLB", 0, query.state), None, True
    else:
        template, p, q, existential = "GF", Atom("ALLB", 0, query.state), None, True
    stats["existential"] = existential
    mon = monitor_for(template)
    P = evaluate(p, space, rows)
    Q = evaluate(q, space, rows) if q is not None else np.zeros(len(rows), dtype=bool)
    src, dst, mov, tr = space.edges()
    if not fairness.fair:
        # finite maximal runs are read as stuttering forever in their last state
        stuck = np.nonzero(space.stuck(rows))[0]
        src = np.concatenate([src, stuck])
        dst = np.concatenate([dst, stuck])
        mov = np.concatenate([mov, np.full(len(stuck), STUTTER, np.int8)])
        tr = np.concatenate([tr, np.zeros(len(stuck), np.int16)])
    size, psrc, pdst, pmov, ptr, proots = _product(space, src, dst, mov, tr, mon, P, Q)
    M = mon.states
    reach, pred, _ = _bfs_tree(size, psrc, pdst, proots)
    base = _fair_graph(space, src, dst, mov, tr)
    g = Graph(
        size=size, src=psrc, dst=pdst, mover=pmov,
        enabled=np.repeat(base.enabled, M), occupied=np.repeat(base.occupied, M),
        at_init={k: np.repeat(v, M) for k, v in base.at_init.items()},
        edge_dst_state=(np.array([t[1] for t in space.trans] or [0], dtype=np.int64) - space.na)[ptr.astype(np.int64)],
        class_base=base.class_base, init_state=base.init_state,
    )
    accept = np.zeros(size, dtype=bool)
    for m in mon.accepting:
        accept[m::M] = True
    acc = _acceptance(space, fairness, buchi=[accept & reach])
    loop = find_fair_loop(g, acc, reach)
    if loop is None:
        return Verdict(Result.VIOLATED if existential else Result.HOLDS, None, stats)
    stem = _path(pred, psrc, pdst, pmov, loop[0][0], size)
    stem_b = [(v // M, m) for v, m in stem]
    loop_b = [(v // M, m) for v, m in loop]
    if all(m == STUTTER for _, m in loop_b):
        run = to_run(space, stem_b, [], loop_b[0][0])
    else:
        run = _lasso_run(space, stem_b, loop_b, fairness)
    return Verdict(Result.HOLDS if existential else Result.VIOLATED, run, stats)


def fair_run(
    spec: System,
    n: int,
    fairness: Fairness = NONFAIR,
    deadlocked: int = None,
    engine: str = "auto",
    max_states: int = None,
) -> Optional[RunRep]:
    """Some infinite run meeting ``fairness`` for every process but ``deadlocked``.

    When ``deadlocked`` is given (0 for A, 1 for B_1) that process is disabled
    at every loop configuration.  Unlike :func:`check`, unconditional fairness
    on the remaining processes is allowed here.  Returns None if no such run.
    """
    k = 0 if deadlocked in (None, 0) else 1
    space, used = _engine_space(spec, n, engine, k)
    for attempt in ("first", "explicit"):
        space.explore(max_states)
        rows = space.rows
        alive = np.ones(len(space), dtype=bool) if deadlocked is None else space.disabled(rows, deadlocked)
        ids = np.nonzero(alive)[0]
        src, dst, mov, tr = space.edges(ids)
        keep = alive[dst]
        g = _fair_graph(space, src[keep], dst[keep], mov[keep], tr[keep])
        exclude = () if deadlocked is None else (deadlocked,)
        loop = find_fair_loop(g, _acceptance(space, fairness, exclude=exclude), alive)
        if loop is None:
            return None
        try:
            return _lasso_run(space, space.path_to(loop[0][0]), loop, fairness, exclude)
        except ConcretizationError:
            if used == "explicit":
                raise
            space, used = StateSpace(spec, n, n), "explicit"
    return None


def _lasso_run(space, stem, loop, fairness, exclude=()):
    run = to_run(space, stem, loop)
    if fairness.fair and space.k < space.n and not run_is_fair(space.spec, run, fairness, exclude):
        raise ConcretizationError("unrolled counter loop is not fair for every process")
    return run


def _complete(space, stem, v):
    """Extend a path ending in node v to a maximal run by a greedy walk."""
    seen = {}
    path = list(stem)
    cur = v
    walk = []
    while cur not in seen:
        seen[cur] = len(walk)
        src, dst, mov, _ = space.edges(np.array([cur]))
        if not len(src):
            return to_run(space, path + walk, [], cur)
        walk.append((cur, int(mov[0])))
        cur = int(dst[0])
    first = seen[cur]
    return to_run(space, path + walk[:first], walk[first:])

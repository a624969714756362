"""Fair accepting cycle search over explored graphs.

The search repeatedly decomposes the live subgraph into SCCs and prunes nodes
or edges that cannot lie on a loop meeting the acceptance conditions, until
what remains is stable (Emerson-Lei style refinement).  A loop is then
assembled inside one surviving component.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

STUTTER = -1


@dataclass
class Acceptance:
    """What an accepting loop must satisfy.

    ``parties`` are mover codes of individual processes, ``classes`` mover codes
    of anonymous state classes (counter engine).  ``buchi`` holds boolean node
    masks; the loop must visit every one of them.
    """

    fairness: str = "none"
    initializing: bool = False
    parties: tuple = ()
    classes: tuple = ()
    buchi: list = field(default_factory=list)


@dataclass
class Graph:
    """Edge-list graph over nodes ``0..size-1`` plus per-node fairness data.

    ``enabled`` and ``occupied`` are uint64 bitmasks over mover codes;
    ``at_init[p]`` is a boolean mask per party; ``edge_dst_state`` is the
    B-local destination of each edge (used for anonymous flows).
    """

    size: int
    src: np.ndarray
    dst: np.ndarray
    mover: np.ndarray
    enabled: np.ndarray = None
    occupied: np.ndarray = None
    at_init: dict = field(default_factory=dict)
    edge_dst_state: np.ndarray = None
    class_base: int = 0
    init_state: int = 0


def _bit(m) -> np.uint64:
    return np.uint64(1) << np.uint64(m)


def _edge_bits(mover: np.ndarray) -> np.ndarray:
    m = mover.astype(np.int64)
    out = np.zeros(len(m), dtype=np.uint64)
    ok = m >= 0
    out[ok] = np.left_shift(np.uint64(1), m[ok].astype(np.uint64))
    return out


def _or_reduce(labels: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.uint64)
    np.bitwise_or.at(out, labels, values)
    return out


def fair_components(g: Graph, acc: Acceptance, alive: np.ndarray):
    """Refine until stable. Returns ``(labels, node_ok, edge_ok)`` or None.

    ``node_ok`` marks nodes of surviving components and ``edge_ok`` the usable
    internal edges; every surviving component admits an accepting loop.
    """
    alive = alive.copy()
    edge_ok = alive[g.src] & alive[g.dst]
    ebits = _edge_bits(g.mover)
    watched = np.uint64(0)
    for p in tuple(acc.parties) + tuple(acc.classes):
        watched |= _bit(p)
    party_bits = np.uint64(0)
    for p in acc.parties:
        party_bits |= _bit(p)
    while True:
        es, ed = g.src[edge_ok], g.dst[edge_ok]
        mat = csr_matrix((np.ones(len(es), dtype=np.int8), (es, ed)), shape=(g.size, g.size))
        ncomp, lab = connected_components(mat, directed=True, connection="strong")
        internal = edge_ok & (lab[g.src] == lab[g.dst])
        has_edge = np.zeros(ncomp, dtype=bool)
        has_edge[lab[g.src[internal]]] = True
        node_ok = alive & has_edge[lab]
        changed = False
        kill = np.zeros(g.size, dtype=bool)
        moves = _or_reduce(lab[g.src[internal]], ebits[internal], ncomp)
        for b in acc.buchi:
            hit = np.zeros(ncomp, dtype=bool)
            hit[lab[b & node_ok]] = True
            kill |= node_ok & ~hit[lab]
        if acc.fairness in ("uncond", "strong"):
            if acc.fairness == "uncond":
                # every party must move; an occupied class must have an out-move
                need = party_bits & ~moves
                kill |= node_ok & (need[lab] != 0)
                if acc.classes:
                    cls = np.uint64(0)
                    for p in acc.classes:
                        cls |= _bit(p)
                    bad = g.occupied & cls & ~moves[lab]
                    kill |= node_ok & (bad != 0)
            else:
                bad = g.enabled & watched & ~moves[lab]
                kill |= node_ok & (bad != 0)
        if acc.initializing:
            drop = np.zeros(len(g.src), dtype=bool)
            for p in acc.parties:
                visits = np.zeros(ncomp, dtype=bool)
                visits[lab[node_ok & g.at_init[p]]] = True
                drop |= internal & (g.mover == p) & ~visits[lab[g.src]]
            if acc.classes:
                drop |= internal & _flow_drop(g, lab, internal)
            if drop.any():
                edge_ok &= ~drop
                changed = True
        kill &= alive
        if kill.any():
            alive &= ~kill
            edge_ok &= alive[g.src] & alive[g.dst]
            changed = True
        if not changed:
            if not node_ok.any():
                return None
            return lab, node_ok, internal
        # edges leaving their component can never be on a loop
        edge_ok &= lab[g.src] == lab[g.dst]


def _flow_drop(g: Graph, lab: np.ndarray, internal: np.ndarray) -> np.ndarray:
    """Anonymous edges whose local flow cannot return to init within the component."""
    anon = internal & (g.mover >= g.class_base)
    idx = np.nonzero(anon)[0]
    drop = np.zeros(len(g.src), dtype=bool)
    if not len(idx):
        return drop
    comp = lab[g.src[idx]]
    j = g.mover[idx].astype(np.int64) - g.class_base
    d = g.edge_dst_state[idx].astype(np.int64)
    nb = int(max(j.max(), d.max(), g.init_state)) + 1
    code = (comp.astype(np.int64) * nb + j) * nb + d
    uniq, inv = np.unique(code, return_inverse=True)
    good_code = np.zeros(len(uniq), dtype=bool)
    ucomp = uniq // (nb * nb)
    bounds = np.nonzero(np.diff(ucomp))[0] + 1
    for seg in np.split(np.arange(len(uniq)), bounds):
        pairs = [(int(uniq[i] // nb % nb), int(uniq[i] % nb)) for i in seg]
        core = _init_scc(pairs, g.init_state)
        for i, (a, b) in zip(seg, pairs):
            good_code[i] = a in core and b in core
    drop[idx] = ~good_code[inv]
    return drop


def _init_scc(pairs, init) -> set:
    fwd, bwd = {}, {}
    for a, b in pairs:
        fwd.setdefault(a, set()).add(b)
        bwd.setdefault(b, set()).add(a)
    return _reach(fwd, init) & _reach(bwd, init)


def _reach(adj, s) -> set:
    seen = {s}
    todo = [s]
    while todo:
        v = todo.pop()
        for w in adj.get(v, ()):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


class _Local:
    """Adjacency of one component for loop assembly."""

    def __init__(self, g: Graph, nodes: np.ndarray, edges: np.ndarray):
        self.nodes = nodes
        order = np.argsort(g.src[edges], kind="stable")
        e = edges[order]
        srcs = g.src[e]
        self.adj = {}
        bounds = np.searchsorted(srcs, nodes)
        ends = np.searchsorted(srcs, nodes, side="right")
        dst = g.dst[e].tolist()
        mov = g.mover[e].tolist()
        dstate = g.edge_dst_state[e].tolist() if g.edge_dst_state is not None else [0] * len(e)
        for v, lo, hi in zip(nodes.tolist(), bounds.tolist(), ends.tolist()):
            self.adj[v] = [(mov[i], dst[i], dstate[i]) for i in range(lo, hi)]


def build_loop(g: Graph, acc: Acceptance, nodes: np.ndarray, edges: np.ndarray) -> list:
    """Assemble ``[(node, mover), ...]`` inside one surviving component."""
    loc = _Local(g, nodes, edges)
    start = int(nodes.min())
    steps: list = []
    state = {"cur": start, "movers": 0}
    visited = {start}
    buchi = [np.nonzero(b[nodes])[0] for b in acc.buchi]
    buchi = [set(nodes[ix].tolist()) for ix in buchi]
    enabled = {}
    occupied = {}

    def en(v):
        if v not in enabled:
            enabled[v] = int(g.enabled[v]) if g.enabled is not None else 0
        return enabled[v]

    def occ(v):
        if v not in occupied:
            occupied[v] = int(g.occupied[v]) if g.occupied is not None else 0
        return occupied[v]

    def walk(goal):
        # goal(v) -> None | "node" | (mover, w, dstate) to stop at v or take that edge
        cur = state["cur"]
        prev = {cur: None}
        q = deque([cur])
        found = None
        first = True
        while q:
            v = q.popleft()
            r = goal(v, first)
            first = False
            if r is not None:
                found = (v, r)
                break
            for m, w, _ in loc.adj[v]:
                if w not in prev:
                    prev[w] = (v, m)
                    q.append(w)
        if found is None:
            raise AssertionError("loop assembly left its component")
        v, r = found
        seq = []
        x = v
        while prev[x] is not None:
            u, m = prev[x]
            seq.append((u, m))
            x = u
        seq.reverse()
        for u, m in seq:
            _record(u, m)
        state["cur"] = v
        visited.add(v)
        if r != "node":
            m, w, _ = r
            _record(v, m, r)
            state["cur"] = w
            visited.add(w)

    def _record(u, m, edge=None):
        steps.append((u, m))
        visited.add(u)
        if m >= 0:
            state["movers"] |= 1 << m

    def edge_goal(mover):
        def goal(v, first):
            for e in loc.adj[v]:
                if e[0] == mover:
                    return e
            return None
        return goal

    def node_goal(pred):
        def goal(v, first):
            if not first and pred(v):
                return "node"
            return None
        return goal

    watched = 0
    for p in tuple(acc.parties) + tuple(acc.classes):
        watched |= 1 << p
    cls_bits = 0
    for p in acc.classes:
        cls_bits |= 1 << p
    party_bits = 0
    for p in acc.parties:
        party_bits |= 1 << p

    changed = True
    rounds = 0
    while changed:
        rounds += 1
        if rounds > 10000:
            raise AssertionError("loop assembly does not converge")
        changed = False
        for b in buchi:
            if visited.isdisjoint(b):
                walk(node_goal(b.__contains__))
                changed = True
        need = 0
        if acc.fairness == "uncond":
            need = party_bits & ~state["movers"]
            for v in list(visited):
                need |= occ(v) & cls_bits & ~state["movers"]
        elif acc.fairness == "strong":
            for v in list(visited):
                need |= en(v) & watched & ~state["movers"]
        m = 0
        while need:
            if need & 1:
                walk(edge_goal(m))
                changed = True
            need >>= 1
            m += 1
        if acc.initializing:
            for p in acc.parties:
                if state["movers"] >> p & 1 and not any(g.at_init[p][v] for v in visited):
                    walk(node_goal(lambda v, p=p: bool(g.at_init[p][v])))
                    changed = True
    if not steps:
        e = loc.adj[start][0]
        _record(start, e[0], e)
        state["cur"] = e[1]
    if state["cur"] != start:
        walk(node_goal(lambda v: v == start))
    return steps


def find_fair_loop(g: Graph, acc: Acceptance, alive: np.ndarray, prefer: np.ndarray = None):
    """Return a loop ``[(node, mover), ...]`` meeting ``acc`` or None."""
    res = fair_components(g, acc, alive)
    if res is None:
        return None
    lab, node_ok, internal = res
    cand = np.nonzero(node_ok)[0]
    if prefer is not None:
        good = cand[prefer[cand]]
        if len(good):
            cand = good
    pick = lab[cand.min()]
    nodes = np.nonzero(node_ok & (lab == pick))[0]
    edges = np.nonzero(internal & (lab[g.src] == pick))[0]
    return build_loop(g, acc, nodes, edges)

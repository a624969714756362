"""Structural template analysis consumed by the cutoff formulas."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .model import Guard, Kind, System, Template, Transition

# ---------------------------------------------------------------- guards


@dataclass(frozen=True)
class GuardInfo:
    G_A: frozenset
    G_B: frozenset
    G: frozenset
    b_g: int  # number of B-states mentioned by some guard
    conjuncts: frozenset  # distinct exists-sets (conj-of-disj systems)


def _nontrivial(tpl: Template) -> frozenset:
    return frozenset(t.guard for t in tpl.transitions if not t.guard.trivial and t.guard.states)


def nontrivial_guards(spec: System) -> GuardInfo:
    ga, gb = _nontrivial(spec.A), _nontrivial(spec.B)
    G = ga | gb
    mentioned = frozenset().union(*(g.states for g in G)) if G else frozenset()
    conjuncts = frozenset(s for g in G for s in g.sets) if spec.kind == Kind.CONJDISJ else frozenset()
    return GuardInfo(ga, gb, G, len(mentioned & set(spec.B.states)), conjuncts)


# ---------------------------------------------------------------- enable sets / N*


@dataclass(frozen=True)
class EnableInfo:
    enable: dict  # B-state -> frozenset of states enabling some transition from it
    q_star: frozenset
    m: int
    b_size: int
    always: frozenset = frozenset()  # states with a trivially guarded exit


def _allowed(spec: System, g: Guard) -> frozenset:
    return frozenset(q for q in spec.all_states if g.admits(q))


def enable_sets(spec: System) -> EnableInfo:
    enable = {}
    for q in spec.B.states:
        acc = set()
        for t in spec.B.outgoing(q):
            acc |= _allowed(spec, t.guard)
        enable[q] = frozenset(acc)
    b = spec.B.size
    q_star = frozenset(q for q, e in enable.items() if len(e) < b)
    m = max((len(enable[q]) for q in q_star), default=0)
    always = frozenset(q for q in spec.B.states if any(t.guard.trivial for t in spec.B.outgoing(q)))
    return EnableInfo(enable, q_star, m, b, always)


@dataclass(frozen=True)
class CoreInfo:
    N: tuple
    n_star: tuple  # a maximum independent set (exact) or () for the heuristic
    n_star_size: int
    method: str  # "exact" | "degree-heuristic"
    edges: tuple = ()


def conflict_graph(info: EnableInfo) -> tuple:
    """Self-enabling states and the undirected conflict edges between them."""
    order = list(info.enable)
    # states with a trivially guarded exit never take part in a deadlock
    N = tuple(q for q in order if q in info.enable[q] and q not in info.always)
    edges = tuple(
        (a, b)
        for a, b in itertools.combinations(N, 2)
        if a in info.enable[b] or b in info.enable[a]
    )
    return N, edges


def max_independent_set(nodes, edges) -> tuple:
    """Exact maximum independent set by branch and bound (small graphs)."""
    adj = {v: set() for v in nodes}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    best: list = []

    def grow(chosen, cand):
        nonlocal best
        if len(chosen) + len(cand) <= len(best):
            return
        if not cand:
            best = list(chosen)
            return
        # branch on a highest-degree candidate: take it, or drop it
        v = max(cand, key=lambda x: (len(adj[x] & cand), -nodes.index(x)))
        if not adj[v] & cand:
            grow(chosen + [v], cand - {v})
            return
        grow(chosen + [v], cand - {v} - adj[v])
        grow(chosen, cand - {v})

    nodes = list(nodes)
    grow([], set(nodes))
    return tuple(sorted(best, key=nodes.index))


def degree_bound(nodes, edges) -> int:
    """Upper bound on the independence number from a vertex-cover lower bound.

    Vertices sorted by degree (descending); U is the least count whose degree
    sum reaches |E|, so no cover is smaller than U.
    """
    if not edges:
        return len(nodes)
    deg = {v: 0 for v in nodes}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    total, u = 0, 0
    for d in sorted(deg.values(), reverse=True):
        if total >= len(edges):
            break
        total += d
        u += 1
    return len(nodes) - u


def self_enabling_core(info: EnableInfo, method: str = "exact") -> CoreInfo:
    N, edges = conflict_graph(info)
    if method == "exact":
        mis = max_independent_set(N, edges)
        return CoreInfo(N, mis, len(mis), "exact", edges)
    if method == "degree-heuristic":
        return CoreInfo(N, (), degree_bound(N, edges), "degree-heuristic", edges)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------- deadsets


@dataclass(frozen=True)
class Deadsets:
    sets: tuple  # sorted tuple of sorted tuples
    truncated: bool


def _blockers(spec: System, q: str):
    """Excluded-state sets of the transitions leaving q, or None if q is free."""
    tpl = spec.B if q in spec.B.states else spec.A
    out = []
    for t in tpl.outgoing(q):
        ex = t.guard.excluded_states
        if t.guard.trivial or not ex:
            return None
        out.append(ex)
    return out


def minimal_deadsets(spec: System, q: str, size_cap: int = 6) -> Deadsets:
    """Inclusion-minimal deadsets of q with at most one A-state and at most ``size_cap`` members."""
    if spec.kind != Kind.CONJUNCTIVE:
        raise ValueError("deadsets are defined for conjunctive systems")
    blocks = _blockers(spec, q)
    if blocks is None:
        return Deadsets((), False)
    if not blocks:
        return Deadsets(((),), False)  # no transitions: dead without help
    order = {s: i for i, s in enumerate(spec.A.states + spec.B.states)}
    universe = sorted(frozenset().union(*blocks), key=order.get)
    a_states = set(spec.A.states)
    found: list = []
    limit = min(size_cap, len(blocks), len(universe))
    for k in range(1, limit + 1):
        for combo in itertools.combinations(universe, k):
            s = frozenset(combo)
            if len(s & a_states) > 1:
                continue
            if any(f <= s for f in found):
                continue
            if all(not s.isdisjoint(b) for b in blocks):
                found.append(s)
    truncated = size_cap < min(len(blocks), len(universe))
    sets = sorted((tuple(sorted(s, key=order.get)) for s in found), key=lambda t: (len(t), [order[x] for x in t]))
    return Deadsets(tuple(sets), truncated)


@dataclass(frozen=True)
class DeadsetInfo:
    deadsets: dict  # state -> tuple of deadsets
    truncated: bool
    mode: str
    D1: frozenset
    D2: frozenset
    D3: frozenset
    k1: int
    k2: int
    k3: int


def classify_states(spec: System, mode: str = "guard-membership", size_cap: int = 6) -> DeadsetInfo:
    """Free / non-blocking / not-self-blocking B-states.

    ``mode`` chooses how non-blocking is read: ``deadset`` (appears in no
    deadset of any state) or ``guard-membership`` (excluded by no guard).
    """
    if mode not in ("deadset", "guard-membership"):
        raise ValueError(f"unknown mode {mode!r}")
    dead = {}
    truncated = False
    present = spec.B.states if spec.A.inert else spec.A.states + spec.B.states
    for q in present:
        d = minimal_deadsets(spec, q, size_cap)
        dead[q] = d.sets
        truncated |= d.truncated
    B = spec.B.states
    D1 = frozenset(q for q in B if not dead[q])
    if mode == "deadset":
        blocking = {x for ds in dead.values() for d in ds for x in d}
    else:
        blocking = {x for g in nontrivial_guards(spec).G for x in g.excluded_states}
    D2 = frozenset(q for q in B if q not in blocking)
    D3 = frozenset(q for q in B if all(q not in d for d in dead[q]))
    k1 = len(D1)
    k2 = len(D2 - D1)
    k3 = len(D3 - D1 - D2)
    return DeadsetInfo(dead, truncated, mode, D1, D2, D3, k1, k2, k3)


# ---------------------------------------------------------------- cycles and lassos


@dataclass(frozen=True)
class Cycle:
    transitions: tuple  # consecutive transitions, last returns to the first source

    @property
    def states(self) -> tuple:
        return tuple(t.src for t in self.transitions)

    @property
    def guards(self) -> frozenset:
        return frozenset(t.guard for t in self.transitions if not t.guard.trivial)

    @property
    def free(self) -> bool:
        """Every non-head state is admitted by every guard on the cycle."""
        return all(g.admits(p) for p in self.states[1:] for g in self.guards)

    def rotated(self, q: str) -> "Cycle":
        i = self.states.index(q)
        return Cycle(self.transitions[i:] + self.transitions[:i])


@dataclass(frozen=True)
class Lasso:
    stem: tuple
    cycle: Cycle

    @property
    def states(self) -> tuple:
        return tuple(t.src for t in self.stem) + self.cycle.states

    @property
    def guards(self) -> frozenset:
        return frozenset(t.guard for t in self.stem if not t.guard.trivial) | self.cycle.guards


@dataclass(frozen=True)
class CycleInfo:
    cycles: tuple
    lassos: tuple
    truncated: bool


def _multigraph(tpl: Template, allow=None):
    g = nx.DiGraph()
    g.add_nodes_from(tpl.states)
    par = {}
    for t in tpl.transitions:
        if allow is not None and not allow(t):
            continue
        g.add_edge(t.src, t.dst)
        par.setdefault((t.src, t.dst), []).append(t)
    return g, par


def _expand(path_states, par, closed: bool):
    pairs = list(zip(path_states, path_states[1:]))
    if closed:
        pairs.append((path_states[-1], path_states[0]))
    return itertools.product(*(par[p] for p in pairs))


def simple_cycles(tpl: Template, cap: int = 10000, allow=None) -> tuple:
    """All simple cycles as transition sequences, rotated to start at their least state."""
    g, par = _multigraph(tpl, allow)
    order = {s: i for i, s in enumerate(tpl.states)}
    out = []
    for nodes in nx.simple_cycles(g):
        i = min(range(len(nodes)), key=lambda j: order[nodes[j]])
        nodes = nodes[i:] + nodes[:i]
        for ts in _expand(nodes, par, True):
            out.append(Cycle(tuple(ts)))
            if len(out) >= cap:
                return tuple(sorted(out, key=lambda c: [order[s] for s in c.states])), True
    return tuple(sorted(out, key=lambda c: ([order[s] for s in c.states], str(c.transitions)))), False


def cycle_inventory(tpl: Template, cap: int = 10000) -> CycleInfo:
    cycles, truncated = simple_cycles(tpl, cap)
    g, par = _multigraph(tpl)
    lassos = []
    for c in cycles:
        members = set(c.states)
        for entry in c.states:
            stem_paths = [[entry]] if entry == tpl.init else []
            if entry != tpl.init and tpl.init not in members:
                sub = g.subgraph((set(tpl.states) - members) | {entry})
                if tpl.init in sub:
                    stem_paths = nx.all_simple_paths(sub, tpl.init, entry)
            for path in stem_paths:
                for ts in _expand(list(path), par, False):
                    lassos.append(Lasso(tuple(ts), c.rotated(entry)))
                    if len(lassos) >= cap:
                        return CycleInfo(cycles, tuple(lassos), True)
    return CycleInfo(cycles, tuple(lassos), truncated)


def find_lasso(tpl: Template, allow) -> Optional[Lasso]:
    """A lasso from init using only transitions accepted by ``allow``."""
    g, par = _multigraph(tpl, allow)
    reach = nx.descendants(g, tpl.init) | {tpl.init}
    sub = g.subgraph(reach)
    for nodes in nx.simple_cycles(sub):
        entry = nodes[0]
        path = nx.shortest_path(sub, tpl.init, entry)
        stem = [par[p][0] for p in zip(path, path[1:])]
        cyc = [par[p][0] for p in zip(nodes, nodes[1:] + nodes[:1])]
        return Lasso(tuple(stem), Cycle(tuple(cyc)))
    return None


# ---------------------------------------------------------------- predicates


def _state_guards(tpl: Template, q: str) -> list:
    return [t.guard for t in tpl.outgoing(q) if not t.guard.trivial]


def is_free(spec: System, q: str) -> bool:
    return _blockers(spec, q) is None


@dataclass
class Predicates:
    one_conjunctive: bool
    effectively_one_conjunctive: bool
    freely_traversable: bool
    alternation_free: bool
    evidence: dict = field(default_factory=dict)

    def flags(self) -> dict:
        return {
            "oneConjunctive": self.one_conjunctive,
            "effectivelyOneConjunctive": self.effectively_one_conjunctive,
            "freelyTraversable": self.freely_traversable,
            "alternationFree": self.alternation_free,
        }


def _lasso_text(lo: Optional[Lasso]) -> Optional[list]:
    return None if lo is None else list(lo.states) + [lo.cycle.states[0]]


def template_predicates(spec: System, which: str = "B", cycle_cap: int = 10000) -> Predicates:
    """Conjunctive template predicates of template ``which`` with evidence."""
    if spec.kind != Kind.CONJUNCTIVE:
        raise ValueError("template predicates are defined for conjunctive systems")
    tpl = spec.B if which == "B" else spec.A
    ev: dict = {}
    guards = {q: _state_guards(tpl, q) for q in tpl.states}
    one = {q: all(len(g.excluded_states) == 1 for g in gs) for q, gs in guards.items()}
    free = {q: is_free(spec, q) for q in tpl.states}
    one_conj = all(one.values())
    if not one_conj:
        ev["oneConjunctive"] = {"violating_state": next(q for q in tpl.states if not one[q])}
    eff = all(one[q] or free[q] for q in tpl.states)
    if not eff:
        ev["effectivelyOneConjunctive"] = {"violating_state": next(q for q in tpl.states if not (one[q] or free[q]))}

    # freely traversable: some lasso admits q, every blocker of q's wide guards
    # and every state excluded by q's single-state guards
    ft = True
    lassos = {}
    for q in tpl.states:
        if free[q]:
            continue
        wide = frozenset().union(*[g.excluded_states for g in guards[q] if len(g.excluded_states) > 1])
        narrow = frozenset().union(*[g.excluded_states for g in guards[q] if len(g.excluded_states) == 1])
        need = {q} | wide | narrow
        lo = find_lasso(tpl, lambda t, need=need: all(t.guard.admits(s) for s in need))
        lassos[q] = _lasso_text(lo)
        if lo is None and ft:
            ft = False
            ev["freelyTraversable"] = {"violating_state": q, "must_admit": sorted(need)}
    if ft:
        ev["freelyTraversable"] = {"lassos": lassos}

    # alternation-free, two sufficient conditions
    cycles, _ = simple_cycles(tpl, cycle_cap)
    all_guards = nontrivial_guards(spec).G
    cond1, bad1 = True, None
    for q in tpl.states:
        if free[q]:
            continue
        wide = [g for g in guards[q] if len(g.excluded_states) > 1]
        if not wide:
            continue
        watch = set(guards[q]) | {g for g in all_guards if q in g.excluded_states}
        blockers = sorted(frozenset().union(*[g.excluded_states for g in wide]))
        escaping = [
            qi for qi in blockers
            if not all(c.guards & watch for c in cycles if qi in c.states)
        ]
        if len(escaping) > 1:
            cond1, bad1 = False, {"state": q, "escaping": escaping}
            break
    cond2, bad2 = True, None
    for q in tpl.states:
        if free[q]:
            continue
        singles = {next(iter(g.excluded_states)) for g in guards[q] if len(g.excluded_states) == 1}
        for g in guards[q]:
            if len(g.excluded_states) > 1 and not singles & g.excluded_states:
                cond2, bad2 = False, {"state": q, "guard": str(g)}
                break
        if not cond2:
            break
    af = cond1 or cond2
    ev["alternationFree"] = {"condition1": cond1, "condition2": cond2}
    if not af:
        ev["alternationFree"].update(violation1=bad1, violation2=bad2)
    return Predicates(one_conj, eff, ft, af, ev)


# ---------------------------------------------------------------- segments


@dataclass
class SegmentInfo:
    applicable: bool
    reason: str = ""
    a: Optional[str] = None
    b: Optional[str] = None
    q_l: Optional[str] = None
    counts: dict = field(default_factory=dict)  # cycle label -> (|Sg a-b|, |Sg b-a|)
    n_a: int = 0
    n_b: int = 0


def count_segments(cycle: Cycle, a: str, b: str) -> int:
    """Number of segments Sg_{a-b} on the cycle.

    A segment starts after a cycle transition excluding a and runs over
    transitions admitting b up to a transition excluding b.  Segments sharing
    their exit are counted once (the longest one).
    """
    ts = cycle.transitions
    L = len(ts)
    ends = set()
    for i, t in enumerate(ts):
        if a not in t.guard.excluded_states:
            continue
        for step in range(L):
            j = (i + 1 + step) % L
            if b in ts[j].guard.excluded_states:
                ends.add(j)
                break
    return len(ends)


def segment_analysis(spec: System, a: str = None, b: str = None) -> SegmentInfo:
    """Check the single 2-conjunctive guard structure and count segments."""
    if spec.kind != Kind.CONJUNCTIVE:
        return SegmentInfo(False, "not a conjunctive system")
    tpl = spec.B
    wide = [t for t in tpl.transitions if len(t.guard.excluded_states) > 1]
    others = [t for t in tpl.transitions + spec.A.transitions if len(t.guard.excluded_states) > 2]
    if len(wide) != 1 or others or len(wide[0].guard.excluded_states) != 2:
        return SegmentInfo(False, "needs exactly one 2-conjunctive guard on a single transition")
    w = wide[0]
    pair = sorted(w.guard.excluded_states, key=tpl.states.index)
    if a is None or b is None:
        a, b = pair
    elif {a, b} != set(pair):
        return SegmentInfo(False, f"the 2-conjunctive guard excludes {pair}, not {{{a}, {b}}}")
    if any(len(t.guard.excluded_states) > 1 for t in spec.A.transitions):
        return SegmentInfo(False, "A-template guards must be 1-conjunctive")
    q_l = w.src
    info = SegmentInfo(False, a=a, b=b, q_l=q_l)
    cycles, _ = simple_cycles(tpl)
    ca = [c for c in cycles if a in c.states]
    cb = [c for c in cycles if b in c.states]
    if len(ca) != 1:
        info.reason = "non-unique cycle C_a" if ca else "no cycle C_a"
        return info
    if len(cb) != 1:
        info.reason = "non-unique cycle C_b" if cb else "no cycle C_b"
        return info
    watch = set(_state_guards(tpl, q_l)) | {g for g in nontrivial_guards(spec).G if q_l in g.excluded_states}
    if (ca[0].guards | cb[0].guards) & watch:
        info.reason = "cycle guards intersect the guards of q_l or guards excluding q_l"
        return info
    for label, c in (("C_a", ca[0]), ("C_b", cb[0])):
        info.counts[label] = (count_segments(c, a, b), count_segments(c, b, a))
    info.n_a = max(info.counts["C_a"])
    info.n_b = max(info.counts["C_b"])
    info.applicable = True
    return info


# ---------------------------------------------------------------- bundle


def analyze(spec: System) -> dict:
    """All structural facts relevant to the system kind, as a report section."""
    gi = nontrivial_guards(spec)
    ei = enable_sets(spec)
    out = {
        "kind": spec.kind.value,
        "B_size": spec.B.size,
        "A_size": spec.A.size,
        "guards": {
            "G_A": sorted(str(g) for g in gi.G_A),
            "G_B": sorted(str(g) for g in gi.G_B),
            "G": len(gi.G),
            "G_A_count": len(gi.G_A),
            "G_B_count": len(gi.G_B),
            "B_G": gi.b_g,
        },
        "open": not spec.closed,
    }
    if spec.kind == Kind.CONJDISJ:
        out["guards"]["conjuncts"] = len(gi.conjuncts)
    if spec.kind != Kind.CONJUNCTIVE:
        core = self_enabling_core(ei)
        out["enable"] = {
            "sets": {q: sorted(e) for q, e in ei.enable.items()},
            "Q_star": sorted(ei.q_star, key=spec.B.states.index),
            "m": ei.m,
        }
        out["core"] = {"N": list(core.N), "N_star": list(core.n_star), "N_star_size": core.n_star_size,
                       "method": core.method}
        return out
    out["enable"] = {"sets": {q: sorted(e) for q, e in ei.enable.items()}}
    modes = {}
    for mode in ("deadset", "guard-membership"):
        d = classify_states(spec, mode)
        modes[mode] = {
            "D1": sorted(d.D1), "D2": sorted(d.D2), "D3": sorted(d.D3),
            "k1": d.k1, "k2": d.k2, "k3": d.k3,
        }
    d = classify_states(spec, "deadset")
    out["deadsets"] = {q: [list(s) for s in ds] for q, ds in d.deadsets.items()}
    out["deadsets_truncated"] = d.truncated
    out["classification"] = modes
    preds = template_predicates(spec)
    out["predicates"] = preds.flags()
    out["predicate_evidence"] = preds.evidence
    seg = segment_analysis(spec)
    out["segments"] = {"applicable": seg.applicable, "reason": seg.reason, "n_a": seg.n_a, "n_b": seg.n_b,
                       "counts": {k: list(v) for k, v in seg.counts.items()}}
    inv = cycle_inventory(spec.B)
    out["cycles"] = {
        "count": len(inv.cycles),
        "lassos": len(inv.lassos),
        "truncated": inv.truncated,
        "list": [{"states": list(c.states), "guards": sorted(str(g) for g in c.guards), "free": c.free}
                 for c in inv.cycles[:50]],
    }
    return out

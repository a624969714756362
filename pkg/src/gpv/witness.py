"""Run statistics, flooding and run transfer between system sizes.

A transfer takes a run of (A, B)^(1,n) and assembles a run of a smaller
instance in which every process follows a *plan*: it copies one process of
the source run, waits in its current state, or switches between the two.
Moves that happen in one source step are replayed one process at a time
(stuttering repair), in an order for which every guard holds.

:func:`validate_run` re-implements the semantics directly on the run and is
the oracle for everything the checker and the transfers produce.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .analysis import enable_sets, nontrivial_guards, self_enabling_core
from .model import Configuration, ExplicitState, Fairness, Kind, RunRep, System

CASES = ("A.2", "A.3", "A.4", "A.5", "A.6", "B-nonfair", "B-fair", "C-target", "C-repeat")
HORIZON_LOOPS = 8


class PremiseError(ValueError):
    """The source run or the system does not satisfy a premise of the construction."""

    def __init__(self, premise: str, detail: str = ""):
        super().__init__(f"premise failed: {premise}" + (f" ({detail})" if detail else ""))
        self.premise = premise


class TransferError(RuntimeError):
    """The assembled run is not a valid run with the required outcome."""


# ---------------------------------------------------------------- validation


class Validation(NamedTuple):
    ok: bool
    moment: Optional[int] = None
    reason: str = "ok"

    def __bool__(self) -> bool:
        return self.ok


def _sat(guard, others: Counter) -> bool:
    if guard.kind == "true":
        return True
    if guard.kind == "excluded":
        return all(others[q] == 0 for q in guard.sets[0])
    return all(any(others[q] > 0 for q in s) for s in guard.sets)


def _locals(state: ExplicitState) -> list:
    return [state.a, *state.bs]


def _others(state: ExplicitState, proc: int) -> Counter:
    return Counter(q for i, q in enumerate(_locals(state)) if i != proc)


def _can_fire(spec: System, state: ExplicitState, proc: int, dst=None, sigma=None) -> bool:
    tpl = spec.A if proc == 0 else spec.B
    src = _locals(state)[proc]
    others = _others(state, proc)
    for t in tpl.transitions:
        if t.src != src or (dst is not None and t.dst != dst):
            continue
        if tpl.inputs and t.input is not None and t.input != sigma:
            continue
        if _sat(t.guard, others):
            return True
    return False


def process_enabled(spec: System, conf: Configuration, proc: int) -> bool:
    sigma = conf.inputs[proc] if conf.inputs else None
    return _can_fire(spec, conf.state, proc, sigma=sigma)


def validate_run(spec: System, n: int, run: RunRep) -> Validation:
    """Check ``run`` against the interleaving semantics of (A, B)^(1,n)."""
    if run.n != n:
        return Validation(False, 0, f"run has {run.n} B-processes, expected {n}")
    seq = list(run.configs)
    if not seq:
        return Validation(False, 0, "empty run")
    open_ = not spec.closed
    for m, c in enumerate(seq):
        s = c.state
        if len(s.bs) != n:
            return Validation(False, m, "wrong number of B-processes")
        if s.a not in spec.A.states or any(q not in spec.B.states for q in s.bs):
            return Validation(False, m, "unknown local state")
        if open_:
            if len(c.inputs) != n + 1:
                return Validation(False, m, "input assignment has the wrong length")
            for i, sig in enumerate(c.inputs):
                tpl = spec.A if i == 0 else spec.B
                if tpl.inputs and sig not in tpl.inputs:
                    return Validation(False, m, f"unknown input {sig!r} for process {i}")
        elif c.inputs:
            return Validation(False, m, "inputs given for a closed system")
    first = seq[0].state
    if first.a != spec.A.init or any(q != spec.B.init for q in first.bs):
        return Validation(False, 0, "run does not start in the initial state")

    steps = [(m, seq[m], seq[m + 1], False) for m in range(len(seq) - 1)]
    if run.loop:
        steps.append((len(seq) - 1, seq[-1], run.loop[0], True))
    for m, c, d, closing in steps:
        why = _step_error(spec, n, c, d)
        if why:
            return Validation(False, m, f"loop mismatch: {why}" if closing else why)
    if not run.loop:
        last = seq[-1]
        if last.mover is not None:
            return Validation(False, len(seq) - 1, "finite run ends with a mover")
        for p in range(n + 1):
            if process_enabled(spec, last, p):
                return Validation(False, len(seq) - 1, f"stuck marker while process {p} is enabled")
    return Validation(True)


def _step_error(spec: System, n: int, c: Configuration, d: Configuration) -> str:
    p = c.mover
    if p is None:
        return "stuck marker before the end of the run"
    if not 0 <= p <= n:
        return f"mover {p} out of range"
    before, after = _locals(c.state), _locals(d.state)
    for j in range(n + 1):
        if j != p and before[j] != after[j]:
            return f"process {j} changed without moving"
    if c.inputs:
        for j in range(n + 1):
            if j != p and c.inputs[j] != d.inputs[j]:
                return f"input of process {j} changed without moving"
    sigma = c.inputs[p] if c.inputs else None
    tpl = spec.A if p == 0 else spec.B
    cands = [
        t for t in tpl.transitions
        if t.src == before[p] and t.dst == after[p]
        and (not tpl.inputs or t.input is None or t.input == sigma)
    ]
    if not cands:
        return f"no transition {before[p]} -> {after[p]} for process {p}"
    if not any(_sat(t.guard, _others(c.state, p)) for t in cands):
        return "guard unsatisfied"
    return ""


# ---------------------------------------------------------------- statistics


@dataclass
class RunStats:
    """Occupancy facts of a run, restricted to the B-processes ``procs``.

    Moments index ``stem + loop``; moments past the end repeat the loop.  A
    finite run is read as stuttering forever in its last configuration.
    """

    procs: tuple
    sets: list  # occupied B-states per moment
    appears: dict  # q -> sorted moments (first pass over stem + loop)
    visited_inf: frozenset
    visited_fin: frozenset
    f: dict
    first: dict
    l: dict  # noqa: E741
    last: dict
    counts: list  # Counter of B-states per moment

    def occurs(self, m: int, q: str) -> int:
        return self.counts[m][q]

    def finite(self, q: str) -> bool:
        return q in self.visited_fin


def run_statistics(spec: System, run: RunRep, procs=None) -> RunStats:
    check = validate_run(spec, run.n, run)
    if not check:
        raise ValueError(f"invalid run at moment {check.moment}: {check.reason}")
    procs = tuple(range(1, run.n + 1)) if procs is None else tuple(procs)
    seq = run.configs
    counts = [Counter(c.state.bs[j - 1] for j in procs) for c in seq]
    sets = [frozenset(k for k, v in cnt.items() if v) for cnt in counts]
    tail = run.loop if run.loop else seq[-1:]
    start = len(run.stem) if run.loop else len(seq) - 1
    inf = frozenset().union(*sets[start:]) if tail else frozenset()
    appears: dict = {}
    for m, s in enumerate(sets):
        for q in s:
            appears.setdefault(q, []).append(m)
    f, first, l, last = {}, {}, {}, {}
    for q, ms in appears.items():
        f[q] = ms[0]
        first[q] = min(j for j in procs if seq[ms[0]].state.bs[j - 1] == q)
        if q not in inf:
            l[q] = ms[-1]
            last[q] = min(j for j in procs if seq[ms[-1]].state.bs[j - 1] == q)
    fin = frozenset(appears) - inf
    return RunStats(procs, sets, appears, inf, fin, f, first, l, last, counts)


class Representative(NamedTuple):
    proc: int
    state: str
    f: int


def representatives(spec: System, run: RunRep, guards, infinite_only: bool = False, procs=None, skip=()) -> dict:
    """Per guard, the member state that appears first and the process reaching it.

    Members in ``skip`` are passed over; a guard left without an appearing
    member maps to None.
    """
    st = run_statistics(spec, run, procs)
    out = {}
    for g in guards:
        cands = [
            q for q in sorted(g.states)
            if q in st.f and q not in skip and (not infinite_only or q in st.visited_inf)
        ]
        if not cands:
            out[g] = None
            continue
        q = min(cands, key=lambda s: (st.f[s], s))
        out[g] = Representative(st.first[q], q, st.f[q])
    return out


# ---------------------------------------------------------------- plans


@dataclass
class Plan:
    """Local behaviour over source moments.

    ``segments`` is a list of ``(start, proc)``: from moment ``start`` on the
    process copies source process ``proc``, or stays put when ``proc`` is None.
    """

    segments: list
    label: str = ""
    init: Optional[str] = None

    def bind(self, x: RunRep, horizon: int) -> tuple:
        """Local states at moments 0..horizon and whether the process moves in each step."""
        segs = {}
        for start, proc in sorted(self.segments, key=lambda s: s[0]):
            segs[start] = proc
        starts = sorted(segs)
        k = 0
        proc = segs[starts[0]] if starts[0] == 0 else None
        cur = self.init if proc is None else x.at(0).state.local(proc)
        if cur is None:
            raise TransferError(f"plan {self.label!r} has no initial state")
        states, moved = [cur], []
        for t in range(horizon):
            while k + 1 < len(starts) and starts[k + 1] <= t:
                k += 1
            proc = segs[starts[k]] if starts[k] <= t else None
            if proc is None:
                moved.append(False)
            else:
                if x.at(t).state.local(proc) != cur:
                    raise TransferError(f"plan {self.label!r} cannot follow process {proc} from {cur} at moment {t}")
                moved.append(x.at(t).mover == proc)
                cur = x.at(t + 1).state.local(proc)
            states.append(cur)
        return states, moved


def copy_plan(proc: int, label: str = "") -> Plan:
    return Plan([(0, proc)], label or f"copy {proc}")


def stay_plan(state: str, label: str = "") -> Plan:
    return Plan([(0, None)], label or f"stay {state}", init=state)


def flood(spec: System, run: RunRep, q: str, evacuate: bool = False, procs=None, stats: RunStats = None) -> Plan:
    """Follow the first process to reach q, then stay in q.

    With ``evacuate`` the process stays only until q's last occurrence and
    then follows the process that leaves it last.
    """
    st = stats or run_statistics(spec, run, procs)
    if q not in st.f:
        raise PremiseError("flooded state appears in the run", q)
    segs = [(0, st.first[q]), (st.f[q], None)]
    if evacuate:
        if q in st.visited_inf:
            raise PremiseError("evacuation needs a state that appears finitely often", q)
        segs.append((st.l[q], st.last[q]))
    return Plan(segs, f"flood {q}" + (" with evacuation" if evacuate else ""), init=spec.B.init)


def _arrivals(x: RunRep, proc: int, q: str, after: int, horizon: int) -> list:
    return [
        t + 1 for t in range(after, horizon)
        if x.at(t).mover == proc and x.at(t + 1).state.local(proc) == q
    ]


def turn_taking(x: RunRep, proc: int, q: str, start: int, horizon: int) -> tuple:
    """Segment tails for two processes sharing q from moment ``start`` on.

    The first copies ``proc`` while the other waits in q; the roles switch
    whenever ``proc`` arrives in q, so q is never left empty.
    """
    a, b = [(start, proc)], [(start, None)]
    for i, t in enumerate(_arrivals(x, proc, q, start, horizon)):
        if i % 2 == 0:
            a.append((t, None))
            b.append((t, proc))
        else:
            a.append((t, proc))
            b.append((t, None))
    return a, b


# ---------------------------------------------------------------- assembly


def _serialize(spec: System, cur: ExplicitState, moves: list):
    """Order simultaneous moves so each is enabled when taken; None if impossible."""
    if not moves:
        return []
    for i, (p, dst) in enumerate(moves):
        if _can_fire(spec, cur, p, dst):
            nxt = cur.replace(p, dst)
            rest = _serialize(spec, nxt, moves[:i] + moves[i + 1:])
            if rest is not None:
                return [(p, cur)] + rest
    return None


def assemble(spec: System, x: RunRep, plans: list, loop_window=None, idle=None) -> RunRep:
    """Replay ``plans`` (index 0 is A) over the source run ``x``.

    If no plan moves inside the loop and ``idle`` is given, the run is
    continued from the loop start by :func:`continue_run` with ``idle`` as
    its keyword arguments.
    """
    S, L = len(x.stem), len(x.loop)
    horizon = len(x.configs) - 1 if x.finite else S + HORIZON_LOOPS * L
    if loop_window is not None:
        horizon = loop_window[1]
    bound = [p.bind(x, horizon) for p in plans]
    def ystate(t):
        return ExplicitState(bound[0][0][t], tuple(b[0][t] for b in bound[1:]))

    cur = ystate(0)
    configs, marks = [], [0]
    for t in range(horizon):
        moves = []
        for i, (states, moved) in enumerate(bound):
            if moved[t]:
                moves.append((i, states[t + 1]))
            elif states[t + 1] != states[t]:
                raise TransferError(f"plan {plans[i].label!r} changes state without moving at {t}")
        order = _serialize(spec, cur, moves)
        if order is None:
            raise TransferError(f"no order of the moves at source moment {t} keeps every guard satisfied")
        for i, (p, before) in enumerate(order):
            configs.append(Configuration(before, (), p))
        cur = ystate(t + 1)
        marks.append(len(configs))
    n = len(plans) - 1
    if x.finite:
        return RunRep(n, tuple(configs) + (Configuration(cur, (), None),))
    if loop_window is None:
        loop_window = _find_period(bound, ystate, S, L)
    ta, tb = loop_window
    if ystate(ta) != ystate(tb):
        raise TransferError("assembled run does not return to its loop start")
    if marks[ta] == marks[tb]:
        if idle is None:
            raise TransferError("no process of the assembled run moves inside the loop")
        return continue_run(spec, RunRep(n, tuple(configs[:marks[ta]]) + (Configuration(ystate(ta), (), None),)), **idle)
    return RunRep(n, tuple(configs[:marks[ta]]), tuple(configs[marks[ta]:marks[tb]]))


def _find_period(bound, ystate, S, L):
    R = HORIZON_LOOPS
    def window(t):
        return tuple((b[0][t], b[1][t]) for b in bound)

    for end in range(1, R + 1):
        for p in range(1, end + 1):
            r0 = end - p
            if r0 + 2 * p > R:
                continue
            a, b = S + r0 * L, S + end * L
            if ystate(a) != ystate(b):
                continue
            if all(window(t) == window(t + p * L) for t in range(a, b)):
                return a, b
    raise TransferError("assembled run did not become periodic within the horizon")


# ---------------------------------------------------------------- cases


def transfer_size(spec: System, case: str) -> int:
    g = nontrivial_guards(spec)
    b = spec.B.size
    if case == "A.2":
        return len(g.G) + 1
    if case in ("A.3", "A.5"):
        return b + len(g.G) + 1
    if case == "A.4":
        return enable_sets(spec).m + len(g.G) + 1
    if case == "A.6":
        return b + self_enabling_core(enable_sets(spec)).n_star_size
    if case == "B-nonfair":
        return len(g.G_B) + 2
    if case == "B-fair":
        return 2 * len(g.G_B) + 1
    if case in ("C-target", "C-repeat"):
        return b
    raise ValueError(f"unknown transfer case {case!r}; choose from {', '.join(CASES)}")


def _deadlocked_in_loop(spec: System, run: RunRep, proc: int = 1) -> bool:
    return not run.finite and all(not process_enabled(spec, c, proc) for c in run.loop)


def _loop_movers(run: RunRep) -> set:
    return {c.mover for c in run.loop}


def _all_in(run_configs, q) -> list:
    return [m for m, c in enumerate(run_configs) if all(s == q for s in c.state.bs)]


def _premises(spec: System, run: RunRep, case: str, size: int, target) -> None:
    want = Kind.CONJUNCTIVE if case.startswith("B") else Kind.DISJUNCTIVE
    if spec.kind != want:
        raise PremiseError(f"{want.value} system", spec.kind.value)
    if not spec.closed:
        raise PremiseError("closed system", "transfers do not carry inputs")
    check = validate_run(spec, run.n, run)
    if not check:
        raise PremiseError("valid source run", f"moment {check.moment}: {check.reason}")
    if run.n < size:
        raise PremiseError("source size at least the target size", f"{run.n} < {size}")
    if case == "A.6":
        if not run.finite:
            raise PremiseError("globally deadlocked source run")
        return
    if case == "C-target":
        if not _all_in(run.configs, target):
            raise PremiseError(f"source run reaches all processes in {target}")
        return
    if case == "C-repeat" and run.finite:
        # a stuck run repeats its last configuration forever
        if not _all_in(run.configs[-1:], target):
            raise PremiseError(f"stuck source run ending with all processes in {target}")
        return
    if run.finite:
        raise PremiseError("infinite source run")
    if case == "C-repeat" and not _all_in(run.loop, target):
        raise PremiseError(f"loop configuration with all processes in {target}")
    if case == "A.3":
        from .checker import run_is_fair

        if not run_is_fair(spec, run, Fairness("uncond")):
            raise PremiseError("unconditionally fair source run")
    if case in ("A.4", "A.5", "B-nonfair", "B-fair"):
        if not _deadlocked_in_loop(spec, run):
            raise PremiseError("B_1 disabled at every loop configuration")
        if len({c.state.bs[0] for c in run.loop}) != 1:
            raise PremiseError("B_1 parked in one state")
    if case in ("A.5", "B-fair"):
        movers = _loop_movers(run)
        idle = [p for p in range(run.n + 1) if p != 1 and p not in movers and not (p == 0 and spec.A.inert)]
        if idle:
            raise PremiseError("every process other than B_1 moves infinitely often", f"idle: {idle}")


def _pads(run: RunRep, used: set, count: int, prefer_loop: bool = True) -> list:
    """Copies of source processes not used by any plan, loop movers first."""
    movers = _loop_movers(run)
    free = [j for j in range(2, run.n + 1) if j not in used]
    free.sort(key=lambda j: (prefer_loop and j not in movers, j))
    if len(free) < count:
        raise TransferError("not enough unused source processes to fill the target size")
    return [copy_plan(j, f"copy {j} (padding)") for j in free[:count]]


def _plans_ltl(spec: System, x: RunRep, size: int, fair: bool) -> list:
    F = tuple(range(2, x.n + 1))
    st = run_statistics(spec, x, F)
    guards = sorted(nontrivial_guards(spec).G)
    plans = [copy_plan(0, "copy A"), copy_plan(1, "copy B_1")]
    used = {1}
    if not fair:
        for g in guards:
            rep = representatives(spec, x, [g], procs=F)[g]
            if rep is not None:
                plans.append(flood(spec, x, rep.state, stats=st))
                used.add(rep.proc)
    else:
        horizon = len(x.stem) + HORIZON_LOOPS * len(x.loop)
        for q in sorted(st.visited_fin):
            plans.append(flood(spec, x, q, evacuate=True, stats=st))
            used |= {st.first[q], st.last[q]}
        reps = representatives(spec, x, guards, infinite_only=True, procs=F)
        movers = _loop_movers(x)
        for q in sorted({r.state for r in reps.values() if r is not None}):
            cyclers = sorted(
                {j for c in x.loop for j in F if c.state.bs[j - 1] == q},
                key=lambda j: (j not in movers, j in used, j),
            )
            c = cyclers[0]
            start = next(t for t in range(st.f[q], horizon + 1) if x.at(t).state.local(c) == q)
            head = [(0, st.first[q]), (st.f[q], None)]
            ta, tb = turn_taking(x, c, q, start, horizon)
            plans.append(Plan(head + ta, f"pair {q} (first)", init=spec.B.init))
            plans.append(Plan(head + tb, f"pair {q} (second)", init=spec.B.init))
            used |= {c, st.first[q]}
    if len(plans) - 1 > size:
        raise TransferError(f"construction needs {len(plans) - 1} B-processes, more than {size}")
    return plans + _pads(x, used, size - (len(plans) - 1))


def _plans_ld_nonfair(spec: System, x: RunRep, size: int) -> list:
    F = tuple(range(2, x.n + 1))
    st = run_statistics(spec, x, F)
    ql = x.loop[0].state.bs[0]
    E = enable_sets(spec).enable[ql]
    plans = [copy_plan(0, "copy A"), copy_plan(1, "copy B_1")]
    used = {1}
    for q in sorted(E & set(st.f)):
        if q in st.visited_inf:
            raise PremiseError("states enabling B_1 appear only before the deadlock", q)
        plans.append(flood(spec, x, q, evacuate=True, stats=st))
        used |= {st.first[q], st.last[q]}
    guards = sorted(nontrivial_guards(spec).G)
    for g, rep in representatives(spec, x, guards, procs=F, skip=E).items():
        if rep is not None:
            plans.append(flood(spec, x, rep.state, stats=st))
            used.add(rep.proc)
    if len(plans) - 1 > size:
        raise TransferError(f"construction needs {len(plans) - 1} B-processes, more than {size}")
    return plans + _pads(x, used, size - (len(plans) - 1))


def _plans_gd(spec: System, x: RunRep, size: int) -> list:
    final = x.configs[-1].state
    N = set(self_enabling_core(enable_sets(spec)).N)
    C = [j for j in range(1, x.n + 1) if final.bs[j - 1] in N]
    F = tuple(j for j in range(1, x.n + 1) if j not in C)
    st = run_statistics(spec, x, F)
    plans = [copy_plan(0, "copy A")] + [copy_plan(j, f"copy {j} (deadlocked)") for j in C]
    for q in sorted(st.visited_inf):
        plans.append(flood(spec, x, q, stats=st))
    for q in sorted(st.visited_fin):
        plans.append(flood(spec, x, q, evacuate=True, stats=st))
    if len(plans) - 1 > size:
        raise TransferError(f"construction needs {len(plans) - 1} B-processes, more than {size}")
    pad = [copy_plan(j, f"copy {j} (padding)") for j in F][: size - (len(plans) - 1)]
    if len(plans) - 1 + len(pad) < size:
        raise TransferError("not enough unused source processes to fill the target size")
    return plans + pad


def _gather(x: RunRep, q: str, lo: int, hi: int, start_state: str, spec: System) -> list:
    """Flood every state seen in (lo, hi] and evacuate it to q by moment hi.

    Returns one plan tail per state, each beginning at moment lo.
    """
    seen = {}
    for t in range(lo, hi + 1):
        for j, s in enumerate(x.at(t).state.bs, start=1):
            if t > lo or s == start_state:
                seen.setdefault(s, [t, j, t, j])
                rec = seen[s]
                rec[2], rec[3] = t, j
    tails = []
    for s in sorted(seen):
        f, first, l, last = seen[s]
        segs = [(lo, first), (f, None)]
        if l < hi:
            segs.append((l, last))
        tails.append((s, segs))
    return tails


def _plans_target(spec: System, x: RunRep, q: str, size: int, repeat: bool):
    seq = x.configs
    if repeat and x.finite:
        repeat = False
        t1 = len(seq) - 1
    elif repeat:
        S = len(x.stem)
        t1 = S + _all_in(x.loop, q)[0]
        t2 = t1 + len(x.loop)
    else:
        t1 = _all_in(seq, q)[0]
    phase1 = _gather(x, q, 0, t1, spec.B.init, spec)
    if len(phase1) > size:
        raise TransferError(f"construction needs {len(phase1)} B-processes, more than {size}")
    heads = [segs for _, segs in phase1] + [[(0, j)] for j in range(1, size - len(phase1) + 1)]
    if not repeat:
        plans = [copy_plan(0, "copy A")] + [Plan(h + [(t1, None)], "gather", init=spec.B.init) for h in heads]
        return plans, None
    phase2 = _gather(x, q, t1, t2, q, spec)
    if len(phase2) > size:
        raise TransferError(f"loop construction needs {len(phase2)} B-processes, more than {size}")
    tails = [segs for _, segs in phase2] + [[(t1, j)] for j in range(1, size - len(phase2) + 1)]
    plans = [copy_plan(0, "copy A")]
    for h, tl in zip(heads, tails):
        plans.append(Plan(h + tl + [(t2, None)], "gather and cycle", init=spec.B.init))
    return plans, (t1, t2)


def _blockers(spec: System, x: RunRep) -> list:
    """States that stay occupied by processes other than B_1 and block every exit of B_1."""
    ql = x.loop[0].state.bs[0]
    perm = None
    for c in x.loop:
        occ = {c.state.a} | set(c.state.bs[1:])
        perm = occ if perm is None else perm & occ
    chosen = []
    for t in spec.B.outgoing(ql):
        cands = sorted(t.guard.excluded_states & perm)
        if t.guard.trivial or not cands:
            raise PremiseError("a permanently occupied blocker for every exit of B_1", f"{t.src}->{t.dst}")
        if not set(cands) & set(chosen):
            chosen.append(cands[0])
    return [e for e in chosen if e in spec.B.states]


def _plans_conj(spec: System, x: RunRep, size: int, fair: bool) -> list:
    """Attempts for the conjunctive constructions, most economical first."""
    S = len(x.stem)
    D = _blockers(spec, x)
    others = range(2, x.n + 1)
    movers = _loop_movers(x)
    occupant = {e: [j for j in others if x.at(S).state.local(j) == e] for e in D}
    attempts = []
    if not fair:
        a_moves = 0 in movers and not spec.A.inert
        mover_choices = ([None] if a_moves else []) + sorted(j for j in movers if j not in (None, 0, 1))
        for p in mover_choices:
            used = {1} | ({p} if p else set())
            plans = [copy_plan(0, "copy A"), copy_plan(1, "copy B_1")]
            for e in D:
                c = min(occupant[e], key=lambda j: (j in used, j))
                used.add(c)
                plans.append(Plan([(0, c), (S, None)], f"park in {e}"))
            if p:
                plans.append(copy_plan(p, "copy a moving process"))
            if len(plans) - 1 <= size:
                plans += [stay_plan(spec.B.init, "wait in init")] * (size - (len(plans) - 1))
                attempts.append(plans)
        return attempts
    horizon = S + HORIZON_LOOPS * len(x.loop)
    cyclers = {e: sorted({j for c in x.loop for j in others if c.state.local(j) == e}) for e in D}
    for shift in range(max((len(v) for v in cyclers.values()), default=1)):
        used = {1}
        plans = [copy_plan(0, "copy A"), copy_plan(1, "copy B_1")]
        for e in D:
            pool = sorted(cyclers[e], key=lambda j: (j in used, j))
            o = pool[shift % len(pool)]
            used.add(o)
            start = next(t for t in range(S, horizon + 1) if x.at(t).state.local(o) == e)
            c = min(occupant[e], key=lambda j: (j in used, j))
            used.add(c)
            ta, tb = turn_taking(x, o, e, start, horizon)
            plans.append(Plan([(0, o)] + ta, f"share {e} (first)"))
            plans.append(Plan([(0, c), (S, None)] + tb, f"share {e} (second)"))
        if len(plans) - 1 <= size:
            try:
                attempts.append(plans + _pads(x, used, size - (len(plans) - 1)))
            except TransferError:
                pass
    return attempts


def _observable(spec: System, x: RunRep, y: RunRep, case: str, target) -> str:
    """Empty string when ``y`` shows the outcome the case must preserve."""
    from .checker import run_is_fair

    if case in ("A.2", "A.3"):
        for p in (0, 1):
            if local_word(x, p) != local_word(y, p):
                return f"projection of process {p} differs"
        if case == "A.3" and not run_is_fair(spec, y, Fairness("uncond")):
            return "transferred run is not unconditionally fair"
    elif case in ("A.4", "A.5", "B-nonfair", "B-fair"):
        if not _deadlocked_in_loop(spec, y):
            return "B_1 is enabled in the loop of the transferred run"
        if case in ("A.5", "B-fair") and not run_is_fair(spec, y, Fairness("strong")):
            return "transferred run is not strongly fair"
    elif case == "A.6":
        if not y.finite:
            return "transferred run is infinite"
    elif case == "C-target":
        if not _all_in(y.configs, target):
            return f"transferred run never has all processes in {target}"
    elif case == "C-repeat":
        if not _all_in(y.loop or y.configs[-1:], target):
            return f"loop of the transferred run never has all processes in {target}"
    return ""


def local_word(run: RunRep, proc: int, limit: int = None) -> tuple:
    """Local states of ``proc`` with repetitions removed, and whether it keeps changing.

    The word is cut after ``limit`` changes (by default enough to cover the
    stem and two passes through the loop of any run of similar length).
    """
    seq = run.configs
    moves_in_loop = any(c.state.local(proc) != d.state.local(proc)
                        for c, d in zip(run.loop, run.loop[1:] + run.loop[:1])) if run.loop else False
    limit = limit or 64
    word = [seq[0].state.local(proc)]
    end = len(seq) if not moves_in_loop else None
    t = 1
    while len(word) < limit and (end is None or t < end):
        q = run.at(t).state.local(proc)
        if q != word[-1]:
            word.append(q)
        t += 1
    return tuple(word), moves_in_loop


def continue_run(spec: System, y: RunRep, frozen=(), disabled=None, max_states: int = 200000) -> RunRep:
    """Extend the finite prefix ``y`` without moving the processes in ``frozen``.

    The continuation ends in a stuck configuration or in a loop; with
    ``disabled`` set only loops in which that process is never enabled count.
    """
    import networkx as nx
    from .model import successors

    root = y.configs[-1].state
    graph = nx.DiGraph()
    graph.add_node(root)
    parent = {root: None}
    frontier = [root]
    stuck = None
    while frontier and stuck is None:
        nxt = []
        for u in frontier:
            succ = successors(spec, u)
            if not succ and disabled is None:
                stuck = u
                break
            for p, v, _ in succ:
                if p in frozen:
                    continue
                if not graph.has_edge(u, v):
                    graph.add_edge(u, v, mover=p)
                if v not in parent:
                    parent[v] = (u, p)
                    nxt.append(v)
        if len(parent) > max_states:
            raise TransferError("continuation search exceeded its state budget")
        frontier = nxt

    def path_to(v):
        out = []
        while parent[v] is not None:
            u, p = parent[v]
            out.append(Configuration(u, (), p))
            v = u
        return out[::-1]

    prefix = list(y.configs[:-1])
    if stuck is not None:
        return RunRep(y.n, tuple(prefix + path_to(stuck)) + (Configuration(stuck, (), None),))
    keep = [v for v in graph if disabled is None or not _can_fire(spec, v, disabled)]
    sub = graph.subgraph(keep)
    best = None
    for comp in nx.strongly_connected_components(sub):
        if len(comp) == 1:
            v = next(iter(comp))
            if not sub.has_edge(v, v):
                continue
        v = min(comp, key=lambda s: (len(path_to(s)), s))
        if best is None or len(path_to(v)) < len(path_to(best[0])):
            best = (v, comp)
    if best is None:
        raise TransferError("no continuation keeps the run infinite")
    v, comp = best
    inner = sub.subgraph(comp)
    if inner.has_edge(v, v):
        cycle = [v, v]
    else:
        back = min((u for u in inner.predecessors(v)), key=lambda u: nx.shortest_path_length(inner, v, u))
        cycle = nx.shortest_path(inner, v, back) + [v]
    loop = [Configuration(a, (), inner.edges[a, b]["mover"]) for a, b in zip(cycle, cycle[1:])]
    return RunRep(y.n, tuple(prefix + path_to(v)), tuple(loop))


def _complete(spec: System, y: RunRep) -> RunRep:
    """Extend a finite prefix to a maximal run by always taking the first successor."""
    from .model import successors

    configs = list(y.configs[:-1])
    cur = y.configs[-1].state
    seen = {}
    walk = []
    while cur not in seen:
        seen[cur] = len(walk)
        nxt = successors(spec, cur)
        if not nxt:
            return RunRep(y.n, tuple(configs + walk) + (Configuration(cur, (), None),))
        p, s, _ = nxt[0]
        walk.append(Configuration(cur, (), p))
        cur = s
    i = seen[cur]
    return RunRep(y.n, tuple(configs + walk[:i]), tuple(walk[i:]))


def transfer_run(spec: System, run: RunRep, case: str, target: str = None) -> RunRep:
    """Transfer ``run`` to the size given by :func:`transfer_size` for ``case``.

    Raises :class:`PremiseError` when the run or system does not fit the
    case and :class:`TransferError` if the assembled run fails validation or
    loses the outcome it has to preserve.
    """
    size = transfer_size(spec, case)
    if case.startswith("C"):
        if target is None:
            pool = run.loop if case == "C-repeat" else run.configs
            hits = [c for c in pool if len(set(c.state.bs)) == 1]
            if not hits:
                raise PremiseError("configuration with all processes in one state")
            target = hits[-1 if case == "C-target" else 0].state.bs[0]
    _premises(spec, run, case, size, target)

    window = None
    if case in ("A.2", "A.3", "A.5"):
        attempts = [_plans_ltl(spec, run, size, fair=case != "A.2")]
    elif case == "A.4":
        attempts = [_plans_ld_nonfair(spec, run, size)]
    elif case == "A.6":
        attempts = [_plans_gd(spec, run, size)]
    elif case in ("C-target", "C-repeat"):
        if case == "C-target":
            # only the prefix up to the first all-in-target moment is replayed
            t1 = _all_in(run.configs, target)[0]
            run = RunRep(run.n, run.configs[:t1] + (run.configs[t1]._replace(mover=None),))
        plans, window = _plans_target(spec, run, target, size, case == "C-repeat")
        attempts = [plans]
    else:
        attempts = _plans_conj(spec, run, size, fair=case == "B-fair")
        if not attempts:
            raise TransferError("construction needs more processes than the target size")
    idle = {"A.2": {"frozen": (0, 1)}, "A.4": {"frozen": (0, 1), "disabled": 1}}.get(case)
    problems = []
    for plans in attempts:
        try:
            y = assemble(spec, run, plans, window, idle)
        except TransferError as err:
            problems.append(str(err))
            continue
        if case == "C-target":
            y = _complete(spec, y)
        check = validate_run(spec, size, y)
        if not check:
            problems.append(f"invalid at moment {check.moment}: {check.reason}")
            continue
        why = _observable(spec, run, y, case, target)
        if why:
            problems.append(why)
            continue
        return y
    raise TransferError("; ".join(dict.fromkeys(problems)))


# ---------------------------------------------------------------- source runs


def source_run(spec: System, case: str, n: int, target: str = None, max_states: int = None):
    """A run of size n that fits ``case``, found with the checker; None if none exists."""
    from .checker import check, fair_run
    from .model import GlobalDeadlock, LocalDeadlock, RepeatTarget, Target, NONFAIR

    if case == "A.2":
        return fair_run(spec, n, NONFAIR, max_states=max_states)
    if case == "A.3":
        return fair_run(spec, n, Fairness("uncond"), max_states=max_states)
    if case in ("A.4", "B-nonfair"):
        return check(spec, n, LocalDeadlock(), max_states=max_states).witness
    if case in ("A.5", "B-fair"):
        return fair_run(spec, n, Fairness("uncond"), deadlocked=1, max_states=max_states)
    if case == "A.6":
        return check(spec, n, GlobalDeadlock(), max_states=max_states).witness
    if case == "C-target":
        return check(spec, n, Target(target), max_states=max_states).witness
    if case == "C-repeat":
        return check(spec, n, RepeatTarget(target), max_states=max_states).witness
    raise ValueError(f"unknown transfer case {case!r}")

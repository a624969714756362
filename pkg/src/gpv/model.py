"""Core types and the operational semantics of guarded systems A || B^n.

Processes are referenced by integers: 0 is the A-process, ``i >= 1`` is B_i.
On counter states the integers ``1..k`` denote the distinguished B-processes,
and anonymous B-processes are referenced by :class:`Anon`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union


class Kind(str, enum.Enum):
    DISJUNCTIVE = "disjunctive"
    CONJUNCTIVE = "conjunctive"
    CONJDISJ = "conjdisj"


class SpecError(ValueError):
    """Malformed system description. ``code`` is a stable diagnostic code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


# ---------------------------------------------------------------------------
# guards


@dataclass(frozen=True, order=True)
class Guard:
    """A transition guard.

    kind is one of ``true``, ``exists`` (disjunctive, one set),
    ``excluded`` (conjunctive, the excluded states) or ``conj``
    (conjunction of disjunctive sets).
    """

    kind: str
    sets: tuple = ()

    @staticmethod
    def true() -> "Guard":
        return Guard("true")

    @staticmethod
    def exists(states: Iterable[str]) -> "Guard":
        return Guard("exists", (frozenset(states),))

    @staticmethod
    def excluded(states: Iterable[str]) -> "Guard":
        return Guard("excluded", (frozenset(states),))

    @staticmethod
    def conj(sets: Iterable[Iterable[str]]) -> "Guard":
        fs = sorted({frozenset(s) for s in sets}, key=lambda s: sorted(s))
        if len(fs) == 1:
            return Guard("exists", (fs[0],))
        return Guard("conj", tuple(fs))

    @property
    def trivial(self) -> bool:
        return self.kind == "true"

    @property
    def states(self) -> frozenset:
        """All states mentioned by the guard."""
        return frozenset().union(*self.sets) if self.sets else frozenset()

    @property
    def excluded_states(self) -> frozenset:
        return self.sets[0] if self.kind == "excluded" else frozenset()

    def holds(self, others: "set | frozenset") -> bool:
        """Evaluate against the set of local states held by the *other* processes."""
        if self.kind == "true":
            return True
        if self.kind == "exists":
            return not self.sets[0].isdisjoint(others)
        if self.kind == "excluded":
            return self.sets[0].isdisjoint(others)
        return all(not s.isdisjoint(others) for s in self.sets)

    def admits(self, state: str) -> bool:
        """Membership ``state in g`` with g read as a set of states.

        For conjunctive guards this is the allowed set; for a conjunction of
        disjunctive sets it is membership in any conjunct.
        """
        if self.kind == "true":
            return True
        if self.kind == "excluded":
            return state not in self.sets[0]
        return state in self.states

    def __str__(self) -> str:
        if self.kind == "true":
            return "true"
        if self.kind == "excluded":
            return " & ".join(f"not {q}" for q in sorted(self.sets[0]))
        parts = ["oneof{" + ",".join(sorted(s)) + "}" for s in self.sets]
        return " & ".join(parts)


@dataclass(frozen=True)
class Transition:
    src: str
    dst: str
    guard: Guard = field(default_factory=Guard.true)
    input: Optional[str] = None

    def fires_on(self, sigma: Optional[str]) -> bool:
        return self.input is None or self.input == sigma


@dataclass(frozen=True)
class Template:
    states: tuple
    init: str
    transitions: tuple = ()
    inputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "inputs", tuple(self.inputs))

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def closed(self) -> bool:
        return not self.inputs

    @property
    def inert(self) -> bool:
        """A template that can never move; it stands for an absent process."""
        return not self.transitions

    def outgoing(self, q: str) -> tuple:
        return tuple(t for t in self.transitions if t.src == q)

    def input_choices(self) -> tuple:
        return self.inputs if self.inputs else (None,)


INERT_A = Template(states=("a0",), init="a0")


@dataclass(frozen=True)
class System:
    kind: Kind
    B: Template
    A: Template = INERT_A

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        check_system(self)

    @property
    def all_states(self) -> frozenset:
        return frozenset(self.A.states) | frozenset(self.B.states)

    @property
    def closed(self) -> bool:
        return self.A.closed and self.B.closed

    def template(self, proc: int) -> Template:
        return self.A if proc == 0 else self.B


def check_system(spec: System) -> None:
    """Raise :class:`SpecError` if a system violates the structural invariants."""
    for name, tpl in (("A", spec.A), ("B", spec.B)):
        if not tpl.states:
            raise SpecError("E014", f"template {name} must declare at least init")
        if len(set(tpl.states)) != len(tpl.states):
            raise SpecError("E012", f"duplicate state in template {name}")
        if tpl.init not in tpl.states:
            raise SpecError("E014", f"init of template {name} is not a declared state")
        for t in tpl.transitions:
            if t.src not in tpl.states or t.dst not in tpl.states:
                raise SpecError("E010", f"transition {t.src}->{t.dst} uses an unknown state")
            if t.input is not None and t.input not in tpl.inputs:
                raise SpecError("E016", f"unknown input {t.input!r} in template {name}")
    shared = set(spec.A.states) & set(spec.B.states)
    if shared:
        raise SpecError("E012", f"states shared between templates: {sorted(shared)}")
    if set(spec.A.inputs) & set(spec.B.inputs):
        raise SpecError("E012", "input alphabets of A and B overlap")
    universe = spec.all_states
    for tpl in (spec.A, spec.B):
        for t in tpl.transitions:
            g = t.guard
            unknown = g.states - universe
            if unknown:
                raise SpecError("E010", f"unknown state in guard: {sorted(unknown)}")
            if any(not s for s in g.sets):
                raise SpecError("E001", "empty state set in guard")
            allowed = {
                Kind.DISJUNCTIVE: {"true", "exists"},
                Kind.CONJUNCTIVE: {"true", "excluded"},
                Kind.CONJDISJ: {"true", "exists", "conj"},
            }[spec.kind]
            if g.kind not in allowed:
                raise SpecError("E013", f"guard '{g}' does not match system kind {spec.kind.value}")
            if g.kind == "excluded" and (spec.A.init in g.sets[0] or spec.B.init in g.sets[0]):
                raise SpecError("E011", f"guard '{g}' excludes an init state (init must be neutral)")


# ---------------------------------------------------------------------------
# states, configurations, runs


class ExplicitState(NamedTuple):
    a: str
    bs: tuple

    @property
    def n(self) -> int:
        return len(self.bs)

    def local(self, proc: int) -> str:
        return self.a if proc == 0 else self.bs[proc - 1]

    def replace(self, proc: int, q: str) -> "ExplicitState":
        if proc == 0:
            return ExplicitState(q, self.bs)
        bs = list(self.bs)
        bs[proc - 1] = q
        return ExplicitState(self.a, tuple(bs))


class CounterState(NamedTuple):
    """``a``, the states of k distinguished B-processes, and occupancy counts of
    the remaining anonymous B-processes (aligned with ``B.states``)."""

    a: str
    dist: tuple
    counts: tuple

    @property
    def n(self) -> int:
        return len(self.dist) + sum(self.counts)


class Anon(NamedTuple):
    """An anonymous B-process currently in ``state``."""

    state: str


GlobalState = Union[ExplicitState, CounterState]
ProcRef = Union[int, Anon]


class Configuration(NamedTuple):
    state: ExplicitState
    inputs: tuple = ()
    mover: Optional[int] = None  # None stands for the stuck symbol


@dataclass(frozen=True)
class RunRep:
    """Ultimately periodic run: ``stem`` followed by ``loop`` repeated forever.

    A run without loop is finite and its last configuration is stuck.
    """

    n: int
    stem: tuple
    loop: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))

    @property
    def finite(self) -> bool:
        return not self.loop

    @property
    def configs(self) -> tuple:
        return self.stem + self.loop

    def at(self, t: int) -> Configuration:
        """Configuration at moment t of the unrolled run."""
        if t < len(self.stem):
            return self.stem[t]
        if not self.loop:
            raise IndexError(t)
        return self.loop[(t - len(self.stem)) % len(self.loop)]


def initial_state(spec: System, n: int) -> ExplicitState:
    return ExplicitState(spec.A.init, (spec.B.init,) * n)


def counter_initial(spec: System, n: int, k: int) -> CounterState:
    counts = [0] * spec.B.size
    counts[spec.B.states.index(spec.B.init)] = n - k
    return CounterState(spec.A.init, (spec.B.init,) * k, tuple(counts))


def to_counter(spec: System, s: ExplicitState, k: int) -> CounterState:
    counts = [0] * spec.B.size
    for q in s.bs[k:]:
        counts[spec.B.states.index(q)] += 1
    return CounterState(s.a, tuple(s.bs[:k]), tuple(counts))


# ---------------------------------------------------------------------------
# queries and fairness


@dataclass(frozen=True)
class GlobalDeadlock:
    pass


@dataclass(frozen=True)
class LocalDeadlock:
    state: Optional[str] = None
    proc: str = "B"  # which template the deadlocked process belongs to


@dataclass(frozen=True)
class Target:
    state: str


@dataclass(frozen=True)
class RepeatTarget:
    state: str


@dataclass(frozen=True)
class Property:
    formula: object  # checker.props.Formula
    k: int = 1


Query = Union[GlobalDeadlock, LocalDeadlock, Target, RepeatTarget, Property]


@dataclass(frozen=True)
class Fairness:
    kind: str = "none"  # none | uncond | strong
    initializing: bool = False

    def __post_init__(self):
        if self.kind not in ("none", "uncond", "strong"):
            raise ValueError(f"unknown fairness {self.kind!r}")
        if self.initializing and self.kind == "none":
            raise ValueError("initializing requires unconditional or strong fairness")

    @property
    def fair(self) -> bool:
        return self.kind != "none"


NONFAIR = Fairness()


# ---------------------------------------------------------------------------
# semantics on named states


def _check_kind(spec: System, guard: Guard) -> None:
    if guard.kind == "conj" and spec.kind != Kind.CONJDISJ:
        raise SpecError("E013", "conjunction of disjunctive guards in a non-conjdisj system")
    if guard.kind == "excluded" and spec.kind != Kind.CONJUNCTIVE:
        raise SpecError("E013", "conjunctive guard in a disjunctive system")
    if guard.kind in ("exists", "conj") and spec.kind == Kind.CONJUNCTIVE:
        raise SpecError("E013", "disjunctive guard in a conjunctive system")


def local_state(spec: System, state: GlobalState, proc: ProcRef) -> str:
    if isinstance(proc, Anon):
        return proc.state
    if proc == 0:
        return state.a
    if isinstance(state, ExplicitState):
        return state.bs[proc - 1]
    return state.dist[proc - 1]


def others_states(spec: System, state: GlobalState, proc: ProcRef) -> set:
    """Set of local states occupied by processes other than ``proc``."""
    if isinstance(state, ExplicitState):
        occ = {q for i, q in enumerate(state.bs, start=1) if i != proc}
        if proc != 0:
            occ.add(state.a)
        return occ
    occ = {q for i, q in enumerate(state.dist, start=1) if i != proc}
    if proc != 0:
        occ.add(state.a)
    own = proc.state if isinstance(proc, Anon) else None
    for q, c in zip(spec.B.states, state.counts):
        # the mover itself does not count towards its own state
        if c - (1 if q == own else 0) > 0:
            occ.add(q)
    return occ


def guard_holds(spec: System, state: GlobalState, mover: ProcRef, guard: Guard) -> bool:
    _check_kind(spec, guard) if not guard.trivial else None
    return guard.holds(others_states(spec, state, mover))


def processes(spec: System, state: GlobalState) -> list:
    """All process references of a state (anonymous ones once per occupied state)."""
    if isinstance(state, ExplicitState):
        return list(range(state.n + 1))
    procs: list = list(range(len(state.dist) + 1))
    procs += [Anon(q) for q, c in zip(spec.B.states, state.counts) if c > 0]
    return procs


def _input_of(inputs: Optional[Sequence], proc: ProcRef):
    if not inputs or isinstance(proc, Anon):
        return None
    return inputs[proc]


def enabled_transitions(spec, state, proc, inputs=None, all_inputs=False) -> list:
    tpl = spec.template(0 if proc == 0 else 1)
    q = local_state(spec, state, proc)
    sigma = _input_of(inputs, proc)
    others = others_states(spec, state, proc)
    return [
        t
        for t in tpl.outgoing(q)
        if (all_inputs or tpl.closed or t.fires_on(sigma)) and t.guard.holds(others)
    ]


def enabled_processes(spec: System, state: GlobalState, inputs=None, all_inputs=False) -> frozenset:
    """Processes with at least one enabled transition.

    With ``all_inputs`` a process counts as enabled if some transition is
    enabled under some input (the variant used by deadlock checks).
    """
    return frozenset(
        p
        for p in processes(spec, state)
        if enabled_transitions(spec, state, p, inputs, all_inputs)
    )


def _move(spec: System, state: GlobalState, proc: ProcRef, dst: str) -> GlobalState:
    if isinstance(state, ExplicitState):
        return state.replace(proc, dst)
    if proc == 0:
        return state._replace(a=dst)
    if isinstance(proc, Anon):
        counts = list(state.counts)
        counts[spec.B.states.index(proc.state)] -= 1
        counts[spec.B.states.index(dst)] += 1
        return state._replace(counts=tuple(counts))
    dist = list(state.dist)
    dist[proc - 1] = dst
    return state._replace(dist=tuple(dist))


def _sort_key(proc: ProcRef):
    return (1, proc.state, 0) if isinstance(proc, Anon) else (0, "", proc)


def successors(spec: System, state: GlobalState, inputs=None) -> list:
    """All interleaving successors as ``(mover, next_state, next_inputs)``.

    Order: process index, then transition order, then fresh input order.
    Anonymous movers come after indexed ones, ordered by B-state order.
    """
    out = []
    procs = processes(spec, state)
    anon_rank = {q: i for i, q in enumerate(spec.B.states)}
    procs.sort(key=lambda p: (1, anon_rank[p.state]) if isinstance(p, Anon) else (0, p))
    for p in procs:
        tpl = spec.template(0 if p == 0 else 1)
        for t in enabled_transitions(spec, state, p, inputs):
            nxt = _move(spec, state, p, t.dst)
            if inputs and not isinstance(p, Anon):
                for sigma in tpl.input_choices():
                    new_inputs = tuple(inputs[:p]) + (sigma,) + tuple(inputs[p + 1:])
                    out.append((p, nxt, new_inputs))
            else:
                out.append((p, nxt, tuple(inputs) if inputs else ()))
    return out


def initial_inputs(spec: System, n: int) -> list:
    """All initial input assignments (a single empty assignment for closed systems)."""
    if spec.closed:
        return [()]
    choices = [spec.A.input_choices()] + [spec.B.input_choices()] * n
    return [tuple(c) for c in itertools.product(*choices)]

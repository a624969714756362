"""The temporal property fragment: syntax, parsing and Buchi monitors.

Supported shapes, each under a path quantifier ``A`` (all runs) or ``E``
(some run)::

    G p      F p      GF p      FG p      G (p -> F q)

``p`` and ``q`` are boolean combinations of atoms ``A.s`` (the A-process is
in state s) and ``B<i>.s`` (the i-th B-process is in state s).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class Atom:
    proc: str  # "A", "B" or "ALLB"
    index: int
    state: str

    def __str__(self):
        if self.proc == "A":
            return f"A.{self.state}"
        if self.proc == "ALLB":
            return f"all.{self.state}"
        return f"B{self.index}.{self.state}"


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not:
    arg: "Expr"

    def __str__(self):
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"{_wrap(self.left)} | {_wrap(self.right)}"


Expr = Union[Atom, Const, Not, And, Or]


def _wrap(e) -> str:
    return f"({e})" if isinstance(e, (And, Or)) else str(e)


TEMPLATES = ("G", "F", "GF", "FG", "RESP")


@dataclass(frozen=True)
class Formula:
    quantifier: str  # "A" or "E"
    template: str  # one of TEMPLATES
    phi: Expr
    psi: Optional[Expr] = None

    def __post_init__(self):
        if self.quantifier not in ("A", "E"):
            raise ValueError("path quantifier must be A or E")
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template}")
        if (self.template == "RESP") != (self.psi is not None):
            raise ValueError("only the response template takes two operands")

    def __str__(self):
        if self.template == "RESP":
            return f"{self.quantifier} G ({self.phi} -> F {self.psi})"
        return f"{self.quantifier} {self.template} {_wrap_t(self.phi)}"

    @property
    def index_count(self) -> int:
        return max([a.index for a in atoms(self.phi)] + [a.index for a in atoms(self.psi)] + [0])


def _wrap_t(e) -> str:
    return f"({e})" if isinstance(e, (And, Or, Not)) else str(e)


def atoms(e) -> list:
    if e is None or isinstance(e, Const):
        return []
    if isinstance(e, Atom):
        return [e]
    if isinstance(e, Not):
        return atoms(e.arg)
    return atoms(e.left) + atoms(e.right)


def implies(p, q) -> Expr:
    return Or(Not(p), q)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(->)|([()!&|])|([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z0-9_]+)?))")


class FormulaError(ValueError):
    pass


def _tokens(text: str) -> list:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaError(f"unexpected character at column {pos + 1}: {text[pos:pos + 10]!r}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, toks):
        self.t = toks
        self.i = 0

    def peek(self):
        return self.t[self.i] if self.i < len(self.t) else None

    def take(self, want=None):
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise FormulaError(f"expected {want or 'more input'}, found {tok!r}")
        self.i += 1
        return tok

    def formula(self) -> Formula:
        q = self.take()
        if q not in ("A", "E"):
            raise FormulaError("formula must start with the path quantifier A or E")
        op = self.take()
        if op in ("G", "F", "GF", "FG"):
            if op == "G" and self._response_ahead():
                self.take("(")
                p = self.expr()
                self.take("->")
                self.take("F")
                r = self.expr()
                self.take(")")
                res = Formula(q, "RESP", p, r)
            else:
                res = Formula(q, op, self.expr())
        else:
            raise FormulaError(f"unknown temporal template {op!r}")
        if self.peek() is not None:
            raise FormulaError(f"trailing input {self.peek()!r}")
        return res

    def _response_ahead(self) -> bool:
        if self.peek() != "(":
            return False
        depth = 0
        for j in range(self.i, len(self.t)):
            tok = self.t[j]
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth == 0:
                    return False
            elif tok == "->" and depth == 1:
                return j + 1 < len(self.t) and self.t[j + 1] == "F"
        return False

    def expr(self):
        left = self.conj()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            e = self.expr()
            if self.peek() == "->":
                self.take()
                e = implies(e, self.expr())
            self.take(")")
            return e
        tok = self.take()
        if tok in ("true", "false"):
            return Const(tok == "true")
        m = re.fullmatch(r"(A|B(\d+)|all)\.([A-Za-z0-9_]+)", tok)
        if not m:
            raise FormulaError(f"bad atom {tok!r}; use A.state or B<i>.state")
        if m.group(1) == "A":
            return Atom("A", 0, m.group(3))
        if m.group(1) == "all":
            return Atom("ALLB", 0, m.group(3))
        i = int(m.group(2))
        if i < 1:
            raise FormulaError("B indices start at 1")
        return Atom("B", i, m.group(3))


def parse_formula(text: str) -> Formula:
    return _Parser(_tokens(text)).formula()


# ---------------------------------------------------------------- monitors


@dataclass(frozen=True)
class Monitor:
    """Buchi automaton reading the label of every configuration.

    ``trans`` lists ``(src, dst, cond)``; src -1 is the pre-initial state and
    cond is a function of the two label arrays (p, q).
    """

    states: int
    trans: tuple
    accepting: frozenset


def _always(p, q):
    return np.ones(len(p), dtype=bool)


def monitor_for(template: str) -> Monitor:
    """Monitor for runs satisfying the template (operands p, q)."""
    P = lambda p, q: p  # noqa: E731
    nP = lambda p, q: ~p  # noqa: E731
    if template == "G":
        return Monitor(1, ((-1, 0, P), (0, 0, P)), frozenset({0}))
    if template == "F":
        return Monitor(2, ((-1, 0, nP), (-1, 1, P), (0, 0, nP), (0, 1, P), (1, 1, _always)), frozenset({1}))
    if template == "GF":
        t = []
        for s in (-1, 0, 1):
            t += [(s, 1, P), (s, 0, nP)]
        return Monitor(2, tuple(t), frozenset({1}))
    if template == "FG":
        return Monitor(2, ((-1, 0, _always), (-1, 1, P), (0, 0, _always), (0, 1, P), (1, 1, P)),
                       frozenset({1}))
    if template == "RESP":
        pend = lambda p, q: p & ~q  # noqa: E731
        npend = lambda p, q: ~(p & ~q)  # noqa: E731
        Q = lambda p, q: q  # noqa: E731
        nQ = lambda p, q: ~q  # noqa: E731
        return Monitor(2, ((-1, 1, pend), (-1, 0, npend), (0, 1, pend), (0, 0, npend),
                           (1, 1, nQ), (1, 0, Q)), frozenset({0}))
    if template == "EVSTAY":  # F (p & G q)
        both = lambda p, q: p & q  # noqa: E731
        Q = lambda p, q: q  # noqa: E731
        return Monitor(2, ((-1, 0, _always), (-1, 1, both), (0, 0, _always), (0, 1, both), (1, 1, Q)),
                       frozenset({1}))
    raise ValueError(template)


def search_target(f: Formula):
    """What a run must satisfy to decide ``f``: ``(template, p, q, wanted)``.

    For ``A h`` the search looks for a run of ``not h`` (a counterexample);
    for ``E h`` for a run of ``h`` (a witness).
    """
    if f.quantifier == "E":
        return f.template, f.phi, f.psi, True
    t, p, q = f.template, f.phi, f.psi
    if t == "G":
        return "F", Not(p), None, False
    if t == "F":
        return "G", Not(p), None, False
    if t == "GF":
        return "FG", Not(p), None, False
    if t == "FG":
        return "GF", Not(p), None, False
    return "EVSTAY", p, Not(q), False


def evaluate(e, space, rows: np.ndarray) -> np.ndarray:
    """Vectorised truth value of a state formula on explored rows."""
    if e is None:
        return np.zeros(len(rows), dtype=bool)
    if isinstance(e, Const):
        return np.full(len(rows), e.value)
    if isinstance(e, Not):
        return ~evaluate(e.arg, space, rows)
    if isinstance(e, And):
        return evaluate(e.left, space, rows) & evaluate(e.right, space, rows)
    if isinstance(e, Or):
        return evaluate(e.left, space, rows) | evaluate(e.right, space, rows)
    q = space.c.index.get(e.state)
    if q is None:
        raise FormulaError(f"unknown state {e.state!r}")
    if e.proc == "A":
        return rows[:, 0] == q
    if q < space.na:
        raise FormulaError(f"{e.state!r} is not a B-state")
    if e.proc == "ALLB":
        return space.all_b_in(rows, q)
    if e.index > space.k:
        raise FormulaError(f"atom {e} needs B{e.index} but only {space.k} processes are tracked")
    return rows[:, e.index] == q - space.na

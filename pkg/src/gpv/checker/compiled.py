"""Integer-coded semantics used by the exploration engines.

Local states are numbered globally (A-states first, then B-states), so the set
of states held by a group of processes is a bitmask.  Guard evaluation results
are memoised per (local state, occupancy mask of the others).
"""

from __future__ import annotations

from ..model import System

TRUE, EXISTS, EXCLUDED, CONJ = 0, 1, 2, 3
_KIND = {"true": TRUE, "exists": EXISTS, "excluded": EXCLUDED, "conj": CONJ}


def occupancy(locs) -> tuple:
    """Return (mask of occupied states, mask of states held at least twice)."""
    occ = dup = 0
    for q in locs:
        b = 1 << q
        if occ & b:
            dup |= b
        else:
            occ |= b
    return occ, dup


class Compiled:
    def __init__(self, spec: System):
        self.spec = spec
        self.names = list(spec.A.states) + list(spec.B.states)
        self.index = {q: i for i, q in enumerate(self.names)}
        self.na = spec.A.size
        self.nb = spec.B.size
        self.a_init = self.index[spec.A.init]
        self.b_init = self.index[spec.B.init]
        self.closed = spec.closed
        self.inputs_a = tuple(spec.A.inputs) or (None,)
        self.inputs_b = tuple(spec.B.inputs) or (None,)
        self.out = [[] for _ in self.names]
        for tpl in (spec.A, spec.B):
            for t in tpl.transitions:
                self.out[self.index[t.src]].append(
                    (self.index[t.dst], _KIND[t.guard.kind], self._masks(t.guard), t.input)
                )
        self.a_inert = spec.A.inert
        self._cache: dict = {}

    def _masks(self, guard) -> tuple:
        return tuple(sum(1 << self.index[q] for q in s) for s in guard.sets)

    def mask(self, states) -> int:
        return sum(1 << self.index[q] for q in states)

    def is_b(self, q: int) -> bool:
        return q >= self.na

    def enabled(self, q: int, others: int) -> tuple:
        """Enabled transitions of a process in q as ``(dst, input)`` pairs."""
        key = (q, others)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = []
        for dst, kind, masks, inp in self.out[q]:
            if kind == TRUE:
                ok = True
            elif kind == EXISTS:
                ok = (others & masks[0]) != 0
            elif kind == EXCLUDED:
                ok = (others & masks[0]) == 0
            else:
                ok = all(others & m for m in masks)
            if ok:
                res.append((dst, inp))
        res = tuple(res)
        self._cache[key] = res
        return res

    @staticmethod
    def others(q: int, occ: int, dup: int) -> int:
        b = 1 << q
        return occ if dup & b else occ & ~b

    def moves(self, q: int, occ: int, dup: int, sigma=None) -> list:
        """Destinations reachable by a process in ``q`` under input ``sigma``.

        ``sigma`` of None means the process is closed or all inputs count.
        """
        ts = self.enabled(q, self.others(q, occ, dup))
        if sigma is None:
            return [d for d, _ in ts]
        return [d for d, i in ts if i is None or i == sigma]

    def input_choices(self, proc: int) -> tuple:
        return self.inputs_a if proc == 0 else self.inputs_b

"""Turn node paths of an explored space into runs over explicit states.

On the counter engine anonymous movers are resolved to concrete processes
with a first-in first-out policy per local state, and the counter loop is
unrolled until the explicit configuration (including the queues) repeats.
"""

from __future__ import annotations

from collections import deque

from ..model import Configuration, ExplicitState, RunRep

MAX_UNROLL = 5000


class ConcretizationError(RuntimeError):
    pass


def _explicit_config(space, row, mover) -> Configuration:
    names = space.c.names
    na = space.na
    a = names[int(row[0])]
    bs = tuple(names[na + int(x)] for x in row[1:1 + space.k])
    ins = ()
    if space.open:
        i0 = space.in0
        ins = (space.sig_a[int(row[i0])],) + tuple(space.sig_b[int(x)] for x in row[i0 + 1:i0 + 1 + space.k])
    return Configuration(ExplicitState(a, bs), ins, mover)


def _dst_local(space, cur, nxt, mover) -> int:
    """B-local (or A global) destination of the move between two rows."""
    if mover == 0:
        return int(nxt[0])
    if mover <= space.k:
        return int(nxt[mover])
    j = mover - space.cnt0
    base = space.cnt0
    for d in range(space.nb):
        delta = int(nxt[base + d]) - int(cur[base + d])
        if delta > 0:
            return d
    return j


def to_run(space, stem: list, loop: list, final: int = None) -> RunRep:
    """Build a run from ``(node, mover)`` steps.

    ``loop`` empty means a finite run ending in ``final`` (a stuck node).
    """
    if space.k == space.n:
        rows = space.rows
        s = tuple(_explicit_config(space, rows[v], m) for v, m in stem)
        if not loop:
            return RunRep(space.n, s + (_explicit_config(space, rows[final], None),))
        lp = tuple(_explicit_config(space, rows[v], m) for v, m in loop)
        return RunRep(space.n, s, lp)
    return _from_counter(space, stem, loop, final)


class _Tokens:
    def __init__(self, space):
        self.space = space
        n, k, na = space.n, space.k, space.na
        binit = space.c.b_init - na
        self.locs = [space.c.a_init] + [binit] * n
        self.queues = [deque() for _ in range(space.nb)]
        self.queues[binit].extend(range(k + 1, n + 1))

    def key(self):
        return tuple(self.locs), tuple(tuple(q) for q in self.queues)

    def config(self, proc):
        names, na = self.space.c.names, self.space.na
        st = ExplicitState(names[self.locs[0]], tuple(names[na + q] for q in self.locs[1:]))
        return Configuration(st, (), proc)

    def step(self, cur, nxt, mover) -> Configuration:
        sp = self.space
        d = _dst_local(sp, cur, nxt, mover)
        if mover == 0:
            proc = 0
        elif mover <= sp.k:
            proc = mover
        else:
            j = mover - sp.cnt0
            proc = self.queues[j].popleft()
            self.queues[d].append(proc)
        conf = self.config(proc)
        self.locs[proc] = d
        return conf


def _from_counter(space, stem, loop, final) -> RunRep:
    rows = space.rows
    tok = _Tokens(space)

    def succ_row(seq, i, after):
        return rows[seq[i + 1][0]] if i + 1 < len(seq) else rows[after]

    out = []
    loop_start = loop[0][0] if loop else final
    for i, (v, m) in enumerate(stem):
        out.append(tok.step(rows[v], succ_row(stem, i, loop_start), m))
    if not loop:
        out.append(tok.config(None))
        return RunRep(space.n, tuple(out))
    seen = {}
    history = []
    for _ in range(MAX_UNROLL):
        key = tok.key()
        if key in seen:
            first = seen[key]
            return RunRep(space.n, tuple(out + history[:first]), tuple(history[first:]))
        seen[key] = len(history)
        for i, (v, m) in enumerate(loop):
            if m < 0:
                raise ConcretizationError("stutter step inside a loop")
            history.append(tok.step(rows[v], succ_row(loop, i, loop[0][0]), m))
    raise ConcretizationError("explicit unrolling of the counter loop did not become periodic")

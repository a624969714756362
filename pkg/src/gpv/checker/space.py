"""Vectorised state-space exploration.

A node is a row of small integers::

    [a, d_1 .. d_k, count_0 .. count_{|B|-1}, (input columns)]

``a`` is the global index of A's state, ``d_i`` the B-local index of the i-th
distinguished B-process and ``count_j`` the number of anonymous B-processes in
B-state j.  With ``k == n`` there are no anonymous processes and the rows are
plain explicit states; that is the explicit engine.  Input columns (open
systems only) hold the current input of A and of each distinguished process.

Mover codes: 0 is A, ``1..k`` the distinguished processes, ``k + 1 + j`` an
anonymous process leaving B-state j.
"""

from __future__ import annotations

import time

import numpy as np

from ..model import System
from .compiled import CONJ, EXCLUDED, EXISTS, TRUE, Compiled


class ResourceLimit(RuntimeError):
    """Exploration exceeded its state or time budget."""

    def __init__(self, message: str, stats: dict = None):
        super().__init__(message)
        self.stats = stats or {}


CHUNK = 1 << 18


class StateSpace:
    def __init__(self, spec: System, n: int, k: int = None):
        k = n if k is None else k
        if not 0 <= k <= n:
            raise ValueError("distinguished count must lie in 0..n")
        c = Compiled(spec)
        self.spec, self.c, self.n, self.k = spec, c, n, k
        self.na, self.nb = c.na, c.nb
        self.nq = c.na + c.nb
        self.open = not spec.closed
        if self.open and k != n:
            raise ValueError("anonymous processes cannot carry inputs; use k = n for open systems")
        if 1 + k + self.nb > 63:
            raise ValueError("too many processes for the mover bitmask")
        self.cnt0 = 1 + k
        self.in0 = 1 + k + self.nb
        self.width = self.in0 + ((1 + k) if self.open else 0)
        self.sig_a = list(spec.A.inputs) or [None]
        self.sig_b = list(spec.B.inputs) or [None]
        rad = [self.na] + [self.nb] * k + [n - k + 1] * self.nb
        if self.open:
            rad += [len(self.sig_a)] + [len(self.sig_b)] * k
        total = 1
        for r in rad:
            total *= r
        if total >= 2 ** 62:
            raise ResourceLimit("state encoding does not fit into 64 bits")
        w = np.ones(len(rad), dtype=np.int64)
        for i in range(len(rad) - 2, -1, -1):
            w[i] = w[i + 1] * rad[i + 1]
        self.weights = w
        self.dtype = np.int8 if max(rad) < 127 else np.int16
        self.trans = []
        sig_index = {s: i for i, s in enumerate(self.sig_a)}
        sig_index.update({s: i for i, s in enumerate(self.sig_b)})
        for tpl in (spec.A, spec.B):
            for t in tpl.transitions:
                sets = [np.array(sorted(c.index[q] for q in s), dtype=np.int64) for s in t.guard.sets]
                self.trans.append(
                    (c.index[t.src], c.index[t.dst], _KIND[t.guard.kind], sets,
                     -1 if t.input is None else sig_index[t.input])
                )
        self.rows = None
        self.keys = None
        self.parent = None
        self.pmover = None
        self.roots = None

    # ------------------------------------------------------------------ rows

    def key(self, rows: np.ndarray) -> np.ndarray:
        return rows.astype(np.int64) @ self.weights

    def root_rows(self) -> np.ndarray:
        base = [self.c.a_init] + [self.c.b_init - self.na] * self.k + [0] * self.nb
        base[self.cnt0 + self.c.b_init - self.na] = self.n - self.k
        if not self.open:
            return np.array([base], dtype=self.dtype)
        import itertools

        out = []
        choices = [range(len(self.sig_a))] + [range(len(self.sig_b))] * self.k
        for e in itertools.product(*choices):
            out.append(base + list(e))
        return np.array(out, dtype=self.dtype)

    def occupancy(self, rows: np.ndarray) -> np.ndarray:
        """Per-row number of processes in every global state."""
        m = len(rows)
        tot = np.zeros((m, self.nq), dtype=np.int16)
        ar = np.arange(m)
        tot[ar, rows[:, 0].astype(np.int64)] += 1
        for i in range(1, self.k + 1):
            tot[ar, self.na + rows[:, i].astype(np.int64)] += 1
        tot[:, self.na:] += rows[:, self.cnt0:self.cnt0 + self.nb]
        return tot

    def _guards(self, rows: np.ndarray) -> list:
        """Boolean guard value per transition (for a mover in its source state)."""
        tot = self.occupancy(rows)
        pos = tot > 0
        cache = {}
        out = []
        for src, _, kind, sets, _ in self.trans:
            if kind == TRUE:
                out.append(np.ones(len(rows), dtype=bool))
                continue
            others = cache.get(src)
            if others is None:
                others = pos.copy()
                others[:, src] = tot[:, src] > 1
                cache[src] = others
            if kind == EXISTS:
                ok = others[:, sets[0]].any(axis=1)
            elif kind == EXCLUDED:
                ok = ~others[:, sets[0]].any(axis=1)
            else:
                ok = np.ones(len(rows), dtype=bool)
                for s in sets:
                    ok &= others[:, s].any(axis=1)
            out.append(ok)
        return out

    def _selectors(self, rows: np.ndarray, any_input: bool = False):
        """Yield ``(t, mover, mask)`` for every transition and every mover class."""
        guards = self._guards(rows)
        for t, (src, dst, kind, sets, sig) in enumerate(self.trans):
            g = guards[t]
            if src < self.na:
                sel = (rows[:, 0] == src) & g
                if sig >= 0 and not any_input:
                    sel &= rows[:, self.in0] == sig
                yield t, 0, sel
                continue
            j = src - self.na
            for i in range(1, self.k + 1):
                sel = (rows[:, i] == j) & g
                if sig >= 0 and not any_input:
                    sel &= rows[:, self.in0 + i] == sig
                yield t, i, sel
            if self.k < self.n:
                yield t, self.cnt0 + j, (rows[:, self.cnt0 + j] > 0) & g

    def successors(self, rows: np.ndarray):
        """All successors: ``(source row index, mover code, transition index, successor rows)``."""
        srcs, movers, trs, news = [], [], [], []
        for t, mover, sel in self._selectors(rows):
            idx = np.nonzero(sel)[0]
            if not len(idx):
                continue
            new = rows[idx].copy()
            dst = self.trans[t][1]
            if mover == 0:
                new[:, 0] = dst
            elif mover <= self.k:
                new[:, mover] = dst - self.na
            else:
                new[:, mover] -= 1
                new[:, self.cnt0 + dst - self.na] += 1
            if self.open and mover <= self.k:
                col = self.in0 + mover
                nsig = len(self.sig_a) if mover == 0 else len(self.sig_b)
                for s in range(nsig):
                    fresh = new.copy()
                    fresh[:, col] = s
                    srcs.append(idx)
                    movers.append(np.full(len(idx), mover, dtype=np.int8))
                    trs.append(np.full(len(idx), t, dtype=np.int16))
                    news.append(fresh)
            else:
                srcs.append(idx)
                movers.append(np.full(len(idx), mover, dtype=np.int8))
                trs.append(np.full(len(idx), t, dtype=np.int16))
                news.append(new)
        if not news:
            return (np.zeros(0, np.int64), np.zeros(0, np.int8), np.zeros(0, np.int16),
                    np.zeros((0, self.width), self.dtype))
        return np.concatenate(srcs), np.concatenate(movers), np.concatenate(trs), np.concatenate(news)

    def enabled_bits(self, rows: np.ndarray, any_input: bool = False) -> np.ndarray:
        """Bitmask over mover codes of the processes enabled in each row."""
        bits = np.zeros(len(rows), dtype=np.uint64)
        for _, mover, sel in self._selectors(rows, any_input):
            bits[sel] |= np.uint64(1 << mover)
        return bits

    # ------------------------------------------------------------ exploration

    def explore(self, max_states: int = None, max_secs: float = None) -> "StateSpace":
        start = time.monotonic()
        roots = self.root_rows()
        rkeys = self.key(roots)
        visited = np.unique(rkeys)
        all_rows, all_keys = [roots], [rkeys]
        all_par, all_mov = [np.full(len(roots), -1, np.int64)], [np.full(len(roots), -1, np.int8)]
        frontier, fkeys = roots, rkeys
        while len(frontier):
            parts = []
            for lo in range(0, len(frontier), CHUNK):
                chunk = frontier[lo:lo + CHUNK]
                s, m, _, new = self.successors(chunk)
                k = self.key(new)
                uk, first = np.unique(k, return_index=True)
                parts.append((uk, new[first], fkeys[lo + s[first]], m[first]))
            uk = np.concatenate([p[0] for p in parts])
            uk, first = np.unique(uk, return_index=True)
            rows = np.concatenate([p[1] for p in parts])[first]
            par = np.concatenate([p[2] for p in parts])[first]
            mov = np.concatenate([p[3] for p in parts])[first]
            pos = np.searchsorted(visited, uk)
            pos[pos == len(visited)] = 0
            fresh = visited[pos] != uk if len(visited) else np.ones(len(uk), bool)
            uk, rows, par, mov = uk[fresh], rows[fresh], par[fresh], mov[fresh]
            if not len(uk):
                break
            visited = np.concatenate([visited, uk])
            visited.sort(kind="mergesort")
            all_rows.append(rows)
            all_keys.append(uk)
            all_par.append(par)
            all_mov.append(mov)
            frontier, fkeys = rows, uk
            if max_states is not None and len(visited) > max_states:
                raise ResourceLimit("state budget exceeded", {"states": int(len(visited))})
            if max_secs is not None and time.monotonic() - start > max_secs:
                raise ResourceLimit("time budget exceeded", {"states": int(len(visited))})
        keys = np.concatenate(all_keys)
        order = np.argsort(keys, kind="stable")
        self.keys = keys[order]
        self.rows = np.concatenate(all_rows)[order]
        pkeys = np.concatenate(all_par)[order]
        self.parent = np.where(pkeys < 0, -1, np.searchsorted(self.keys, np.maximum(pkeys, 0)))
        self.pmover = np.concatenate(all_mov)[order]
        self.roots = np.sort(np.searchsorted(self.keys, rkeys))
        self.seconds = time.monotonic() - start
        return self

    def __len__(self) -> int:
        return 0 if self.keys is None else len(self.keys)

    def ids(self, rows: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.keys, self.key(rows))

    def edges(self, sources: np.ndarray = None):
        """Edges ``(src, dst, mover, transition)`` leaving the given node ids (all by default)."""
        if sources is None:
            sources = np.arange(len(self))
        S, D, M, T = [], [], [], []
        for lo in range(0, len(sources), CHUNK):
            ids = sources[lo:lo + CHUNK]
            s, m, t, new = self.successors(self.rows[ids])
            S.append(ids[s])
            D.append(self.ids(new))
            M.append(m)
            T.append(t)
        if not S:
            return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int8),
                    np.zeros(0, np.int16))
        return np.concatenate(S), np.concatenate(D), np.concatenate(M), np.concatenate(T)

    def path_to(self, i: int) -> list:
        """``[(node, mover), ...]`` along the BFS tree from a root to i (exclusive)."""
        path = []
        while self.parent[i] >= 0:
            p = int(self.parent[i])
            path.append((p, int(self.pmover[i])))
            i = p
        path.reverse()
        return path

    # ---------------------------------------------------------------- masks

    def local_of(self, rows: np.ndarray, mover: int) -> np.ndarray:
        """Global local-state index of a mover in each row."""
        if mover == 0:
            return rows[:, 0].astype(np.int64)
        if mover <= self.k:
            return rows[:, mover].astype(np.int64) + self.na
        return np.full(len(rows), self.na + mover - self.cnt0, dtype=np.int64)

    def stuck(self, rows: np.ndarray) -> np.ndarray:
        return self.enabled_bits(rows, any_input=True) == 0

    def disabled(self, rows: np.ndarray, mover: int) -> np.ndarray:
        return (self.enabled_bits(rows, any_input=True) >> np.uint64(mover)) & np.uint64(1) == 0

    def all_b_in(self, rows: np.ndarray, q: int) -> np.ndarray:
        j = q - self.na
        ok = np.ones(len(rows), dtype=bool)
        for i in range(1, self.k + 1):
            ok &= rows[:, i] == j
        cnt = rows[:, self.cnt0:self.cnt0 + self.nb]
        return ok & (cnt.sum(axis=1) == cnt[:, j])

    def parties(self) -> list:
        """Mover codes that stand for individual processes (A unless inert, distinguished)."""
        first = 1 if self.spec.A.inert else 0
        return list(range(first, self.k + 1))

    def classes(self) -> list:
        """Mover codes of anonymous classes (one per B-state)."""
        if self.k == self.n:
            return []
        return [self.cnt0 + j for j in range(self.nb)]


_KIND = {"true": TRUE, "exists": EXISTS, "excluded": EXCLUDED, "conj": CONJ}

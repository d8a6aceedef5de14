"""Incremental difference-constraint engine.

Keeps the all-pairs shortest-path closure of the currently asserted bounds
``x - y <= c``. Each bound contributes the edge ``y -> x`` with weight c,
so a path u to v of weight w witnesses ``v - u <= w``, and a conjunction of
bounds is consistent exactly when the edge graph has no negative cycle.

Inserting a bound first tests for a conflict against the existing closure,
then relaxes every pair through the new edge in O(n^2); every overwritten
cell and replaced edge is logged per decision level so retraction replays
to a bit-identical state. Conflicts and propagations are explained on
demand by reconstructing a shortest path over the committed edges with
Bellman-Ford, so the hot loop carries no witness bookkeeping.
"""

from __future__ import annotations

import numpy as np

from .kernels import relax_edge

MAX_VERTICES = 1024  # keeps n-term int64 path sums clear of overflow

ZERO_VAR = 0


class TooManyVertices(Exception):
    """The documented vertex limit was exceeded."""


class DifferenceEngine:
    """Incrementally maintained shortest-path closure with undo."""

    def __init__(self, capacity=8):
        capacity = max(capacity, 2)
        self.n = 0
        self._d = np.zeros((capacity, capacity), dtype=np.int64)
        self._r = np.zeros((capacity, capacity), dtype=np.bool_)
        # (u, v) -> stack of (weight, supporting literal, stamp); the live
        # weight is the last entry, older entries are the still-asserted
        # weaker bounds needed for time-restricted explanations
        self.edges = {}
        self._trail = []  # (level, edge key or None, undo cells or None)
        self.stamp = 0
        self.cell_updates = 0
        self.commits = 0
        self._scratch = None

    # -- vertices ----------------------------------------------------------

    def ensure_vertex(self, v):
        """Grow the matrix so vertex ``v`` exists (diagonal 0, rest no-path)."""
        if v < self.n:
            return
        if v >= MAX_VERTICES:
            raise TooManyVertices(
                f"more than {MAX_VERTICES} difference variables")
        if v >= self._d.shape[0]:
            cap = self._d.shape[0]
            while cap <= v:
                cap *= 2
            nd = np.zeros((cap, cap), dtype=np.int64)
            nr = np.zeros((cap, cap), dtype=np.bool_)
            nd[: self.n, : self.n] = self._d[: self.n, : self.n]
            nr[: self.n, : self.n] = self._r[: self.n, : self.n]
            self._d, self._r = nd, nr
            self._scratch = None
        for k in range(self.n, v + 1):
            self._r[k, k] = True
        self.n = v + 1

    # -- queries -----------------------------------------------------------

    def dist(self, u, v):
        """Shortest path weight u to v, or None when unreachable."""
        if u >= self.n or v >= self.n or not self._r[u, v]:
            return None
        return int(self._d[u, v])

    def holds(self, x, y, c):
        """Whether the closure already entails x - y <= c."""
        return x < self.n and y < self.n and self._r[y, x] and self._d[y, x] <= c

    # -- assertion and retraction -------------------------------------------

    def assert_atom(self, x, y, c, lit, level):
        """Assert ``x - y <= c`` supported by ``lit``.

        Returns None on success or the list of supporting literals of a
        negative cycle (the new literal included); on conflict no state is
        touched.
        """
        if self._r[x, y] and self._d[x, y] + c < 0:
            path = self.explain_path(x, y, int(self._d[x, y]))
            return path + [lit]
        key = (y, x)
        hist = self.edges.get(key)
        if hist is not None and hist[-1][0] <= c:
            self._trail.append((level, None, None))
            return None
        self.stamp += 1
        if hist is None:
            self.edges[key] = [(c, lit, self.stamp)]
        else:
            hist.append((c, lit, self.stamp))
        if self._scratch is None or len(self._scratch[0]) < self.n * self.n:
            m = self.n * self.n
            self._scratch = (np.empty(m, np.int64), np.empty(m, np.int64),
                             np.empty(m, np.int64), np.empty(m, np.bool_))
        cells = relax_edge(self._d, self._r, self.n, x, y, c, self._scratch)
        self.cell_updates += len(cells[0])
        self.commits += 1
        self._trail.append((level, key, cells))
        return None

    def backtrack_to(self, level):
        """Undo every assertion made above ``level``, bit-exactly."""
        trail = self._trail
        while trail and trail[-1][0] > level:
            _, key, cells = trail.pop()
            if cells is not None:
                ui, uj, ud, ur = cells
                self._d[ui, uj] = ud
                self._r[ui, uj] = ur
            if key is not None:
                hist = self.edges[key]
                hist.pop()
                if not hist:
                    del self.edges[key]

    # -- explanations --------------------------------------------------------

    def _edge_view(self, stamp):
        """Edges as (u, v, w, lit), restricted to commits at or before
        ``stamp`` when given (each key's tightest such bound)."""
        out = []
        for (u, v), hist in self.edges.items():
            if stamp is None:
                w, lit, _ = hist[-1]
                out.append((u, v, w, lit))
            else:
                for w, lit, st in reversed(hist):
                    if st <= stamp:
                        out.append((u, v, w, lit))
                        break
        return out

    def explain_path(self, src, dst, bound, stamp=None):
        """Supporting literals of a shortest ``src`` to ``dst`` path.

        With ``stamp`` the search only uses edges committed at or before
        that time, so the explanation never cites later assertions. The
        found path weight is guaranteed to be at most ``bound``.
        """
        edges = self._edge_view(stamp)
        dist = {src: 0}
        pred = {}
        for _ in range(self.n):
            changed = False
            for u, v, w, lit in edges:
                du = dist.get(u)
                if du is None:
                    continue
                if v not in dist or du + w < dist[v]:
                    dist[v] = du + w
                    pred[v] = (u, lit)
                    changed = True
            if not changed:
                break
        if dst not in dist or dist[dst] > bound:
            raise RuntimeError("shortest-path witness lost; engine state is "
                               "inconsistent")
        lits = []
        v = dst
        while v != src:
            u, lit = pred[v]
            lits.append(lit)
            v = u
        lits.reverse()
        return lits

    # -- propagation ---------------------------------------------------------

    def scan_implications(self, xs, ys, cs):
        """Vectorized entailment test for atom arrays ``x - y <= c``.

        Returns boolean masks (implied-true, implied-false); an atom is
        implied false when its integer complement is entailed.
        """
        d = self._d[: self.n, : self.n]
        r = self._r[: self.n, : self.n]
        pos = r[ys, xs] & (d[ys, xs] <= cs)
        neg = r[xs, ys] & (d[xs, ys] <= -cs - 1)
        return pos, neg

    # -- models ---------------------------------------------------------------

    def extract_model(self):
        """Integer values satisfying every committed bound.

        One Bellman-Ford pass from a virtual source with zero-weight edges
        to every vertex; values are shifted so the zero variable gets 0.
        """
        dist = [0] * self.n
        edges = self._edge_view(None)
        for _ in range(self.n):
            changed = False
            for u, v, w, _ in edges:
                if dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    changed = True
            if not changed:
                break
        for u, v, w, _ in edges:
            if dist[u] + w < dist[v]:
                raise RuntimeError(
                    "negative cycle in a supposedly consistent state")
        base = dist[ZERO_VAR] if self.n > 0 else 0
        return {v: dist[v] - base for v in range(self.n)}

    # -- debugging -------------------------------------------------------------

    def clone(self):
        """Independent deep copy (used by refutation-style checks)."""
        other = DifferenceEngine.__new__(DifferenceEngine)
        other.n = self.n
        other._d = self._d.copy()
        other._r = self._r.copy()
        other.edges = {k: list(v) for k, v in self.edges.items()}
        other._trail = list(self._trail)
        other.stamp = self.stamp
        other.cell_updates = self.cell_updates
        other.commits = self.commits
        other._scratch = None
        return other

    def dump_tsv(self):
        """Row-major distance matrix, tab-separated, ``inf`` for no path."""
        rows = []
        for i in range(self.n):
            rows.append("\t".join(
                str(int(self._d[i, j])) if self._r[i, j] else "inf"
                for j in range(self.n)))
        return "\n".join(rows) + ("\n" if rows else "")

    def check_invariants(self):
        """Full-scan diagonal and triangle checks; raises on violation."""
        n = self.n
        d = self._d[:n, :n]
        r = self._r[:n, :n]
        if not all(r[i, i] and d[i, i] == 0 for i in range(n)):
            raise AssertionError("diagonal must be exactly zero")
        for k in range(n):
            via = r[:, k][:, None] & r[k, :][None, :]
            cand = d[:, k][:, None] + d[k, :][None, :]
            bad = via & (~r | (cand < d))
            if bad.any():
                raise AssertionError("triangle inequality violated")
        if (d[~r] != 0).any():
            raise AssertionError("unreachable cells must hold 0")

    def snapshot(self):
        """Comparable copy of the visible state (for undo-exactness tests)."""
        n = self.n
        return (self._d[:n, :n].tobytes(), self._r[:n, :n].tobytes(),
                {k: tuple(v) for k, v in self.edges.items()})

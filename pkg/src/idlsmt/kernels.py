"""Hot numeric kernels for the incremental shortest-path closure.

One operation lives here: the O(n^2) relaxation run when a weighted edge
``y -> x`` is committed, which tightens every pair (i, j) through the new
edge and logs the overwritten cells for undo. Two interchangeable
implementations are provided, a numba-compiled loop and a vectorized numpy
one. `IDLSMT_KERNEL=numpy` (or `numba`) in the environment forces a
backend; the default is numba when it imports, numpy otherwise.

Matrices come as a pair: `D` (int64 distances) and `R` (bool reachability).
A cell with `R` false has no path; its `D` entry is kept at 0 so sums never
overflow. All candidate sums skip unreachable cells, which is what makes
"no path" absorbing without a sentinel taking part in arithmetic.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via IDLSMT_KERNEL=numpy
    HAVE_NUMBA = False


def relax_edge_numpy(D, R, n, x, y, c, scratch=None):
    """Tighten all pairs through a new edge y -> x of weight c.

    Mutates ``D``/``R`` in place over the leading n x n block and returns the
    undo log ``(rows, cols, old_dist, old_reach)`` of every changed cell.
    """
    Dv = D[:n, :n]
    Rv = R[:n, :n]
    cand = (Dv[:, y] + c)[:, None] + Dv[x, :][None, :]
    valid = Rv[:, y][:, None] & Rv[x, :][None, :]
    better = valid & (~Rv | (cand < Dv))
    ii, jj = np.nonzero(better)
    old_d = Dv[ii, jj].copy()
    old_r = Rv[ii, jj].copy()
    Dv[ii, jj] = cand[ii, jj]
    Rv[ii, jj] = True
    return ii, jj, old_d, old_r


if HAVE_NUMBA:

    @njit(cache=True)
    def _relax_loop(D, R, n, x, y, c, ui, uj, ud, ur):
        cnt = 0
        for i in range(n):
            if not R[i, y]:
                continue
            base = D[i, y] + c
            for j in range(n):
                if not R[x, j]:
                    continue
                cand = base + D[x, j]
                if not R[i, j] or cand < D[i, j]:
                    ui[cnt] = i
                    uj[cnt] = j
                    ud[cnt] = D[i, j]
                    ur[cnt] = R[i, j]
                    D[i, j] = cand
                    R[i, j] = True
                    cnt += 1
        return cnt

    def relax_edge_numba(D, R, n, x, y, c, scratch=None):
        """Same contract as :func:`relax_edge_numpy`, compiled loop."""
        if scratch is None:
            m = n * n
            scratch = (np.empty(m, np.int64), np.empty(m, np.int64),
                       np.empty(m, np.int64), np.empty(m, np.bool_))
        ui, uj, ud, ur = scratch
        cnt = _relax_loop(D, R, n, x, y, c, ui, uj, ud, ur)
        return ui[:cnt].copy(), uj[:cnt].copy(), ud[:cnt].copy(), ur[:cnt].copy()

else:  # pragma: no cover
    relax_edge_numba = None


def _pick_backend():
    req = os.environ.get("IDLSMT_KERNEL", "").strip().lower()
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not HAVE_NUMBA:
            raise ImportError("IDLSMT_KERNEL=numba but numba is not installed")
        return "numba"
    if req:
        raise ValueError(f"unknown IDLSMT_KERNEL value {req!r}")
    return "numba" if HAVE_NUMBA else "numpy"


BACKEND = _pick_backend()
relax_edge = relax_edge_numba if BACKEND == "numba" else relax_edge_numpy


def available_backends():
    out = ["numpy"]
    if HAVE_NUMBA:
        out.append("numba")
    return out

#!/usr/bin/env python3
"""Compare the compiled and vectorized relaxation kernels.

Feeds identical random edge streams through both `relax_edge` backends on
fresh distance matrices and reports per-commit timings. The jit path pays
a one-off compilation cost, so it is warmed before timing.

Usage: python benchmarks/bench_fw_kernel.py [--sizes 50,100,200,400]
       [--edges 600] [--seed 0]
"""

import argparse
import random
import time

import numpy as np

from idlsmt import kernels


def fresh(n):
    return np.zeros((n, n), dtype=np.int64), np.eye(n, dtype=np.bool_)


def stream(seed, n, count):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        x, y = rng.sample(range(n), 2)
        out.append((x, y, rng.randint(-4, 3 * n)))
    return out


def drive(relax, n, edges, scratch):
    D, R = fresh(n)
    t0 = time.perf_counter()
    updates = 0
    for x, y, c in edges:
        if R[x, y] and D[x, y] + c < 0:
            continue
        updates += len(relax(D, R, n, x, y, c, scratch)[0])
    return time.perf_counter() - t0, updates, D, R


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200,400")
    ap.add_argument("--edges", type=int, default=600)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = [("numpy", kernels.relax_edge_numpy)]
    if kernels.HAVE_NUMBA:
        backends.append(("numba", kernels.relax_edge_numba))
        warm = fresh(8)
        kernels.relax_edge_numba(warm[0], warm[1], 8, 1, 0, 1)
    else:
        print("numba unavailable; timing the numpy kernel only")

    print(f"{'n':>6} {'edges':>6} {'updates':>10} "
          + "".join(f"{name + ' us/commit':>18}" for name, _ in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    for n in sizes:
        edges = stream(args.seed, n, args.edges)
        m = n * n
        scratch = (np.empty(m, np.int64), np.empty(m, np.int64),
                   np.empty(m, np.int64), np.empty(m, np.bool_))
        times = []
        results = []
        updates = 0
        for name, relax in backends:
            dt, updates, D, R = drive(relax, n, edges, scratch)
            times.append(dt)
            results.append((D, R))
        row = f"{n:>6} {len(edges):>6} {updates:>10}"
        for dt in times:
            row += f"{1e6 * dt / len(edges):>18.1f}"
        if len(results) == 2:
            same = (np.array_equal(results[0][0], results[1][0])
                    and np.array_equal(results[0][1], results[1][1]))
            if not same:
                raise SystemExit("backends disagree; kernel bug")
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()

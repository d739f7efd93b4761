#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against the pure-numpy fallback.

Both paths are built from the same source in frontier._accel; this script
times representative workloads for each hot kernel and prints a speedup
table.  Reduce the workload with --quick.
"""

import argparse
import time

import numpy as np

from frontier import _accel


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_simplex(k, rng, m=400, count=200):
    A = rng.standard_normal((m, 2))
    b = rng.standard_normal(m) + 2.0
    c = np.array([1.0, 0.0])

    def run():
        for _ in range(count):
            k.simplex_max(A, b, c, True, 1e-9, 50 * (m + 1))

    return run


def bench_q1(k, rng, n_mc=2000, J=200, R=25):
    U = rng.uniform(-1, 1, (n_mc, J))
    Z = np.cumsum(rng.standard_exponential((n_mc, J)), axis=1)
    W = -0.5 * U**2
    rhos = np.geomspace(1e-3, 1e3, R)

    def run():
        k.q1_grid(U, W, Z, rhos)

    return run


def bench_tilde(k, rng, n=2000, G=201):
    X = rng.uniform(0, 1, (n, 1))
    Y = np.sin(3 * X[:, 0]) + rng.gamma(1.0, 0.5, n)
    nodes = np.linspace(0.2, 0.8, G)[:, None]

    def run():
        k.tilde_batch(X, Y, nodes, 0.05, 3, 0.0, 1e-11)

    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    scale = 0.2 if args.quick else 1.0
    rng = np.random.default_rng(0)

    paths = {"numpy": _accel.build_kernels(False)}
    if _accel.HAS_NUMBA:
        paths["numba"] = _accel.build_kernels(True)
    else:
        print("numba is not installed; timing the fallback only")

    cases = {
        "simplex_max (m=400, 200 solves)": lambda k: bench_simplex(
            k, np.random.default_rng(1), count=max(1, int(200 * scale))
        ),
        "q1_grid (2000 draws x 25 rho)": lambda k: bench_q1(
            k, np.random.default_rng(2), n_mc=max(50, int(2000 * scale))
        ),
        "tilde_batch (n=2000, 201 nodes)": lambda k: bench_tilde(
            k, np.random.default_rng(3), G=max(11, int(201 * scale))
        ),
    }

    print(f"{'kernel':<36}" + "".join(f"{name:>12}" for name in paths) + f"{'speedup':>10}")
    for label, make in cases.items():
        times = {}
        for name, k in paths.items():
            run = make(k)
            run()  # warm-up (JIT compilation on the numba path)
            times[name] = timeit(run)
        row = f"{label:<36}" + "".join(f"{times[name]:>11.4f}s" for name in paths)
        if "numba" in times:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

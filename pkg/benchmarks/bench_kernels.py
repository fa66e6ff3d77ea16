"""Compiled versus pure-Python simplex kernel.

Times random dense LPs and one branch-and-bound query per backend.

    python3 benchmarks/bench_kernels.py [--sizes 20 40 80] [--repeat 5]
"""
import argparse
import time

import numpy as np

from levis.fixtures import random_verified_case
from levis.lp import LinearProgram, available_backends, solve_lp
import levis.lp as lp_mod
from levis.milp import nearest_adversarial


def random_lp(rng, n, m):
    A = rng.standard_normal((m, n))
    x = rng.uniform(0, 1, n)
    b = A @ x + rng.uniform(0.1, 1.0, m)
    return LinearProgram(rng.standard_normal(n), A, ["<="] * m, b, np.zeros(n), np.full(n, 2.0))


def time_lps(backend, lps, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        pivots = sum(solve_lp(lp, backend=backend).pivots for lp in lps)
        best = min(best, time.perf_counter() - t)
    return best, pivots


def time_bnb(backend, repeat):
    net, spec, c, box = random_verified_case(3, (2, 32, 1))
    saved = lp_mod.default_backend
    lp_mod.default_backend = lambda: backend
    try:
        best = np.inf
        for _ in range(repeat):
            t = time.perf_counter()
            ball, _ = nearest_adversarial(net, spec, c, np.inf, box)
            best = min(best, time.perf_counter() - t)
    finally:
        lp_mod.default_backend = saved
    return best, ball.radius


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only the python backend is timed")
    print(f"{'problem':<18}" + "".join(f"{b:>14}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for n in args.sizes:
        rng = np.random.default_rng(n)
        lps = [random_lp(rng, n, n // 2) for _ in range(args.count)]
        times = {b: time_lps(b, lps, args.repeat)[0] for b in backends}
        row = f"{f'lp n={n} x{args.count}':<18}" + "".join(f"{times[b]:>13.4f}s" for b in backends)
        if len(backends) > 1:
            row += f"   {times['python'] / times['compiled']:7.2f}x"
        print(row)
    times = {b: time_bnb(b, args.repeat)[0] for b in backends}
    row = f"{'bnb (2,32,1)':<18}" + "".join(f"{times[b]:>13.4f}s" for b in backends)
    if len(backends) > 1:
        row += f"   {times['python'] / times['compiled']:7.2f}x"
    print(row)


if __name__ == "__main__":
    main()

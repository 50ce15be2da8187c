"""Time the compiled integration kernel against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 5] [--runs 20] [--repeat 3]
"""

import argparse
import statistics
import time

import numpy as np

from structbal import _kernel
from structbal.dynamics import IntegratorOptions, integrate
from structbal.montecarlo import initial_state, trial_seed

CASES = [
    ("projected-pure", "symmetric"),
    ("projected-pure", "asymmetric"),
    ("projected-kulakowski", "kulakowski"),
]


def time_case(model, family, n, runs, backend, repeat):
    opts = IntegratorOptions(record=False, backend=backend)
    starts = [initial_state(model, family, n, trial_seed(0, i)) for i in range(runs)]
    best = float("inf")
    steps = 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        steps = sum(integrate(model, x, opts).n_steps for x in starts)
        best = min(best, time.perf_counter() - t0)
    return best, steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if _kernel._integrate_c is not None else [])
    print(f"n={args.n}, {args.runs} runs per case, best of {args.repeat}")
    print(f"{'model':22s} {'family':11s} {'backend':8s} {'seconds':>9s} {'us/step':>9s}")
    speedups = []
    for model, family in CASES:
        times = {}
        for b in backends:
            sec, steps = time_case(model, family, args.n, args.runs, b, args.repeat)
            times[b] = sec
            print(f"{model:22s} {family:11s} {b:8s} {sec:9.3f} {1e6 * sec / steps:9.2f}")
        if "cython" in times:
            speedups.append(times["python"] / times["cython"])
    if speedups:
        print(f"median speedup cython/python: {statistics.median(speedups):.1f}x")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()

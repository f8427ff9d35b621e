"""Compare the numba and pure-numpy kernels.

Times each kernel directly on generated instances, then runs the full
synchronous solver once per backend in a subprocess (the backend is fixed at
import time by MINSUM_DISABLE_NUMBA).  The generator builds a dense |R|, so
sizes much beyond a few thousand vertices are slow to set up.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 100 500 --repeat 20
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from minsum.generate import generate
from minsum.kernels import numba_impl, numpy_impl

BACKENDS = [("numpy", numpy_impl), ("numba", numba_impl)]

SOLVE_SNIPPET = """
import time
from minsum import kernels
from minsum.engine import run_sync
from minsum.generate import generate
p = generate({n}, "grid", 0.9, "mixed", seed=1)
run_sync(generate(9, "grid", 0.9, seed=1))  # compile outside the timing
t0 = time.perf_counter()
s, _ = run_sync(p)
print(kernels.BACKEND, s.t, time.perf_counter() - t0)
"""


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_gather(n, repeat):
    p = generate(n, "erdos", 0.9, "mixed", seed=0)
    w = np.random.default_rng(0).normal(size=p.num_directed)
    args = (p.nb_ptr, p.nb_col, p.nb_row, w)
    return {name: best_of(lambda impl=impl: impl.csr_gather_sum(*args), repeat)
            for name, impl in BACKENDS}


def bench_nb_walks(n, depth, repeat):
    p = generate(n, "grid", 0.9, "mixed", seed=0)
    weight = np.full(p.num_directed, 0.3)  # cost does not depend on the values
    first = p.out_col[p.out_ptr[0]:p.out_ptr[1]]
    args = (p.succ_ptr, p.succ_col, p.dst, weight, first, depth, p.n)
    return {name: best_of(lambda impl=impl: impl.nb_walk_sums(*args), repeat)
            for name, impl in BACKENDS}


def bench_solve(n):
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, MINSUM_DISABLE_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(n=n)],
                           env=env, capture_output=True, text=True, check=True)
        backend, iters, secs = r.stdout.split()
        out[backend] = float(secs)
        out["iterations"] = int(iters)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 2000])
    ap.add_argument("--depth", type=int, default=12, help="walk length for the NB enumeration")
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--output", help="also write results as JSON")
    a = ap.parse_args()

    rows = []
    print(f"{'kernel':<14}{'n':>8}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for n in a.sizes:
        for kernel, res in [
            ("gather_sum", bench_gather(n, a.repeat)),
            ("nb_walk_sums", bench_nb_walks(n, a.depth, a.repeat)),
            ("run_sync", bench_solve(n)),
        ]:
            rows.append({"kernel": kernel, "n": n, **res})
            print(f"{kernel:<14}{n:>8}{1e3 * res['numpy']:>14.3f}{1e3 * res['numba']:>14.3f}"
                  f"{res['numpy'] / res['numba']:>10.2f}")
    if a.output:
        with open(a.output, "w") as f:
            json.dump(rows, f, indent=2)


if __name__ == "__main__":
    main()

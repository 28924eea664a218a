"""Compare the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one row per kernel and size with the best-of-``repeat`` wall time of
each variant, then times one end-to-end ``solve`` with the numba path on and
off (``NORMCLUST_NO_NUMBA=1``) in fresh subprocesses.
"""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
import timeit

import numpy as np

from normclust import kernels as K


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def ky_case(q, d, rng):
    pts = rng.normal(size=(q, d))
    w = rng.uniform(0.5, 2.0, q)
    return (pts, w, 0.01, 10**6, K.MODE_OPTIMIZE)


def feasible_case(q, m, rng):
    rows = rng.uniform(0, 10, (q, m))
    radii = np.full(q, 9.9)
    return (rows, radii)


def triangle_case(n, rng):
    P = rng.normal(size=(n, 3))
    M = np.linalg.norm(P[:, None] - P[None], axis=2)
    return (M,)


def kernel_rows(repeat):
    rng = np.random.default_rng(0)
    cases = [
        ("ky_weighted_center", K.ky_weighted_center_numba, K.ky_weighted_center_numpy,
         [(f"q={q} d={d}", ky_case(q, d, rng)) for q, d in [(10, 2), (100, 5), (1000, 10)]]),
        ("first_feasible_center", K.first_feasible_center_numba,
         K.first_feasible_center_numpy,
         [(f"q={q} m={m}", feasible_case(q, m, rng)) for q, m in [(5, 50), (50, 2000)]]),
        ("triangle_violation", K.triangle_violation_numba, K.triangle_violation_numpy,
         [(f"N={n}", triangle_case(n, rng)) for n in (50, 200)]),
    ]
    for name, fast, slow, sizes in cases:
        fast(*sizes[0][1])  # compile outside the timing
        for label, args in sizes:
            t_fast = best(lambda: fast(*args), repeat)
            t_slow = best(lambda: slow(*args), repeat)
            yield name, label, t_fast, t_slow


def end_to_end(no_numba):
    rng = np.random.default_rng(1)
    pts = np.vstack([rng.normal(c, 0.4, (15, 2)) for c in (0, 4, 8)])
    with tempfile.TemporaryDirectory() as tmp:
        csv = os.path.join(tmp, "p.csv")
        np.savetxt(csv, pts, delimiter=",")
        norm = os.path.join(tmp, "n.json")
        with open(norm, "w") as fh:
            json.dump({"type": "lz", "z": "inf"}, fh)
        env = dict(os.environ, NORMCLUST_NO_NUMBA="1" if no_numba else "0")
        cmd = [sys.executable, "-m", "normclust.cli", "solve", "--points", csv,
               "--continuous", "--norm", norm, "--k", "3", "--eps", "0.2", "--restarts", "50",
               "--out", os.path.join(tmp, "r.json")]
        subprocess.run(cmd, env=env, check=True)  # warm the compile cache
        start = time.perf_counter()
        subprocess.run(cmd, env=env, check=True)
        return time.perf_counter() - start


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()
    print(f"{'kernel':24s} {'size':14s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, label, t_fast, t_slow in kernel_rows(args.repeat):
        print(f"{name:24s} {label:14s} {t_fast * 1e3:10.3f} {t_slow * 1e3:10.3f} "
              f"{t_slow / t_fast:8.1f}x")
    if not args.skip_end_to_end:
        on, off = end_to_end(False), end_to_end(True)
        print(f"\nend-to-end continuous solve (n=45, k=3): numba {on:.2f} s, "
              f"numpy {off:.2f} s")


if __name__ == "__main__":
    main()

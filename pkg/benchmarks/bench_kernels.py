#!/usr/bin/env python3
"""Numba vs numpy timings for the two hot kernels and one end-to-end chain run.

Usage:
    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

The kernel comparison calls both implementations directly in one process.
The end-to-end comparison (XYZ chain, H2/H3 assembly plus commutator) runs a
child interpreter per mode, toggling LAXKIT_DISABLE_NUMBA, so that every
call site dispatches to the selected path.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from laxkit import kernels
from laxkit._accel import HAVE_NUMBA

CHILD = """
import time
from laxkit.chain import ChainSpec, commutator_residual
from laxkit.rmatrix import XYZ
from laxkit.elliptic import EllipticContext
from laxkit._accel import HAVE_NUMBA
t0 = time.perf_counter()
spec = ChainSpec({n}, XYZ(), EllipticContext(1j))
res = commutator_residual(spec)
print(HAVE_NUMBA, time.perf_counter() - t0, res)
"""


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_theta(repeat: int, n_pts: int = 20_000) -> dict:
    rng = np.random.default_rng(0)
    z = rng.uniform(0, 1, n_pts) + 1j * rng.uniform(-0.25, 0.25, n_pts)
    tau = 1j
    args = (z, tau, 1e-16, 8, 200)
    out = {"points": n_pts, "numpy_s": best_of(lambda: kernels.theta_series_numpy(*args), repeat)}
    if HAVE_NUMBA:
        kernels.theta_series_numba(*args)  # compile
        out["numba_s"] = best_of(lambda: kernels.theta_series_numba(*args), repeat)
        a = kernels.theta_series_numpy(*args)[0]
        b = kernels.theta_series_numba(*args)[0]
        out["max_abs_diff"] = float(np.max(np.abs(a - b)))
    return out


def bench_embed(repeat: int, n_sites: int = 10, d: int = 2) -> dict:
    rng = np.random.default_rng(1)
    op = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    pairs = [(0, n_sites - 1), (3, 1), (n_sites // 2, n_sites // 2 + 1)]

    def run(fn):
        for i, j in pairs:
            fn(op, i, j, n_sites, d)

    out = {"n_sites": n_sites, "numpy_s": best_of(lambda: run(kernels.embed_pair_numpy), repeat)}
    if HAVE_NUMBA:
        run(kernels.embed_pair_numba)
        out["numba_s"] = best_of(lambda: run(kernels.embed_pair_numba), repeat)
        out["max_abs_diff"] = max(
            float(np.max(np.abs(kernels.embed_pair_numpy(op, i, j, n_sites, d)
                                - kernels.embed_pair_numba(op, i, j, n_sites, d))))
            for i, j in pairs
        )
    return out


def bench_chain(n: int = 6) -> dict:
    out = {"N": n}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, LAXKIT_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", CHILD.format(n=n)], env=env,
                              capture_output=True, text=True, check=True)
        have, secs, res = proc.stdout.split()
        out[f"{label}_s"] = float(secs)
        out[f"{label}_active"] = have == "True"
        out[f"{label}_residual"] = float(res)
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="write the timings as JSON")
    p.add_argument("--skip-chain", action="store_true")
    args = p.parse_args(argv)

    results = {"numba_available": HAVE_NUMBA,
               "theta_series": bench_theta(args.repeat),
               "embed_pair": bench_embed(args.repeat)}
    if not args.skip_chain:
        results["chain_commutator"] = bench_chain()

    for name, row in results.items():
        if not isinstance(row, dict):
            continue
        line = f"{name:18s} numpy {row.get('numpy_s', float('nan')):9.4f}s"
        if "numba_s" in row:
            speedup = row["numpy_s"] / row["numba_s"] if row["numba_s"] > 0 else float("inf")
            line += f"   numba {row['numba_s']:9.4f}s   x{speedup:5.1f}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

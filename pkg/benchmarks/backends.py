#!/usr/bin/env python3
"""Benchmark the compiled sweep kernel against the pure-Python fallback.

Runs the same relaxation on both backends, checks that the resulting
envelopes are bit-identical, and reports wall times and speedup.  Grid size
is configurable; the default stays small because the Python fallback is a
plain per-chain loop.

Usage:
    python benchmarks/backends.py [--diag-max 2.5] [--delta 0.05] [--threads N]
"""
import argparse
import time

import numpy as np

from rankrelax import (BACKEND, GridSpec, MaterialSpec, Model,
                       RelaxationConfig, identity_history, node_count,
                       potential_field, reduced_set, relax)


def run(backend, field, threads):
    cfg = RelaxationConfig(directions=reduced_set(1, 2), backend=backend,
                           threads=threads)
    start = time.perf_counter()
    res = relax(field, cfg)
    return time.perf_counter() - start, res


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--diag-max", type=float, default=2.5)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    mat = MaterialSpec(model=Model.NEOHOOKE, lam=0.5, mu=1.0, d0=0.3,
                       dinf=0.9)
    grid = GridSpec.from_bands(2, 0.1, args.diag_max, args.delta)
    field = potential_field(grid, identity_history(2), mat)
    print(f"default backend: {BACKEND}")
    print(f"grid: {node_count(grid)} nodes, 16 reduced directions")

    t_py, res_py = run("python", field, args.threads)
    print(f"python   {t_py:8.3f} s   ({res_py.iterations} sweeps)")
    if BACKEND == "compiled":
        t_c, res_c = run("compiled", field, args.threads)
        print(f"compiled {t_c:8.3f} s   ({res_c.iterations} sweeps)")
        same = np.array_equal(res_py.envelope.values, res_c.envelope.values)
        print(f"bit-identical envelopes: {same}")
        print(f"speedup: {t_py / t_c:.1f}x")
        if not same:
            raise SystemExit("backend results differ")
    else:
        print("compiled backend unavailable; built with the fallback only")


if __name__ == "__main__":
    main()

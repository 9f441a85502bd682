#!/usr/bin/env python3
"""Strong-scaling benchmark of the sweep kernel.

Relaxes a 209x209 diagonal Neo-Hooke lattice (43681 nodes) with the reduced
direction set for worker counts 1, 2, 4, ... up to --max-threads and writes
`threads,seconds,efficiency` CSV to stdout.  The same harness backs the
`rankrelax scaling` subcommand.
"""
import argparse
import sys
import time

from rankrelax import (GridSpec, MaterialSpec, Model, RelaxationConfig,
                       identity_history, node_count, potential_field,
                       reduced_set, relax)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-threads", type=int, default=8)
    args = ap.parse_args()

    mat = MaterialSpec(model=Model.NEOHOOKE, lam=0.5, mu=1.0, d0=0.3,
                       dinf=0.9)
    grid = GridSpec.from_bands(2, 0.1, 3.35, 1.0 / 64.0)
    field = potential_field(grid, identity_history(2), mat)
    print(f"# {node_count(grid)} nodes", file=sys.stderr)

    counts = []
    t = 1
    while t <= args.max_threads:
        counts.append(t)
        t *= 2
    print("threads,seconds,efficiency")
    base = None
    for threads in counts:
        cfg = RelaxationConfig(directions=reduced_set(1, 2), threads=threads)
        start = time.perf_counter()
        relax(field, cfg)
        seconds = time.perf_counter() - start
        if base is None:
            base = seconds
        print(f"{threads},{seconds:.6f},{base / (seconds * threads):.4f}")


if __name__ == "__main__":
    main()

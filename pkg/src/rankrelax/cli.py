"""Command-line front end: wires config files to library runs and artifacts.

Subcommands:
  convexify           envelope + convergence table for one lattice setup
  convergence-table   convergence table only
  error-slices        nodewise relative error between two direction sets
  lamination-matrix   identity-containing slice of the lamination-order map
  lines               potential and envelope along rank-one/two/d paths
  tree                lamination tree (JSON) at a query point
  bvp                 two-element benchmark force-displacement curve
  scaling             strong-scaling benchmark of the sweep kernel

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import _kernels
from .config import (Config, directions_from_config, grid_from_config,
                     history_from_config, material_from_config, parse_config)
from .directions import dump_directions_csv
from .engine import (RelaxationConfig, potential_field, relative_error, relax,
                     slice_table)
from .errors import ConfigError, IoError, RankRelaxError
from .fesolver import (BvpKind, BvpSpec, LinePath, RelaxPolicy, dump_fd_csv,
                       dump_log_csv, line_eval, solve_bvp)
from .forest import buildtree, microstructure, tree_to_dict
from .grid import dump_field_csv
from .material import Model


def _relax_from_config(cfg: Config, args, track_forest=None):
    mat = material_from_config(cfg)
    grid = grid_from_config(cfg)
    hist = history_from_config(cfg, grid.d)
    if args.directions is not None:
        tmp = Config(dict(cfg.entries))
        tmp.entries["directions.kind"] = args.directions
        dirs = directions_from_config(tmp, grid.d)
    else:
        dirs = directions_from_config(cfg, grid.d)
    track = cfg.get_bool("relax.track_forest", False) or args.track_forest
    if track_forest is not None:
        track = track_forest
    rcfg = RelaxationConfig(
        directions=dirs,
        tol=args.tol if args.tol is not None else cfg.get_float("relax.tol", 1e-4),
        k_max=args.kmax if args.kmax is not None else cfg.get_int("relax.k_max", 20),
        track_forest=track,
        threads=args.threads,
        backend=args.backend,
    )
    invalid = None
    if cfg.has("relax.invalid_value"):
        invalid = cfg.get_float("relax.invalid_value")
    elif mat.model == Model.STVK:
        invalid = 1000.0
    return mat, grid, hist, rcfg, invalid


def _run_relax(cfg: Config, args, track_forest=None):
    mat, grid, hist, rcfg, invalid = _relax_from_config(cfg, args, track_forest)
    w0 = potential_field(grid, hist, mat, invalid_value=invalid)
    return mat, grid, hist, rcfg, relax(w0, rcfg)


def _write_convergence(path, result):
    with open(path, "w") as fh:
        fh.write("k,max_decrease\n")
        for k, dec in enumerate(result.max_decrease_per_iteration, start=1):
            fh.write("%d,%.17g\n" % (k, dec))


def _write_slice(path, coords0, coords1, table):
    with open(path, "w") as fh:
        fh.write("," + ",".join("%.17g" % c for c in coords1) + "\n")
        for i, c0 in enumerate(coords0):
            row = ",".join("%.17g" % v for v in table[i])
            fh.write("%.17g,%s\n" % (c0, row))


def _slice_axes(cfg: Config, grid):
    if cfg.has("slices.axes"):
        vals = [int(v) for v in cfg.get_floats("slices.axes")]
        if len(vals) != 2:
            raise ConfigError("slices.axes must list exactly two axes")
        return vals[0], vals[1]
    return 0, grid.d * grid.d - 1


def cmd_convexify(cfg, args, out):
    _mat, _grid, _hist, _rcfg, result = _run_relax(cfg, args)
    dump_field_csv(os.path.join(out, "envelope.csv"), result.envelope,
                   result.lamination_order)
    _write_convergence(os.path.join(out, "convergence.csv"), result)


def cmd_convergence_table(cfg, args, out):
    _mat, _grid, _hist, _rcfg, result = _run_relax(cfg, args)
    _write_convergence(os.path.join(out, "convergence.csv"), result)


def cmd_error_slices(cfg, args, out):
    mat, grid, hist, rcfg, invalid = _relax_from_config(cfg, args)
    if not cfg.has("directions_ref.kind"):
        raise ConfigError("error-slices requires a directions_ref section")
    ref_dirs = directions_from_config(cfg, grid.d, prefix="directions_ref.")
    w0 = potential_field(grid, hist, mat, invalid_value=invalid)
    cand = relax(w0, rcfg)
    ref_cfg = RelaxationConfig(directions=ref_dirs, tol=rcfg.tol,
                               k_max=rcfg.k_max, threads=rcfg.threads,
                               backend=rcfg.backend)
    ref = relax(w0, ref_cfg)
    gamma = cfg.get_float("relax.gamma", 1e-8)
    err = relative_error(ref.envelope, cand.envelope, gamma)
    a0, a1 = _slice_axes(cfg, grid)
    c0, c1, table = slice_table(grid, err.values, (a0, a1))
    _write_slice(os.path.join(out, "relative_error_slice.csv"), c0, c1, table)
    dump_field_csv(os.path.join(out, "relative_error.csv"), err)


def cmd_lamination_matrix(cfg, args, out):
    _mat, grid, _hist, _rcfg, result = _run_relax(cfg, args)
    a0, a1 = _slice_axes(cfg, grid)
    c0, c1, table = slice_table(grid, result.lamination_order, (a0, a1))
    _write_slice(os.path.join(out, "lamination_order_slice.csv"), c0, c1, table)


def cmd_lines(cfg, args, out):
    mat, grid, hist, _rcfg, result = _run_relax(cfg, args)
    paths = {"rank1": LinePath.RANK1, "rank2": LinePath.RANK2,
             "rankd": LinePath.RANKD}
    name = cfg.get_str("lines.path", "rank1").strip().lower()
    if name not in paths:
        raise ConfigError(f"unknown line path: {name}")
    s0 = cfg.get_float("lines.s_min")
    s1 = cfg.get_float("lines.s_max")
    count = cfg.get_int("lines.s_count", 101)
    samples = np.linspace(s0, s1, count)
    rows = line_eval(mat, hist, paths[name], samples, envelope=result.envelope)
    with open(os.path.join(out, "lines.csv"), "w") as fh:
        fh.write("s,w,w_envelope\n")
        for s, w, we in rows:
            fh.write("%.17g,%.17g,%.17g\n" % (s, w, we))


def cmd_tree(cfg, args, out):
    mat, grid, hist, _rcfg, result = _run_relax(cfg, args, track_forest=True)
    fvals = cfg.get_floats("tree.f")
    if len(fvals) != grid.d * grid.d:
        raise ConfigError("tree.f must list d*d matrix entries")
    f = np.array(fvals).reshape(grid.d, grid.d)
    depth = cfg.get_int("tree.depth", result.iterations)
    tree = buildtree(f, grid, result.forest, depth)
    micro = microstructure(tree, mat, hist)
    payload = {
        "tree": tree_to_dict(tree),
        "leaves": [
            {"F": leaf["f"].tolist(), "xi": leaf["xi"],
             "damage": leaf["damage"]}
            for leaf in micro.leaves
        ],
        "branchings": [
            {"normal": b["normal"].tolist(), "level": b["level"],
             "lambda": b["lam"]}
            for b in micro.branchings
        ],
    }
    with open(os.path.join(out, "tree.json"), "w") as fh:
        json.dump(payload, fh, indent=2)


def cmd_bvp(cfg, args, out):
    mat = material_from_config(cfg)
    kinds = {"uniaxial": BvpKind.UNIAXIAL, "biaxial": BvpKind.BIAXIAL}
    kind = cfg.get_str("bvp.kind").strip().lower()
    if kind not in kinds:
        raise ConfigError(f"unknown bvp kind: {kind}")
    loads = cfg.get_floats("bvp.loads", [])
    relaxed = cfg.get_bool("bvp.relaxed", False)
    grid = grid_from_config(cfg) if (relaxed or cfg.has("grid.diag_min")) else None
    dirs = directions_from_config(cfg, 2) if relaxed else None
    policies = {
        "fix_after_first_nonconvex": RelaxPolicy.FIX_AFTER_FIRST_NONCONVEX,
        "per_step": RelaxPolicy.PER_STEP,
    }
    policy = cfg.get_str("bvp.relax_policy", "fix_after_first_nonconvex")
    if policy not in policies:
        raise ConfigError(f"unknown relax policy: {policy}")
    bvp = BvpSpec(
        kind=kinds[kind],
        kappa=cfg.get_float("bvp.kappa"),
        load_steps=loads,
        material=mat,
        relaxed=relaxed,
        epsilon=cfg.get_float("bvp.epsilon", 1e-5),
        relax_policy=policies[policy],
        grid=grid,
        directions=dirs,
        relax_tol=cfg.get_float("relax.tol", 1e-4),
        relax_k_max=cfg.get_int("relax.k_max", 20),
        threads=args.threads,
        derivative=cfg.get_str("bvp.derivative", "tree"),
        tree_depth=cfg.get_int("bvp.tree_depth", None)
        if cfg.has("bvp.tree_depth") else None,
        beta0=cfg.get_float("history.beta_k", 0.0),
        solver_tol=cfg.get_float("bvp.solver_tol", 1e-8),
    )
    newton = cfg.get_str("bvp.solver", "descent").strip().lower() == "newton"
    curve, log = solve_bvp(bvp, newton=newton)
    dump_fd_csv(os.path.join(out, "fd.csv"), curve)
    dump_log_csv(os.path.join(out, "solver_log.csv"), log)


def cmd_scaling(cfg, args, out):
    mat, grid, hist, rcfg, invalid = _relax_from_config(cfg, args)
    w0 = potential_field(grid, hist, mat, invalid_value=invalid)
    counts = []
    t = 1
    while t <= args.threads:
        counts.append(t)
        t *= 2
    rows = []
    base = None
    for threads in counts:
        run_cfg = RelaxationConfig(
            directions=rcfg.directions, tol=rcfg.tol, k_max=rcfg.k_max,
            threads=threads, backend=rcfg.backend,
        )
        start = time.perf_counter()
        relax(w0, run_cfg)
        seconds = time.perf_counter() - start
        if base is None:
            base = seconds
        rows.append((threads, seconds, base / (seconds * threads)))
    with open(os.path.join(out, "scaling.csv"), "w") as fh:
        fh.write("threads,seconds,efficiency\n")
        for threads, seconds, eff in rows:
            fh.write("%d,%.17g,%.17g\n" % (threads, seconds, eff))


def cmd_directions(cfg, args, out):
    grid = grid_from_config(cfg)
    dirs = directions_from_config(cfg, grid.d)
    dump_directions_csv(os.path.join(out, "directions.csv"), dirs)


_COMMANDS = {
    "convexify": cmd_convexify,
    "convergence-table": cmd_convergence_table,
    "error-slices": cmd_error_slices,
    "lamination-matrix": cmd_lamination_matrix,
    "lines": cmd_lines,
    "tree": cmd_tree,
    "bvp": cmd_bvp,
    "scaling": cmd_scaling,
    "directions": cmd_directions,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rankrelax",
        description="Rank-one convex relaxation of incremental damage "
                    "potentials on lattices of deformation gradients.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="flat key=value file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--kmax", type=int, default=None)
    parser.add_argument("--directions", choices=["reduced", "full"],
                        default=None, help="override the direction set kind")
    parser.add_argument("--track-forest", action="store_true")
    parser.add_argument("--backend", choices=["compiled", "python"],
                        default=None,
                        help=f"sweep kernel (default: {_kernels.BACKEND})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        _COMMANDS[args.command](cfg, args, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, IoError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except RankRelaxError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

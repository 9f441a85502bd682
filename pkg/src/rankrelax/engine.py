"""Global lamination iteration over the deformation-gradient lattice.

Each sweep lowers every node to the value of the 1-D lower convex envelope
of the current iterate restricted to the clipped line through the node, for
each search direction, keeping the per-node minimum over directions.  The
iterate is double buffered: a sweep reads only the previous field.

Directions whose lattice step lands exactly on grid nodes are processed as
disjoint index chains by the compiled (or fallback) kernel; any other
direction falls back to per-node interpolated line sampling.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import inf
from typing import Optional

import numpy as np

from . import _kernels
from .convexify1d import convexify, envelope_value_at_zero, line_points
from .directions import DirectionSet
from .errors import ConfigError, OutOfDomain
from .grid import (GridSpec, ScalarField, check_same_spec, interpolate,
                   node_count, points_at_flat, unravel)
from .material import HistoryState, MaterialSpec, Model, _det, incremental_potential


class Variant(enum.Enum):
    POINTWISE = "pointwise"


@dataclass
class RelaxationConfig:
    directions: DirectionSet
    tol: float = 1e-4
    k_max: int = 20
    track_forest: bool = False
    variant: Variant = Variant.POINTWISE
    threads: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass
class IterationRecords:
    """Per-node minimizers recorded in one sweep (only improved nodes kept)."""

    idx: np.ndarray
    direction: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    lam: np.ndarray


@dataclass
class LaminationForest:
    """Recorded lamination minimizers of a tracked relaxation run."""

    spec: GridSpec
    delta: float
    directions: DirectionSet
    records: list  # records[k-1] : IterationRecords for sweep k
    _maps: list = field(default_factory=list, repr=False)

    def laminate_at(self, flat_index: int, iteration: int):
        """Laminate recorded for a node at one sweep, or None."""
        if iteration < 1 or iteration > len(self.records):
            return None
        if not self._maps:
            for rec in self.records:
                self._maps.append(
                    {int(i): p for p, i in enumerate(rec.idx.tolist())}
                )
        pos = self._maps[iteration - 1].get(int(flat_index))
        if pos is None:
            return None
        rec = self.records[iteration - 1]
        return (
            int(rec.direction[pos]),
            int(rec.l1[pos]),
            int(rec.l2[pos]),
            float(rec.lam[pos]),
        )

    def highest_laminate_order(self, flat_index: int, depth: int) -> int:
        """Largest sweep index <= depth with a recorded laminate, else 0."""
        for k in range(min(depth, len(self.records)), 0, -1):
            if self.laminate_at(flat_index, k) is not None:
                return k
        return 0


@dataclass
class RelaxationResult:
    envelope: ScalarField
    iterations: int
    max_decrease_per_iteration: list
    lamination_order: np.ndarray
    forest: Optional[LaminationForest] = None


def potential_field(spec: GridSpec, hist: HistoryState, mspec: MaterialSpec,
                    invalid_value: Optional[float] = None) -> ScalarField:
    """Incremental potential sampled over all lattice nodes.

    Nodes with det(F) <= 0 receive ``invalid_value`` when given (finite
    starting value policy), else +inf for NEOHOOKE and the plain polynomial
    value for STVK.
    """
    n = node_count(spec)
    vals = np.empty(n)
    block = 262144
    for start in range(0, n, block):
        flats = np.arange(start, min(start + block, n), dtype=np.int64)
        f = points_at_flat(spec, flats)
        w = np.asarray(incremental_potential(f, hist, mspec, invalid="inf"))
        if invalid_value is not None:
            w = np.where(_det(f) <= 0, invalid_value, w)
        vals[start:start + len(flats)] = w
    return ScalarField(spec=spec, values=vals)


def _resolved_delta(spec: GridSpec) -> float:
    """Common lattice step of the resolved axes (the engine line step)."""
    shape = spec.shape
    deltas = spec.deltas.ravel()
    res = [deltas[a] for a in range(len(shape)) if shape[a] > 1]
    if not res:
        return float(deltas[0])
    return float(min(res))


def _chain_decomposition(spec: GridSpec, m: np.ndarray):
    """Starts, lengths and flat stride of the maximal chains for index step m."""
    shape = spec.shape
    naxes = len(shape)
    stride = int(np.dot(m, spec.strides))
    mask = np.zeros(shape, dtype=bool)
    for a in range(naxes):
        if m[a] == 0:
            continue
        idx = np.arange(shape[a])
        cond = idx < m[a] if m[a] > 0 else idx > shape[a] - 1 + m[a]
        view = cond.reshape((1,) * a + (shape[a],) + (1,) * (naxes - a - 1))
        mask = mask | view
    starts = np.flatnonzero(mask.ravel()).astype(np.int64)
    idxs = unravel(spec, starts)
    steps = np.full(len(starts), np.iinfo(np.int64).max, dtype=np.int64)
    for a in range(naxes):
        if m[a] == 0:
            continue
        if m[a] > 0:
            avail = (shape[a] - 1 - idxs[:, a]) // m[a]
        else:
            avail = idxs[:, a] // (-m[a])
        steps = np.minimum(steps, avail)
    lengths = steps + 1
    return starts, lengths, stride


def _direction_plan(spec: GridSpec, directions: DirectionSet, delta: float):
    """Classify each direction: grid-aligned chain sweep, general, or no-op."""
    shape = spec.shape
    deltas = spec.deltas.ravel()
    plan = []
    for r_mat in directions.matrices:
        r = r_mat.ravel()
        m = np.zeros(len(shape), dtype=np.int64)
        aligned = True
        skip = False
        for a in range(len(shape)):
            step = delta * r[a]
            if shape[a] == 1:
                if r[a] != 0:
                    skip = True
                    break
                continue
            ratio = step / deltas[a]
            if abs(ratio - round(ratio)) > 1e-9:
                aligned = False
            else:
                m[a] = int(round(ratio))
        if skip:
            plan.append(("skip",))
        elif aligned:
            if np.all(m == 0):
                plan.append(("skip",))
            else:
                starts, lengths, stride = _chain_decomposition(spec, m)
                plan.append(("aligned", starts, lengths, stride))
        else:
            plan.append(("general", r_mat))
    return plan


def _sweep_general(old, new, spec, r_mat, delta, di, bestdir, l1a, l2a, lama):
    """Per-node interpolated line sweep for off-lattice directions."""
    old_field = ScalarField(spec=spec, values=old)
    n = old.size
    for node in range(n):
        if old[node] == inf:
            continue
        f = points_at_flat(spec, np.int64(node))
        ls, pts = line_points(spec, f, r_mat, delta)
        if len(ls) < 2:
            continue
        w = np.empty(len(ls))
        for i, p in enumerate(pts):
            try:
                w[i] = interpolate(old_field, p)
            except OutOfDomain:
                w[i] = inf
        if not np.isfinite(w).any():
            continue
        support = convexify(ls.astype(float), w)
        val, lm, lp, lam = envelope_value_at_zero(support)
        if val < new[node]:
            new[node] = val
            bestdir[node] = di
            l1a[node] = lm
            l2a[node] = lp
            lama[node] = lam


def relax(w_init: ScalarField, cfg: RelaxationConfig) -> RelaxationResult:
    """Iterate lamination sweeps until the max nodewise decrease meets tol.

    Returns the final iterate, per-sweep decreases, the lamination-order
    map (last sweep at which each node changed; -1 at sentinel nodes) and,
    when tracked, the lamination forest.
    """
    if len(cfg.directions) == 0:
        raise ConfigError("direction set is empty")
    spec = w_init.spec
    delta = _resolved_delta(spec)
    plan = _direction_plan(spec, cfg.directions, delta)
    backend_name, kernel = _kernels.get_backend(cfg.backend)

    vals = w_init.values.copy()
    n = vals.size
    sentinel = np.isinf(vals)
    order = np.zeros(n, dtype=np.int32)
    order[sentinel] = -1
    bestdir = np.empty(n, dtype=np.int32)
    l1a = np.empty(n, dtype=np.int32)
    l2a = np.empty(n, dtype=np.int32)
    lama = np.empty(n, dtype=np.float64)

    maxlen = 2
    for entry in plan:
        if entry[0] == "aligned" and len(entry[2]):
            maxlen = max(maxlen, int(entry[2].max()))
    wbuf = np.empty((cfg.threads, maxlen))
    ybuf = np.empty((cfg.threads, maxlen), dtype=np.int64)
    cbuf = np.empty((cfg.threads, maxlen))

    records = [] if cfg.track_forest else None
    decreases = []
    iterations = 0
    for k in range(1, cfg.k_max + 1):
        new = vals.copy()
        bestdir.fill(-1)
        l1a.fill(0)
        l2a.fill(0)
        lama.fill(0.0)
        for di, entry in enumerate(plan):
            if entry[0] == "skip":
                continue
            if entry[0] == "aligned":
                _, starts, lengths, stride = entry
                kernel(vals, new, starts, lengths, stride, di,
                       bestdir, l1a, l2a, lama, wbuf, ybuf, cbuf, cfg.threads)
            else:
                _sweep_general(vals, new, spec, entry[1], delta, di,
                               bestdir, l1a, l2a, lama)
        finite = ~sentinel
        max_dec = float((vals[finite] - new[finite]).max()) if finite.any() else 0.0
        decreases.append(max_dec)
        changed = new < vals
        order[changed] = k
        if cfg.track_forest:
            idx = np.flatnonzero(bestdir >= 0).astype(np.int64)
            records.append(IterationRecords(
                idx=idx,
                direction=bestdir[idx].copy(),
                l1=l1a[idx].copy(),
                l2=l2a[idx].copy(),
                lam=lama[idx].copy(),
            ))
        vals = new
        iterations = k
        if max_dec <= cfg.tol:
            break

    forest = None
    if cfg.track_forest:
        forest = LaminationForest(spec=spec, delta=delta,
                                  directions=cfg.directions, records=records)
    return RelaxationResult(
        envelope=ScalarField(spec=spec, values=vals),
        iterations=iterations,
        max_decrease_per_iteration=decreases,
        lamination_order=order,
        forest=forest,
    )


def max_decrease(prev: ScalarField, nxt: ScalarField) -> float:
    """Max nodewise decrease between consecutive iterates, sentinels excluded."""
    check_same_spec(prev, nxt)
    finite = np.isfinite(prev.values)
    if not finite.any():
        return 0.0
    return float((prev.values[finite] - nxt.values[finite]).max())


def relative_error(reference: ScalarField, candidate: ScalarField,
                   gamma: float = 1e-8) -> ScalarField:
    """Nodewise |ref - cand| / (gamma + |ref|)."""
    check_same_spec(reference, candidate)
    if not gamma > 0:
        raise ConfigError("gamma must be positive")
    err = np.abs(reference.values - candidate.values) / (
        gamma + np.abs(reference.values)
    )
    return ScalarField(spec=reference.spec, values=err)


def slice_table(spec: GridSpec, values: np.ndarray, free_axes):
    """2-D table of a nodal array over two free axes.

    The remaining components are snapped to the node nearest the identity
    matrix (1 on the diagonal, 0 off it).  Returns (coords_0, coords_1,
    table) with table[i, j] at free-axis indices (i, j).
    """
    a0, a1 = free_axes
    naxes = len(spec.shape)
    if a0 == a1 or not (0 <= a0 < naxes and 0 <= a1 < naxes):
        raise OutOfDomain("free axes must be two distinct grid axes")
    d = spec.d
    mins, deltas = spec.mins.ravel(), spec.deltas.ravel()
    fixed_idx = np.zeros(naxes, dtype=np.int64)
    for a in range(naxes):
        target = 1.0 if (a // d) == (a % d) else 0.0
        i = int(round((target - mins[a]) / deltas[a]))
        fixed_idx[a] = min(max(i, 0), spec.shape[a] - 1)
    n0, n1 = spec.shape[a0], spec.shape[a1]
    table = np.empty((n0, n1))
    base = int(np.dot(np.delete(fixed_idx, [a0, a1]),
                      np.delete(spec.strides, [a0, a1])))
    i0 = np.arange(n0)[:, None] * spec.strides[a0]
    i1 = np.arange(n1)[None, :] * spec.strides[a1]
    table[:, :] = np.asarray(values).ravel()[base + i0 + i1]
    coords0 = mins[a0] + np.arange(n0) * deltas[a0]
    coords1 = mins[a1] + np.arange(n1) * deltas[a1]
    return coords0, coords1, table

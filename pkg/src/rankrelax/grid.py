"""Per-component lattice over deformation-gradient space.

The lattice discretizes each matrix component F_ij individually with its own
bounds and step.  Nodes are addressed by a row-major multi-index over the
d*d axes in the fixed order (F_11, F_12, ..., F_dd); coordinates are
synthesized lazily from the index, never materialized as a point array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, OutOfDomain, SpecMismatch

_ROUND_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Lattice specification: d and per-component (min, max, delta) arrays.

    ``mins``, ``maxs`` and ``deltas`` have shape (d, d).  A component with
    min == max is degenerate (a single pinned value); its delta is ignored
    beyond positivity.
    """

    d: int
    mins: np.ndarray
    maxs: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        for name in ("mins", "maxs", "deltas"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.d, self.d):
                raise ValueError(f"{name} must have shape ({self.d}, {self.d})")
            object.__setattr__(self, name, arr)
        if np.any(self.maxs < self.mins):
            raise ValueError("component max below min")
        if np.any(self.deltas <= 0):
            raise ValueError("deltas must be positive")
        steps = (self.maxs - self.mins) / self.deltas
        if np.any(np.abs(steps - np.round(steps)) > _ROUND_TOL * np.maximum(1.0, steps)):
            raise ValueError("(max - min) / delta must be integral per component")
        object.__setattr__(
            self, "_shape", tuple(int(round(s)) + 1 for s in steps.ravel())
        )
        strides = np.ones(self.d * self.d, dtype=np.int64)
        for a in range(self.d * self.d - 2, -1, -1):
            strides[a] = strides[a + 1] * self._shape[a + 1]
        strides.setflags(write=False)
        object.__setattr__(self, "_strides", strides)

    @classmethod
    def from_bands(cls, d, diag_min, diag_max, diag_delta,
                   off_min=0.0, off_max=0.0, off_delta=1.0) -> "GridSpec":
        """Common construction: one band for diagonal, one for off-diagonal."""
        mins = np.full((d, d), off_min)
        maxs = np.full((d, d), off_max)
        deltas = np.full((d, d), off_delta)
        idx = np.arange(d)
        mins[idx, idx] = diag_min
        maxs[idx, idx] = diag_max
        deltas[idx, idx] = diag_delta
        return cls(d, mins, maxs, deltas)

    @property
    def shape(self) -> tuple:
        """Nodes per axis, row-major over (F_11, F_12, ..., F_dd)."""
        return self._shape

    @property
    def strides(self) -> np.ndarray:
        """Flat-index stride per axis for the row-major ordering."""
        return self._strides


def node_count(spec: GridSpec) -> int:
    n = 1
    for s in spec.shape:
        n *= s
    return n


def point_at(spec: GridSpec, multi_index) -> np.ndarray:
    """Coordinates of one node as a d x d matrix (lazy synthesis)."""
    idx = np.asarray(multi_index, dtype=np.int64).ravel()
    if idx.shape != (spec.d * spec.d,):
        raise IndexOutOfRange(f"multi-index must have {spec.d * spec.d} entries")
    shape = np.asarray(spec.shape, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= shape):
        raise IndexOutOfRange(f"multi-index {idx.tolist()} outside {spec.shape}")
    return (spec.mins.ravel() + idx * spec.deltas.ravel()).reshape(spec.d, spec.d)


def unravel(spec: GridSpec, flat) -> np.ndarray:
    """Per-axis indices for flat node indices (vectorized)."""
    flat = np.asarray(flat, dtype=np.int64)
    out = np.empty(flat.shape + (spec.d * spec.d,), dtype=np.int64)
    rem = flat
    for a in range(spec.d * spec.d):
        out[..., a] = rem // spec.strides[a]
        rem = rem % spec.strides[a]
    return out


def points_at_flat(spec: GridSpec, flat) -> np.ndarray:
    """Coordinates for a batch of flat indices, shape (..., d, d)."""
    idx = unravel(spec, flat)
    coords = spec.mins.ravel() + idx * spec.deltas.ravel()
    return coords.reshape(idx.shape[:-1] + (spec.d, spec.d))


@dataclass
class ScalarField:
    """Values over all lattice nodes, flat row-major multi-index order."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != node_count(self.spec):
            raise ValueError(
                f"field length {self.values.size} != node count {node_count(self.spec)}"
            )


@dataclass(frozen=True)
class CellDecomposition:
    """Enclosing-cell corner nodes and matching multilinear weights."""

    nodes: np.ndarray    # (m, d*d) multi-indices
    weights: np.ndarray  # (m,)
    flat: np.ndarray     # (m,) flat indices


def _axis_position(spec: GridSpec, f: np.ndarray):
    """Per-axis (base index, fraction); raises OutOfDomain outside the box."""
    vals = np.asarray(f, dtype=float).ravel()
    if vals.shape != (spec.d * spec.d,):
        raise OutOfDomain("query must be a d x d matrix")
    mins, maxs, deltas = spec.mins.ravel(), spec.maxs.ravel(), spec.deltas.ravel()
    tol = _ROUND_TOL * np.maximum(1.0, np.abs(maxs) + np.abs(mins))
    if np.any(vals < mins - tol) or np.any(vals > maxs + tol):
        raise OutOfDomain(f"point outside lattice box: {vals.tolist()}")
    base = np.zeros(spec.d * spec.d, dtype=np.int64)
    frac = np.zeros(spec.d * spec.d)
    for a, n in enumerate(spec.shape):
        if n == 1:
            continue
        t = (vals[a] - mins[a]) / deltas[a]
        i0 = int(np.floor(t))
        i0 = min(max(i0, 0), n - 2)
        base[a] = i0
        frac[a] = t - i0
    return base, frac


def decompose(spec: GridSpec, f) -> CellDecomposition:
    """Corner nodes and barycentric (multilinear) weights of the enclosing cell.

    Fractions within 1e-12 of a node snap to it, so on-node queries return a
    single entry of weight one; zero-weight corners are always dropped.
    """
    base, frac = _axis_position(spec, f)
    snap = 1e-12
    active = []
    for a in range(spec.d * spec.d):
        if frac[a] <= snap:
            frac[a] = 0.0
        elif frac[a] >= 1.0 - snap:
            frac[a] = 0.0
            base[a] += 1
        else:
            active.append(a)
    m = 1 << len(active)
    nodes = np.tile(base, (m, 1))
    weights = np.ones(m)
    for bit, a in enumerate(active):
        hi = (np.arange(m) >> bit) & 1
        nodes[:, a] += hi
        weights *= np.where(hi == 1, frac[a], 1.0 - frac[a])
    flat = nodes @ spec.strides
    return CellDecomposition(nodes=nodes, weights=weights, flat=flat)


def interpolate(field: ScalarField, f) -> float:
    """Multilinear interpolation of the field at f.

    Any contributing +inf node makes the result +inf (sentinel propagation).
    """
    dec = decompose(field.spec, f)
    vals = field.values[dec.flat]
    if np.any(np.isinf(vals)):
        return float("inf")
    return float(dec.weights @ vals)


def check_same_spec(a: ScalarField, b: ScalarField):
    sa, sb = a.spec, b.spec
    same = (
        sa.d == sb.d
        and np.array_equal(sa.mins, sb.mins)
        and np.array_equal(sa.maxs, sb.maxs)
        and np.array_equal(sa.deltas, sb.deltas)
    )
    if not same:
        raise SpecMismatch("fields built over different lattice specifications")


def dump_field_csv(path, field: ScalarField, lamination_order=None):
    """Write `idx,F11,...,Fdd,value,lamination_order` rows in node order."""
    spec = field.spec
    d = spec.d
    header = (
        "idx,"
        + ",".join(f"F{i + 1}{j + 1}" for i in range(d) for j in range(d))
        + ",value,lamination_order"
    )
    n = node_count(spec)
    orders = lamination_order
    with open(path, "w") as fh:
        fh.write(header + "\n")
        block = 65536
        for start in range(0, n, block):
            flats = np.arange(start, min(start + block, n), dtype=np.int64)
            coords = points_at_flat(spec, flats).reshape(len(flats), d * d)
            for row, flat in enumerate(flats):
                comps = ",".join("%.17g" % c for c in coords[row])
                order = -1 if orders is None else int(orders[flat])
                fh.write(f"{flat},{comps},{'%.17g' % field.values[flat]},{order}\n")

"""Discrete rank-one direction sets for the lamination search.

Directions are stored as integer matrices R = a (x) b built from integer
vectors; the lattice step scale is applied by the sweep engine as part of
the line parameterization F + l * delta * R.  Sign symmetry is quotiented
by flipping each matrix so its first nonzero entry is positive, after which
exact duplicate matrices are removed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from .errors import EmptySet


class Provenance(enum.Enum):
    FULL = "full"
    REDUCED = "reduced"


@dataclass(frozen=True)
class DirectionSet:
    """Finite collection of rank-one matrices a (x) b.

    ``a_vectors``/``b_vectors`` have shape (n, d) and ``matrices`` (n, d, d),
    all integer valued, sign-canonical and duplicate free.
    """

    a_vectors: np.ndarray
    b_vectors: np.ndarray
    matrices: np.ndarray
    provenance: Provenance
    params: tuple

    def __len__(self):
        return self.matrices.shape[0]


def _integer_vectors(bound: int, d: int) -> np.ndarray:
    """All nonzero integer d-vectors with max-norm <= bound."""
    rng = np.arange(-bound, bound + 1)
    g = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return g[np.abs(g).max(axis=1) > 0]


def _canonicalize(a: np.ndarray, b: np.ndarray, provenance, params) -> DirectionSet:
    """Sign-canonicalize outer products and drop exact duplicates."""
    mats = np.einsum("ni,nj->nij", a, b)
    flat = mats.reshape(len(mats), -1)
    sign = np.zeros(len(flat), dtype=np.int64)
    for col in range(flat.shape[1]):
        undecided = (sign == 0) & (flat[:, col] != 0)
        sign[undecided] = np.sign(flat[undecided, col])
    flat = flat * sign[:, None]
    a = a * sign[:, None]
    _, keep = np.unique(flat, axis=0, return_index=True)
    keep.sort()
    d = mats.shape[-1]
    return DirectionSet(
        a_vectors=a[keep],
        b_vectors=b[keep],
        matrices=flat[keep].reshape(-1, d, d),
        provenance=provenance,
        params=params,
    )


def reduced_set(k: int, d: int) -> DirectionSet:
    """All a (x) b with integer vectors of max-norm <= k, dedup as above."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vecs = _integer_vectors(k, d)
    na = len(vecs)
    a = np.repeat(vecs, na, axis=0)
    b = np.tile(vecs, (na, 1))
    return _canonicalize(a, b, Provenance.REDUCED, (k, d))


def full_set(delta: float, r: float, d: int) -> DirectionSet:
    """Lattice-coupled direction family.

    Integer images of a, b in delta * Z^d with max-norm bounds
    ``|a| <= 2 d r`` and ``1 - d delta <= |b| <= 1 + d delta``.
    """
    if delta <= 0 or r <= 0:
        raise ValueError("delta and r must be positive")
    a_bound = floor(2 * d * r / delta + _EPS)
    b_lo = ceil((1 - d * delta) / delta - _EPS)
    b_hi = floor((1 + d * delta) / delta + _EPS)
    if a_bound < 1 or b_hi < max(b_lo, 1):
        raise EmptySet(
            f"no admissible direction vectors for delta={delta}, r={r}, d={d}"
        )
    a_all = _integer_vectors(a_bound, d)
    b_all = _integer_vectors(b_hi, d)
    b_all = b_all[np.abs(b_all).max(axis=1) >= max(b_lo, 1)]
    if len(b_all) == 0:
        raise EmptySet(f"no admissible b vectors for delta={delta}, d={d}")
    na, nb = len(a_all), len(b_all)
    a = np.repeat(a_all, nb, axis=0)
    b = np.tile(b_all, (na, 1))
    return _canonicalize(a, b, Provenance.FULL, (delta, r, d))


_EPS = 1e-9


def dump_directions_csv(path, ds: DirectionSet):
    """Write `a1..ad, b1..bd` rows, one direction per row."""
    d = ds.a_vectors.shape[1]
    header = ",".join(f"a{i + 1}" for i in range(d)) + "," + ",".join(
        f"b{i + 1}" for i in range(d)
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for av, bv in zip(ds.a_vectors, ds.b_vectors):
            fh.write(",".join(str(int(x)) for x in av) + ","
                     + ",".join(str(int(x)) for x in bv) + "\n")

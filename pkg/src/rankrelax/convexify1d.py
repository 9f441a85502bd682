"""Linear-time lower convex envelope of sampled 1-D data and line extraction.

The scan sweeps the samples left to right keeping the supporting points of
the lower hull; a slope comparison with >= drops collinear interior points.
+inf ordinates are admitted as sentinels and never appear in the support.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor, inf

import numpy as np

from .errors import TooFewPoints


@dataclass(frozen=True)
class HullSupport:
    """Supporting abscissae/ordinates of the lower convex envelope.

    ``pops`` counts hull-point deletions performed by the scan (work bound
    diagnostics; at most the number of input samples).
    """

    y: np.ndarray
    c: np.ndarray
    pops: int = 0


def convexify(x, w) -> HullSupport:
    """Lower convex envelope support of the polyline (x, w).

    x must be strictly increasing; w entries may be +inf (skipped, never
    supporting).  Runs in linear time.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.size != w.size or x.size < 2:
        raise TooFewPoints("need at least two samples")
    y: list[float] = []
    c: list[float] = []
    pops = 0
    for xi, wi in zip(x, w):
        if wi == inf:
            continue
        while len(y) >= 2 and (
            (c[-1] - c[-2]) * (xi - y[-1]) >= (wi - c[-1]) * (y[-1] - y[-2])
        ):
            y.pop()
            c.pop()
            pops += 1
        y.append(float(xi))
        c.append(float(wi))
    if not y:
        raise TooFewPoints("all ordinates are sentinels")
    return HullSupport(y=np.array(y), c=np.array(c), pops=pops)


def line_points(spec, f, r_matrix, delta):
    """Integer lattice parameters l with F + l*delta*R inside the grid box.

    Returns (ls, points): a contiguous int array containing l = 0 and the
    matching matrices.  Worst case is the single point l = 0.
    """
    f = np.asarray(f, dtype=float).ravel()
    r = np.asarray(r_matrix, dtype=float).ravel()
    mins, maxs = spec.mins.ravel(), spec.maxs.ravel()
    tol = 1e-9
    lo, hi = -np.inf, np.inf
    for a in range(f.size):
        step = delta * r[a]
        if step == 0.0:
            continue
        b1 = (mins[a] - f[a]) / step
        b2 = (maxs[a] - f[a]) / step
        lo = max(lo, min(b1, b2))
        hi = min(hi, max(b1, b2))
    lmin = 0 if lo == -np.inf else min(0, ceil(lo - tol))
    lmax = 0 if hi == np.inf else max(0, floor(hi + tol))
    ls = np.arange(lmin, lmax + 1, dtype=np.int64)
    d = spec.d
    points = f[None, :] + ls[:, None] * (delta * r[None, :])
    return ls, points.reshape(-1, d, d)


def envelope_value_at_zero(support: HullSupport):
    """Hull value at l = 0 with the bracketing support pair and coefficient.

    Returns (value, l_minus, l_plus, lam) where lam * l_plus +
    (1 - lam) * l_minus = 0 and lam weights the l_plus side.
    """
    y, c = support.y, support.c
    if y[0] > 0 or y[-1] < 0:
        raise ValueError("support does not span l = 0")
    j = int(np.searchsorted(y, 0.0, side="right")) - 1
    if y[j] == 0.0:
        return float(c[j]), 0, 0, 1.0
    lm, lp = y[j], y[j + 1]
    lam = -lm / (lp - lm)
    value = lam * c[j + 1] + (1.0 - lam) * c[j]
    return float(value), int(lm), int(lp), float(lam)

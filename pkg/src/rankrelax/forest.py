"""Lamination trees: decomposition of envelope values into weighted leaves.

A tracked relaxation run records, per node and sweep, the minimizing
laminate.  The tree construction resolves a query point through two kinds
of branching: lamination (two children, convex weights, strictly decreasing
sweep index) and interpolation (cell-corner children with barycentric
weights, same sweep index).  Leaves carry the original unrelaxed material,
so recursive evaluation yields consistent energy, stress and tangent.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .engine import LaminationForest
from .errors import HmViolation, MissingForest, OutOfDomain
from .grid import GridSpec, ScalarField, decompose
from .material import (HistoryState, MaterialSpec, StressTangentPair,
                       damage_value, effective_energy, incremental_potential,
                       stress_and_tangent)

_SNAP = 1e-9


@dataclass
class LaminationTree:
    """One node of the decomposition tree.

    ``xi`` is the edge weight from the parent; ``k`` the sweep index
    bookkeeping (laminates are looked up at depth k - 1).  ``branch_kind``
    is "lamination", "interpolation", or None for leaves.
    """

    f: np.ndarray
    xi: float
    k: int
    children: list = dc_field(default_factory=list)
    branch_kind: Optional[str] = None


def _flat_index_of(spec: GridSpec, f: np.ndarray):
    """Flat node index if f lies on the lattice (within snap), else None."""
    vals = np.asarray(f, dtype=float).ravel()
    mins, maxs, deltas = spec.mins.ravel(), spec.maxs.ravel(), spec.deltas.ravel()
    flat = 0
    for a, n in enumerate(spec.shape):
        tol = _SNAP * max(1.0, abs(maxs[a]) + abs(mins[a]))
        if vals[a] < mins[a] - tol or vals[a] > maxs[a] + tol:
            raise OutOfDomain(f"point outside lattice box: {vals.tolist()}")
        t = (vals[a] - mins[a]) / deltas[a]
        i = int(round(t))
        if abs(t - i) > 1e-9 * max(1.0, abs(t)) or i < 0 or i > n - 1:
            return None
        flat += i * spec.strides[a]
    return int(flat)


def buildtree(f, spec: GridSpec, forest: LaminationForest,
              startdepth: int) -> LaminationTree:
    """Decomposition tree of the envelope at f down to unlaminated leaves.

    Lattice nodes branch by their recorded laminate at the highest sweep
    index not exceeding the current depth (children resolved one level
    lower); off-lattice points branch by cell decomposition at the same
    depth.  Terminates at depth 0 or at nodes without a recorded laminate.
    """
    if forest is None:
        raise MissingForest("tree construction requires a tracked run")
    f = np.asarray(f, dtype=float)
    root = LaminationTree(f=f, xi=1.0, k=startdepth + 1)
    stack = [root]
    while stack:
        node = stack.pop()
        depth = node.k - 1
        flat = _flat_index_of(spec, node.f)
        if flat is None:
            dec = decompose(spec, node.f)
            node.branch_kind = "interpolation"
            for pos in range(len(dec.flat)):
                coords = (spec.mins.ravel()
                          + dec.nodes[pos] * spec.deltas.ravel()).reshape(
                              spec.d, spec.d)
                child = LaminationTree(f=coords, xi=float(dec.weights[pos]),
                                       k=depth + 1)
                node.children.append(child)
                stack.append(child)
            continue
        korder = forest.highest_laminate_order(flat, depth)
        if korder == 0:
            continue  # leaf
        di, l1, l2, _lam = forest.laminate_at(flat, korder)
        r = forest.directions.matrices[di].astype(float)
        f_minus = node.f + forest.delta * l1 * r
        f_plus = node.f + forest.delta * l2 * r
        xi = float(np.abs(node.f - f_minus).sum()
                   / np.abs(f_plus - f_minus).sum())
        node.branch_kind = "lamination"
        child_m = LaminationTree(f=f_minus, xi=1.0 - xi, k=korder)
        child_p = LaminationTree(f=f_plus, xi=xi, k=korder)
        node.children.extend([child_m, child_p])
        stack.extend([child_m, child_p])
    return root


def eval_tree(tree: LaminationTree, spec: MaterialSpec,
              hist: HistoryState) -> StressTangentPair:
    """Recursive weighted evaluation: leaves use the unrelaxed material."""
    if not tree.children:
        pair = stress_and_tangent(tree.f, hist, spec)
        w = incremental_potential(tree.f, hist, spec)
        return StressTangentPair(float(w), pair.stress, pair.tangent)
    d = tree.f.shape[-1]
    w = 0.0
    p = np.zeros((d, d))
    a = np.zeros((d, d, d, d))
    for child in tree.children:
        sub = eval_tree(child, spec, hist)
        w += child.xi * sub.energy
        p += child.xi * sub.stress
        a += child.xi * sub.tangent
    return StressTangentPair(w, p, a)


def extract_hm(tree: LaminationTree):
    """Leaves as (xi, F) pairs with path-product weights; verifies the
    hierarchical rank-one condition of every lamination branching."""
    leaves = []

    def collect(node, weight):
        if not node.children:
            leaves.append((weight, node.f))
            return
        if node.branch_kind == "lamination":
            fm, fp = node.children[0].f, node.children[1].f
            sv = np.linalg.svd(fp - fm, compute_uv=False)
            if sv[0] <= 0 or (len(sv) > 1 and sv[1] > 1e-8 * sv[0]):
                raise HmViolation(
                    "lamination branching pair is not rank-one connected"
                )
        for child in node.children:
            collect(child, weight * child.xi)

    collect(tree, 1.0)
    return leaves


@dataclass(frozen=True)
class Microstructure:
    """Leaf phases (F, volume fraction, damage) and lamination branchings."""

    leaves: list        # of dict {f, xi, damage}
    branchings: list    # of dict {normal, level, lam}


def microstructure(tree: LaminationTree, spec: MaterialSpec,
                   hist: HistoryState) -> Microstructure:
    """Phase fractions, damage values, and lamination normals of the tree."""
    leaves = [
        {
            "f": f,
            "xi": float(xi),
            "damage": float(damage_value(
                max(hist.beta_k, float(effective_energy(f, spec))), spec)),
        }
        for xi, f in extract_hm(tree)
    ]
    branchings = []

    def visit(node):
        if node.branch_kind == "lamination":
            fm, fp = node.children[0].f, node.children[1].f
            _, _, vt = np.linalg.svd(fp - fm)
            normal = vt[0]
            for comp in normal:
                if comp != 0:
                    if comp < 0:
                        normal = -normal
                    break
            branchings.append({
                "normal": normal,
                "level": node.k - 1,
                "lam": float(node.children[1].xi),
            })
        for child in node.children:
            visit(child)

    visit(tree)
    return Microstructure(leaves=leaves, branchings=branchings)


def tree_to_dict(tree: LaminationTree) -> dict:
    """JSON-ready nested representation {F, xi, k, children[]}."""
    return {
        "F": np.asarray(tree.f).tolist(),
        "xi": tree.xi,
        "k": tree.k,
        "children": [tree_to_dict(c) for c in tree.children],
    }


def subdifferential_stress(envelope: ScalarField, f) -> np.ndarray:
    """Averaged multilinear-interpolant gradient of the envelope at f.

    Strictly inside a cell this is the exact gradient; on shared faces or
    nodes the gradients of the face-adjacent cells are averaged, and any
    component whose adjacent-cell values bracket a sign change is zeroed.
    """
    spec = envelope.spec
    vals = np.asarray(f, dtype=float).ravel()
    mins, maxs, deltas = spec.mins.ravel(), spec.maxs.ravel(), spec.deltas.ravel()
    naxes = len(spec.shape)
    tol = 1e-9
    base = np.zeros(naxes, dtype=np.int64)
    t = np.zeros(naxes)
    boundary_axes = []
    for a, n in enumerate(spec.shape):
        if vals[a] < mins[a] - tol * max(1.0, abs(mins[a])) or \
           vals[a] > maxs[a] + tol * max(1.0, abs(maxs[a])):
            raise OutOfDomain(f"point outside lattice box: {vals.tolist()}")
        if n == 1:
            continue
        pos = (vals[a] - mins[a]) / deltas[a]
        i = int(np.floor(pos))
        i = min(max(i, 0), n - 2)
        frac = pos - i
        if frac <= tol:
            frac = 0.0
        elif frac >= 1.0 - tol:
            i += 1
            frac = 0.0
        base[a] = i
        t[a] = frac
        if frac == 0.0:
            boundary_axes.append(a)

    def cell_gradient(cell_base, local_t):
        grad = np.zeros(naxes)
        resolved = [a for a in range(naxes) if spec.shape[a] > 1]
        others = lambda a: [b for b in resolved if b != a]
        for a in resolved:
            acc = 0.0
            for bits in range(1 << len(others(a))):
                weight = 1.0
                flat0 = int(np.dot(cell_base, spec.strides))
                flat1 = flat0 + spec.strides[a]
                for pos_b, b in enumerate(others(a)):
                    hi = (bits >> pos_b) & 1
                    weight *= local_t[b] if hi else (1.0 - local_t[b])
                    if hi:
                        flat0 += spec.strides[b]
                        flat1 += spec.strides[b]
                acc += weight * (envelope.values[flat1] - envelope.values[flat0])
            grad[a] = acc / deltas[a]
        return grad

    # enumerate adjacent cells: on each boundary axis the cell may sit left
    # or right of the face (where available)
    choices = []
    for a in boundary_axes:
        opts = []
        if base[a] - 1 >= 0:
            opts.append((a, base[a] - 1, 1.0))
        if base[a] <= spec.shape[a] - 2:
            opts.append((a, base[a], 0.0))
        choices.append(opts)
    grads = []
    count = 1
    for opts in choices:
        count *= len(opts)
    for combo in range(count):
        cell_base = base.copy()
        local_t = t.copy()
        rem = combo
        for opts in choices:
            pick = rem % len(opts)
            rem //= len(opts)
            a, ib, ta = opts[pick]
            cell_base[a] = ib
            local_t[a] = ta
        grads.append(cell_gradient(cell_base, local_t))
    grads = np.array(grads)
    avg = grads.mean(axis=0)
    sign_change = (grads.max(axis=0) > 0) & (grads.min(axis=0) < 0)
    avg[sign_change] = 0.0
    return avg.reshape(spec.d, spec.d)

"""Rank-one convex relaxation of incremental damage potentials on lattices.

Library layout:
  material     incremental damage potentials, stresses, tangents
  grid         per-component lattices over deformation-gradient space
  directions   rank-one search direction sets
  convexify1d  1-D lower convex envelopes along clipped lines
  engine       the global lamination iteration
  forest       lamination trees, microstructure, reconstructed derivatives
  fesolver     two-element perturbation benchmarks (FE)
  config, cli  flat key=value configs and the command-line front end

The hot sweep kernel is a compiled extension when available; a pure-Python
fallback with identical semantics is selected automatically at import.
"""
from ._kernels import BACKEND
from .convexify1d import HullSupport, convexify, envelope_value_at_zero, line_points
from .directions import DirectionSet, Provenance, full_set, reduced_set
from .engine import (LaminationForest, RelaxationConfig, RelaxationResult,
                     Variant, max_decrease, potential_field, relative_error,
                     relax, slice_table)
from .errors import (ConfigError, EmptySet, HmViolation, IndexOutOfRange,
                     IoError, MaterialError, MissingForest, NoConvergence,
                     NonPositiveJacobian, OutOfDomain, RankRelaxError,
                     SingularTangent, SpecMismatch, TooFewPoints)
from .fesolver import (BvpKind, BvpSpec, FdCurve, LinePath, RelaxPolicy,
                       line_eval, solve_descent, solve_newton)
from .forest import (LaminationTree, Microstructure, buildtree, eval_tree,
                     extract_hm, microstructure, subdifferential_stress,
                     tree_to_dict)
from .grid import (CellDecomposition, GridSpec, ScalarField, decompose,
                   dump_field_csv, interpolate, node_count, point_at,
                   points_at_flat)
from .material import (HistoryState, MaterialSpec, Model, StressTangentPair,
                       damage_antiderivative, damage_value, effective_energy,
                       identity_history, incremental_potential,
                       stress_and_tangent)

__version__ = "1.0.0"

__all__ = [
    "BACKEND", "__version__",
    "HullSupport", "convexify", "envelope_value_at_zero", "line_points",
    "DirectionSet", "Provenance", "full_set", "reduced_set",
    "LaminationForest", "RelaxationConfig", "RelaxationResult", "Variant",
    "max_decrease", "potential_field", "relative_error", "relax", "slice_table",
    "ConfigError", "EmptySet", "HmViolation", "IndexOutOfRange", "IoError",
    "MaterialError", "MissingForest", "NoConvergence", "NonPositiveJacobian",
    "OutOfDomain", "RankRelaxError", "SingularTangent", "SpecMismatch",
    "TooFewPoints",
    "BvpKind", "BvpSpec", "FdCurve", "LinePath", "RelaxPolicy",
    "line_eval", "solve_descent", "solve_newton",
    "LaminationTree", "Microstructure", "buildtree", "eval_tree", "extract_hm",
    "microstructure", "subdifferential_stress", "tree_to_dict",
    "CellDecomposition", "GridSpec", "ScalarField", "decompose",
    "dump_field_csv", "interpolate", "node_count", "point_at", "points_at_flat",
    "HistoryState", "MaterialSpec", "Model", "StressTangentPair",
    "damage_antiderivative", "damage_value", "effective_energy",
    "identity_history", "incremental_potential", "stress_and_tangent",
]

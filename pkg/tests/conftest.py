"""Shared fixtures: the two small biaxial benchmark setups.

Both lattices are small enough (2601 / 2025 nodes) that the tracked
relaxation runs in well under a second, so several test modules share one
session-scoped result instead of recomputing it.
"""
import numpy as np
import pytest

from rankrelax import (GridSpec, HistoryState, MaterialSpec, Model,
                       RelaxationConfig, identity_history, potential_field,
                       reduced_set, relax)


@pytest.fixture(scope="session")
def nh_biaxial():
    """Neo-Hooke biaxial setup: material, grid, history, tracked result."""
    mat = MaterialSpec(model=Model.NEOHOOKE, lam=0.5, mu=1.0, d0=0.3, dinf=0.9)
    grid = GridSpec.from_bands(2, 1.0, 3.4, 0.15,
                               off_min=-0.15, off_max=0.15, off_delta=0.15)
    hist = identity_history(2)
    field = potential_field(grid, hist, mat)
    result = relax(field, RelaxationConfig(directions=reduced_set(1, 2),
                                           track_forest=True))
    return mat, grid, hist, result


@pytest.fixture(scope="session")
def stvk_biaxial():
    """St. Venant-Kirchhoff biaxial setup with the finite-sentinel policy."""
    mat = MaterialSpec(model=Model.STVK, lam=0.5, mu=1.0, d0=0.4, dinf=0.99)
    grid = GridSpec.from_bands(2, 1.0, 3.1, 0.15,
                               off_min=-0.15, off_max=0.15, off_delta=0.15)
    hist = identity_history(2)
    field = potential_field(grid, hist, mat, invalid_value=1000.0)
    result = relax(field, RelaxationConfig(directions=reduced_set(1, 2),
                                           track_forest=True))
    return mat, grid, hist, result

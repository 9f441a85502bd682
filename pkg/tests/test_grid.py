"""Lattice: cardinalities, indexing, decomposition, interpolation."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankrelax import (GridSpec, IndexOutOfRange, OutOfDomain, ScalarField,
                       SpecMismatch, decompose, dump_field_csv, interpolate,
                       node_count, point_at, points_at_flat)
from rankrelax.grid import check_same_spec, unravel


# -- exact cardinalities of the benchmark lattices ---------------------------

@pytest.mark.parametrize("d,dmin,dmax,dd,omin,omax,od,expected", [
    # 2-D material-point studies
    (2, 0.1, 3.4, 0.15, -2.55, 2.55, 0.15, 648025),
    (2, 0.1, 2.0, 0.10, -2.00, 2.00, 0.10, 672400),
    # 2-D perturbation benchmarks
    (2, 1.0, 3.4, 0.15, -0.15, 0.15, 0.15, 2601),
    (2, 1.0, 3.1, 0.15, -0.15, 0.15, 0.15, 2025),
    # 3-D studies
    (3, 1.0, 3.4, 0.15, -0.15, 0.15, 0.15, 3581577),
    (3, 0.1, 2.0, 0.10, -0.10, 0.10, 0.10, 5832000),
])
def test_node_counts_exact(d, dmin, dmax, dd, omin, omax, od, expected):
    spec = GridSpec.from_bands(d, dmin, dmax, dd,
                               off_min=omin, off_max=omax, off_delta=od)
    assert node_count(spec) == expected


# -- indexing -----------------------------------------------------------------

def small_spec():
    return GridSpec.from_bands(2, 1.0, 1.6, 0.2,
                               off_min=-0.2, off_max=0.2, off_delta=0.2)


def test_point_at_corners_and_strides():
    spec = small_spec()
    assert spec.shape == (4, 3, 3, 4)
    np.testing.assert_allclose(point_at(spec, [0, 0, 0, 0]),
                               [[1.0, -0.2], [-0.2, 1.0]])
    np.testing.assert_allclose(point_at(spec, [3, 2, 2, 3]),
                               [[1.6, 0.2], [0.2, 1.6]])
    # row-major flat ordering round trip
    n = node_count(spec)
    flats = np.arange(n)
    idx = unravel(spec, flats)
    recon = idx @ spec.strides
    np.testing.assert_array_equal(recon, flats)
    # batched coordinates match the scalar path
    pts = points_at_flat(spec, flats[:10])
    for k in range(10):
        np.testing.assert_allclose(pts[k], point_at(spec, idx[k]))


def test_point_at_out_of_range():
    spec = small_spec()
    with pytest.raises(IndexOutOfRange):
        point_at(spec, [4, 0, 0, 0])
    with pytest.raises(IndexOutOfRange):
        point_at(spec, [0, 0, 0])


def test_spec_validation():
    with pytest.raises(ValueError):
        GridSpec.from_bands(2, 1.0, 0.5, 0.1)          # max below min
    with pytest.raises(ValueError):
        GridSpec.from_bands(2, 1.0, 2.0, -0.1)         # negative delta
    with pytest.raises(ValueError):
        GridSpec.from_bands(2, 1.0, 2.0, 0.13)         # non-integral span


# -- decomposition / interpolation ---------------------------------------------

def test_decompose_on_node_is_single_corner():
    spec = small_spec()
    dec = decompose(spec, [[1.2, 0.0], [0.2, 1.4]])
    assert len(dec.flat) == 1
    assert dec.weights[0] == 1.0


def test_decompose_weights_partition_of_unity():
    spec = small_spec()
    rng = np.random.default_rng(3)
    for _ in range(50):
        f = np.array([[rng.uniform(1.0, 1.6), rng.uniform(-0.2, 0.2)],
                      [rng.uniform(-0.2, 0.2), rng.uniform(1.0, 1.6)]])
        dec = decompose(spec, f)
        assert dec.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(dec.weights > 0)
        # the weighted corner average reproduces the query point
        corners = points_at_flat(spec, dec.flat)
        avg = np.einsum("m,mij->ij", dec.weights, corners)
        np.testing.assert_allclose(avg, f, atol=1e-12)


def test_interpolate_reproduces_affine_fields_exactly():
    """Multilinear interpolation is exact for componentwise-affine data."""
    spec = small_spec()
    coef = np.array([0.7, -1.3, 0.4, 2.1])
    n = node_count(spec)
    coords = points_at_flat(spec, np.arange(n)).reshape(n, 4)
    field = ScalarField(spec=spec, values=coords @ coef + 0.25)
    rng = np.random.default_rng(7)
    for _ in range(30):
        f = np.array([rng.uniform(1.0, 1.6), rng.uniform(-0.2, 0.2),
                      rng.uniform(-0.2, 0.2), rng.uniform(1.0, 1.6)])
        expected = float(f @ coef + 0.25)
        assert interpolate(field, f.reshape(2, 2)) == pytest.approx(
            expected, abs=1e-12)


def test_interpolate_out_of_domain_and_sentinel():
    spec = small_spec()
    field = ScalarField(spec=spec, values=np.zeros(node_count(spec)))
    with pytest.raises(OutOfDomain):
        interpolate(field, [[0.5, 0.0], [0.0, 1.0]])
    # +inf at any contributing corner propagates
    field.values[0] = np.inf
    corner = [[1.0, -0.2], [-0.2, 1.0]]
    assert interpolate(field, corner) == np.inf
    inside = [[1.05, -0.15], [-0.15, 1.05]]
    assert interpolate(field, inside) == np.inf


def test_field_length_and_spec_mismatch():
    spec = small_spec()
    with pytest.raises(ValueError):
        ScalarField(spec=spec, values=np.zeros(5))
    other = GridSpec.from_bands(2, 1.0, 1.6, 0.2)
    a = ScalarField(spec=spec, values=np.zeros(node_count(spec)))
    b = ScalarField(spec=other, values=np.zeros(node_count(other)))
    with pytest.raises(SpecMismatch):
        check_same_spec(a, b)


def test_dump_field_csv_roundtrip(tmp_path):
    spec = GridSpec.from_bands(1, 0.5, 1.5, 0.5)
    vals = np.array([3.25, -1.0, 0.125])
    path = tmp_path / "field.csv"
    dump_field_csv(path, ScalarField(spec=spec, values=vals))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "idx,F11,value,lamination_order"
    parsed = [line.split(",") for line in lines[1:]]
    assert [float(row[1]) for row in parsed] == [0.5, 1.0, 1.5]
    assert [float(row[2]) for row in parsed] == vals.tolist()
    assert [int(row[3]) for row in parsed] == [-1, -1, -1]


# -- property tests ------------------------------------------------------------

@given(st.integers(0, 647), st.integers(0, 647))
@settings(max_examples=60, deadline=None)
def test_unravel_point_consistency(i, j):
    spec = GridSpec.from_bands(2, 0.1, 3.4, 0.15,
                               off_min=-2.55, off_max=2.55, off_delta=0.15)
    n = node_count(spec)
    flat = (i * 1000 + j) % n
    idx = unravel(spec, np.int64(flat))
    f = point_at(spec, idx)
    np.testing.assert_allclose(points_at_flat(spec, np.int64(flat)), f)
    assert int(idx @ spec.strides) == flat


@given(st.floats(1.0, 1.6), st.floats(-0.2, 0.2),
       st.floats(-0.2, 0.2), st.floats(1.0, 1.6))
@settings(max_examples=60, deadline=None)
def test_interpolation_between_field_bounds(a, b, c, d):
    spec = small_spec()
    rng = np.random.default_rng(11)
    field = ScalarField(spec=spec, values=rng.normal(size=node_count(spec)))
    v = interpolate(field, [[a, b], [c, d]])
    assert field.values.min() - 1e-12 <= v <= field.values.max() + 1e-12

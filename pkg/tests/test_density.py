import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molsparse.density import (DensityMap, GridTooLargeError, UniformGrid, grid_for_box, phi,
                               read_volume, sample_grid, write_volume)
from molsparse.pqr import AtomSet, BoundingBox, bounding_box, load_molecule

# e^{1.125}, evaluated independently (mpmath, 30 digits) and frozen
E_1125 = 3.08021684891803124500466


def single(center=(0, 0, 0), r=1.5, decay=0.5):
    return DensityMap(AtomSet([center], [r]), decay)


def test_zero_radius_at_center_is_one():
    assert phi(single(r=1e-300), [0, 0, 0]) == 1.0


def test_scalar_value_at_center():
    assert phi(single(), [0.0, 0.0, 0.0]) == pytest.approx(E_1125, rel=1e-15)


def test_decays_monotonically_far_away():
    dmap = DensityMap(load_molecule('adp'), 0.5)
    far = np.abs(dmap.atoms.centers).max() + 5
    t = np.linspace(far, far + 30, 50)
    vals = phi(dmap, np.column_stack([t, 0.3 * t, -0.2 * t]))
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-100


def test_non_positive_decay_rejected():
    with pytest.raises(ValueError):
        single(decay=0.0)


def test_two_by_two_grid_matches_pointwise():
    dmap = single(center=(0.2, -0.1, 0.3))
    grid = UniformGrid(BoundingBox([-1, -1, -1], [1, 1, 1]), (2, 2, 2))
    field = sample_grid(dmap, grid)
    assert field.values.shape == (2, 2, 2)
    pts = grid.points()
    for n, (i, j, k) in enumerate(np.ndindex(2, 2, 2)):
        assert field.values[i, j, k] == phi(dmap, pts[n])


def test_lattice_is_one_based():
    grid = UniformGrid(BoundingBox([0, 0, 0], [4, 2, 1]), (4, 2, 2))
    x, y, z = grid.axes()
    np.testing.assert_allclose(x, [1, 2, 3, 4])
    np.testing.assert_allclose(y, [1, 2])
    np.testing.assert_allclose(z, [0.5, 1.0])
    np.testing.assert_allclose(grid.origin, [1, 1, 0.5])
    # z varies fastest in storage order
    np.testing.assert_allclose(grid.points()[:3], [[1, 1, 0.5], [1, 1, 1.0], [1, 2, 0.5]])


def test_grid_for_box_counts():
    grid = grid_for_box(BoundingBox([0, 0, 0], [10, 5.5, 3]), 1.0)
    assert grid.counts == (10, 6, 3)
    assert np.all(grid.spacing <= 1.0)


def test_symmetric_placement_gives_symmetric_field():
    atoms = AtomSet([(-1.5, 0, 0), (1.5, 0, 0)], [1.2, 1.2])
    # shifted so the one-based lattice is symmetric about the origin
    grid = UniformGrid(BoundingBox([-5.25, -4.25, -4.25], [4.75, 3.75, 3.75]), (20, 16, 16))
    v = sample_grid(DensityMap(atoms, 0.5), grid).values
    np.testing.assert_allclose(v, v[::-1], rtol=1e-13)
    np.testing.assert_allclose(v, v[:, ::-1, ::-1], rtol=1e-13)


def test_syspep_field_positive_and_finite():
    atoms = load_molecule('syspep')
    grid = grid_for_box(bounding_box(atoms, 5.0), 1.0)
    v = sample_grid(DensityMap(atoms, 0.5), grid).values
    assert np.all(np.isfinite(v)) and np.all(v > 0)


def test_grid_cap():
    grid = UniformGrid(BoundingBox([0, 0, 0], [1, 1, 1]), (10, 10, 10))
    with pytest.raises(GridTooLargeError):
        sample_grid(single(), grid, max_points=999)


def test_cutoff_is_negligible():
    atoms = load_molecule('adp')
    pts = np.random.default_rng(1).uniform(-15, 15, (500, 3))
    exact = phi(DensityMap(atoms, 0.5), pts)
    cut = phi(DensityMap(atoms, 0.5, cutoff=True), pts)
    np.testing.assert_allclose(cut, exact, rtol=0, atol=1e-15)


def test_chunking_does_not_change_values():
    atoms = load_molecule('adp')
    pts = np.random.default_rng(2).uniform(-10, 10, (300, 3))
    dmap = DensityMap(atoms, 0.5)
    np.testing.assert_array_equal(phi(dmap, pts), phi(dmap, pts, block=len(atoms) * 7))


def test_volume_round_trip(tmp_path):
    grid = UniformGrid(BoundingBox([-2, -1, 0], [2, 1, 3]), (4, 3, 5))
    field = sample_grid(single(), grid)
    write_volume(field, tmp_path / 'v.txt')
    again = read_volume(tmp_path / 'v.txt')
    assert again.grid.counts == grid.counts
    np.testing.assert_array_equal(again.values, field.values)
    np.testing.assert_array_equal(again.grid.box.min_corner, grid.box.min_corner)


xyz = st.tuples(*[st.floats(-10, 10, allow_nan=False)] * 3)


@settings(max_examples=60, deadline=None)
@given(xyz, xyz, xyz, st.floats(0.5, 2.5), st.floats(0.5, 2.5), xyz)
def test_additivity_and_translation(c1, c2, x, r1, r2, t):
    both = DensityMap(AtomSet([c1, c2], [r1, r2]), 0.5)
    a = DensityMap(AtomSet([c1], [r1]), 0.5)
    b = DensityMap(AtomSet([c2], [r2]), 0.5)
    assert phi(both, x) == pytest.approx(phi(a, x) + phi(b, x), rel=1e-14, abs=1e-300)
    t = np.array(t)
    moved = DensityMap(AtomSet(np.array([c1, c2]) + t, [r1, r2]), 0.5)
    assert phi(moved, np.array(x) + t) == pytest.approx(phi(both, x), rel=1e-9, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(xyz, st.floats(0.5, 2.0), st.floats(0.1, 0.9), st.floats(0.01, 1.0), st.floats(0.05, 5))
def test_larger_decay_is_smaller_outside_spheres(c, r, d, dd, extra):
    atoms = AtomSet([c], [r])
    x = np.array(c) + np.array([r + extra, 0, 0])
    assert phi(DensityMap(atoms, d + dd), x) <= phi(DensityMap(atoms, d), x)

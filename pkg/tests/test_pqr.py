import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molsparse.pqr import (AtomSet, BoundingBox, EmptyMoleculeError, PQRParseError, bounding_box,
                           bundled_molecules, load_molecule, parse_pqr, read_pqr, write_pqr)


def test_single_record_maps_fields():
    atoms = parse_pqr('ATOM 1 N ALA 1 0.0 0.0 0.0 -0.3 1.5\n')
    assert len(atoms) == 1
    a = atoms.atoms[0]
    assert a.center == (0.0, 0.0, 0.0)
    assert a.radius == 1.5
    assert a.charge == -0.3
    assert a.name == 'N'


def test_non_atom_lines_ignored_and_order_kept():
    text = """REMARK generated
ATOM      1  N   ALA A   1       1.000   2.000   3.000 -0.3000 1.5000

TER
HETATM    2  O   HOH     2      -1.000  -2.000  -3.000 -0.8000 1.4000
END
"""
    atoms = parse_pqr(text.encode())
    assert len(atoms) == 2
    np.testing.assert_array_equal(atoms.centers, [[1, 2, 3], [-1, -2, -3]])
    np.testing.assert_array_equal(atoms.radii, [1.5, 1.4])


def test_only_remarks_is_empty_molecule():
    with pytest.raises(EmptyMoleculeError):
        parse_pqr('REMARK nothing here\nREMARK still nothing\n')


def test_malformed_number_names_line():
    text = 'REMARK x\nATOM 1 N ALA 1 0.0 0.0 0.0 -0.3 1.5\nATOM 2 C ALA 1 0.0 zz 0.0 0.1 1.7\n'
    with pytest.raises(PQRParseError) as err:
        parse_pqr(text)
    assert err.value.line == 3
    assert '3' in str(err.value)


def test_non_positive_radius_names_atom():
    text = 'ATOM 1 N ALA 1 0 0 0 0 1.5\nATOM 2 C ALA 1 1 0 0 0 0.0\n'
    with pytest.raises(ValueError, match='atom 2'):
        parse_pqr(text)


def test_file_object_input():
    atoms = parse_pqr(io.StringIO('ATOM 1 N ALA 1 0.0 0.0 0.0 -0.3 1.5\n'))
    assert len(atoms) == 1


def test_bundled_adp_has_39_atoms():
    assert 'adp' in bundled_molecules()
    assert len(load_molecule('adp')) == 39


def test_bundled_sizes():
    sizes = {name: len(load_molecule(name)) for name in bundled_molecules()}
    assert sizes == {'adp': 39, 'syspep': 163, 'gramicidin2': 552}


def _one(center, r=1.0):
    return AtomSet([center], [r])


def test_box_single_atom():
    box = bounding_box(_one((0, 0, 0)), 0.0)
    np.testing.assert_array_equal(box.min_corner, [-1, -1, -1])
    np.testing.assert_array_equal(box.max_corner, [1, 1, 1])
    box = bounding_box(_one((0, 0, 0)), 5.0)
    np.testing.assert_array_equal(box.min_corner, [-6, -6, -6])
    np.testing.assert_array_equal(box.max_corner, [6, 6, 6])


def test_box_two_atoms():
    box = bounding_box(AtomSet([(0, 0, 0), (10, 0, 0)], [1, 1]), 2.0)
    np.testing.assert_array_equal(box.min_corner, [-3, -3, -3])
    np.testing.assert_array_equal(box.max_corner, [13, 3, 3])


def test_negative_padding_rejected():
    with pytest.raises(ValueError):
        bounding_box(_one((0, 0, 0)), -1.0)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        BoundingBox([0, 0, 0], [1, 0, 1])


def test_round_trip_file(tmp_path):
    atoms = load_molecule('syspep')
    path = tmp_path / 'x.pqr'
    write_pqr(atoms, path)
    again = read_pqr(path)
    np.testing.assert_array_equal(again.centers, atoms.centers)
    np.testing.assert_array_equal(again.radii, atoms.radii)
    np.testing.assert_array_equal(again.charges, atoms.charges)
    assert again.source_name == 'x'


coords = st.floats(-50, 50, allow_nan=False)
atom = st.tuples(st.tuples(coords, coords, coords), st.floats(0.1, 3.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(atom, min_size=1, max_size=20), st.floats(0, 10))
def test_box_contains_spheres_and_round_trips(items, pad):
    centers = np.array([c for c, _ in items])
    radii = np.array([r for _, r in items])
    atoms = AtomSet(centers, radii)
    box = bounding_box(atoms, pad)
    assert np.all(centers - radii[:, None] >= box.min_corner - 1e-12)
    assert np.all(centers + radii[:, None] <= box.max_corner + 1e-12)
    again = parse_pqr(write_pqr(atoms))
    np.testing.assert_array_equal(again.centers, atoms.centers)
    np.testing.assert_array_equal(again.radii, atoms.radii)

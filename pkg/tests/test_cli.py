import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import molsparse
from molsparse.cli import main
from molsparse.erbf import load_model
from molsparse.mesher import read_mesh, write_mesh
from molsparse.pqr import AtomSet, write_pqr

from conftest import cube_mesh

ADP = Path(molsparse.__file__).parent / 'data' / 'adp.pqr'
QUICK = ['--max-iter', '300', '--sparse-iter', '200', '--batch-size', '200']


def sparsify(tmp_path, name='m', *extra):
    out = tmp_path / f'{name}.json'
    assert main(['sparsify', '--input', str(ADP), '--out', str(out), *QUICK, *extra]) == 0
    return out


def test_missing_input_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(['sparsify', '--out', 'x.json'])
    assert err.value.code != 0
    assert '--input' in capsys.readouterr().err


def test_unreadable_input_exits_nonzero(tmp_path, capsys):
    assert main(['sparsify', '--input', str(tmp_path / 'nope.pqr'),
                 '--out', str(tmp_path / 'm.json')]) == 1
    assert 'nope.pqr' in capsys.readouterr().err


def test_malformed_pqr_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / 'bad.pqr'
    bad.write_text('ATOM 1 N ALA 1 0.0 zz 0.0 0.1 1.7\n')
    assert main(['mesh', '--input', str(bad), '--out', str(tmp_path / 'm.obj')]) == 1
    assert 'line 1' in capsys.readouterr().err


def test_sparsify_writes_outputs(tmp_path, capsys):
    out = sparsify(tmp_path)
    printed = capsys.readouterr().out
    assert 'adp: 39 atoms ->' in printed and 'sparse ratio' in printed
    params, meta = load_model(out)
    assert meta['n_atoms'] == 39 and meta['decay'] == 0.5 and meta['config']['seed'] == 42
    trace = (tmp_path / 'm.trace.csv').read_text().splitlines()
    assert trace[0].startswith('iteration,loss,neuron_count') and len(trace) == 301
    manifest = json.loads((tmp_path / 'm.manifest.json').read_text())
    assert manifest['n_neurons'] == len(params)
    assert manifest['sparse_ratio'] == len(params) / 39
    assert manifest['config']['max_iter'] == 300 and manifest['seed'] == 42
    assert manifest['duration_s'] > 0


def test_same_seed_is_byte_identical(tmp_path):
    a = sparsify(tmp_path, 'a')
    b = sparsify(tmp_path, 'b')
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / 'a.trace.csv').read_bytes() == (tmp_path / 'b.trace.csv').read_bytes()


def test_other_seed_differs(tmp_path):
    a = sparsify(tmp_path, 'a')
    b = sparsify(tmp_path, 'b', '--seed', '3')
    assert a.read_bytes() != b.read_bytes()


def test_bad_config_exits_nonzero(tmp_path):
    assert main(['sparsify', '--input', str(ADP), '--out', str(tmp_path / 'm.json'),
                 '--max-iter', '10', '--sparse-iter', '20']) == 1


def test_mesh_pqr_to_obj(tmp_path):
    out = tmp_path / 'adp.obj'
    assert main(['mesh', '--input', str(ADP), '--out', str(out)]) == 0
    assert out.read_text().startswith('v ')
    assert read_mesh(out).is_closed()


def test_mesh_model_matches_map_at_init(tmp_path):
    # a model trained for zero steps is the initialization
    model = tmp_path / 'init.json'
    assert main(['sparsify', '--input', str(ADP), '--out', str(model), '--max-iter', '0',
                 '--sparse-iter', '0']) == 0
    main(['mesh', '--input', str(ADP), '--out', str(tmp_path / 'a.off')])
    main(['mesh', '--input', str(model), '--out', str(tmp_path / 'b.off')])
    a, b = read_mesh(tmp_path / 'a.off'), read_mesh(tmp_path / 'b.off')
    np.testing.assert_array_equal(a.triangles, b.triangles)
    assert np.abs(a.vertices - b.vertices).max() < 1e-9


def test_empty_level_set_warns_and_succeeds(tmp_path):
    out = tmp_path / 'e.obj'
    with pytest.warns(UserWarning, match='empty'):
        assert main(['mesh', '--input', str(ADP), '--out', str(out), '--isovalue', '1e6']) == 0
    assert read_mesh(out).is_empty


def test_compare_same_file(tmp_path):
    path = tmp_path / 'c.obj'
    write_mesh(cube_mesh(), path)
    out = tmp_path / 'r.json'
    assert main(['compare', '--a', str(path), '--b', str(path), '--out', str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc['error_area'] == 0 and doc['error_volume'] == 0 and doc['hausdorff'] < 1e-12


def test_compare_inflated_cube_csv(tmp_path):
    write_mesh(cube_mesh(1.0), tmp_path / 'a.obj')
    write_mesh(cube_mesh(1.5), tmp_path / 'b.off')
    out = tmp_path / 'r.csv'
    assert main(['compare', '--a', str(tmp_path / 'a.obj'), '--b', str(tmp_path / 'b.off'),
                 '--name', 'cube', '--out', str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert rows[0]['molecule'] == 'cube'
    assert float(rows[0]['err_A']) > 0 and float(rows[0]['err_V']) > 0
    assert float(rows[0]['hausdorff']) == pytest.approx(0.5 * 3 ** 0.5)


def test_compare_unreadable_mesh(tmp_path):
    assert main(['compare', '--a', str(tmp_path / 'x.obj'), '--b', str(tmp_path / 'y.obj'),
                 '--out', str(tmp_path / 'r.json')]) == 1


def _manifest(path, name, n, k):
    path.write_text(json.dumps({'kind': 'molsparse-run', 'molecule': name, 'n_atoms': n,
                                'n_neurons': k}))


def test_report_sorted_with_ratios(tmp_path):
    d = tmp_path / 'runs'
    d.mkdir()
    sizes = np.random.default_rng(0).permutation(np.arange(20) * 37 + 40)
    for i, n in enumerate(sizes):
        _manifest(d / f'r{i}.manifest.json', f'mol{i}', int(n), int(n) // 10 + 1)
    (d / 'notes.txt').write_text('ignored')
    (d / 'other.json').write_text('{"kind": "something else"}')
    out = tmp_path / 't.csv'
    assert main(['report', '--manifests', str(d), '--out', str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 20
    natom = [int(r['natom']) for r in rows]
    assert natom == sorted(natom)
    for r in rows:
        assert float(r['sparse_ratio']) == int(r['n_neurons']) / int(r['natom'])


def test_report_single_manifest(tmp_path):
    d = tmp_path / 'runs'
    d.mkdir()
    _manifest(d / 'a.json', 'adp', 39, 5)
    out = tmp_path / 't.csv'
    assert main(['report', '--manifests', str(d), '--out', str(out)]) == 0
    assert out.read_text().splitlines() == ['molecule,natom,n_neurons,sparse_ratio',
                                            f'adp,39,5,{5 / 39!r}']


def test_report_empty_directory(tmp_path):
    (tmp_path / 'empty').mkdir()
    assert main(['report', '--manifests', str(tmp_path / 'empty'),
                 '--out', str(tmp_path / 't.csv')]) == 1
    assert not (tmp_path / 't.csv').exists()


def test_report_real_manifest(tmp_path):
    sparsify(tmp_path)
    out = tmp_path / 't.csv'
    assert main(['report', '--manifests', str(tmp_path), '--out', str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert rows[0]['molecule'] == 'adp' and rows[0]['natom'] == '39'


def test_module_entry_point(tmp_path):
    pqr = tmp_path / 'one.pqr'
    write_pqr(AtomSet([(0, 0, 0)], [1.5]), pqr)
    res = subprocess.run([sys.executable, '-m', 'molsparse', 'mesh', '--input', str(pqr),
                          '--out', str(tmp_path / 'one.obj')], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert 'triangles' in res.stdout

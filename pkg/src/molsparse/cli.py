"""Command line front end: ``molsparse {sparsify,mesh,compare,report}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
import warnings

import numpy as np

from .density import DEFAULT_DECAY, DensityMap, GridTooLargeError
from .erbf import DivergenceError, load_model, save_model
from .mesher import DEFAULT_MESH_SPACING, mesh_from_model, read_mesh, write_mesh
from .metrics import DEFAULT_SAMPLES_PER_AREA, compare_shapes, sparse_stats
from .pqr import BoundingBox, PQRParseError, bounding_box, read_pqr
from .trainer import GUARDS, TrainConfig, train

log = logging.getLogger('molsparse')

MANIFEST_KIND = 'molsparse-run'
REPORT_COLUMNS = ['molecule', 'natom', 'n_neurons', 'sparse_ratio']


class CommandError(Exception):
    """A user-facing failure; the message is printed and the exit status is 1."""


def _stem(path):
    root, ext = os.path.splitext(os.fspath(path))
    return root if ext else os.fspath(path)


def _write_json(doc, path):
    with open(path, 'w') as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write('\n')


def cmd_sparsify(args):
    try:
        atoms = read_pqr(args.input)
    except OSError as exc:
        raise CommandError(f'cannot read {args.input}: {exc}') from exc
    config = TrainConfig(
        max_iter=args.max_iter, sparse_iter=args.sparse_iter, batch_size=args.batch_size,
        tol1=args.tol1, tol2=args.tol2, check_step=args.check_step,
        learning_rate=args.lr, grid_spacing=args.grid_spacing, padding=args.padding,
        band=args.band, seed=args.seed, legacy_init=args.legacy_init, guard=args.guard)
    trace_path = args.trace or _stem(args.out) + '.trace.csv'
    manifest_path = args.manifest or _stem(args.out) + '.manifest.json'

    t0 = time.perf_counter()
    params, trace = train(atoms, config, decay=args.decay, isovalue=args.isovalue)
    duration = time.perf_counter() - t0

    box = bounding_box(atoms, args.padding)
    stats = sparse_stats(len(atoms), len(params))
    metadata = {
        'source': os.path.basename(args.input), 'molecule': atoms.source_name,
        'n_atoms': len(atoms), 'decay': args.decay, 'isovalue': args.isovalue,
        'box_min': box.min_corner.tolist(), 'box_max': box.max_corner.tolist(),
        'config': config.as_dict(),
    }
    save_model(params, args.out, metadata)
    trace.to_csv(trace_path)
    manifest = {
        'kind': MANIFEST_KIND, 'input': os.fspath(args.input), 'molecule': atoms.source_name,
        'n_atoms': len(atoms), 'n_neurons': len(params), 'sparse_ratio': stats.ratio,
        'seed': args.seed, 'decay': args.decay, 'isovalue': args.isovalue,
        'config': config.as_dict(), 'duration_s': duration,
        'outputs': {'model': os.fspath(args.out), 'trace': os.fspath(trace_path)},
    }
    _write_json(manifest, manifest_path)
    print(f'{atoms.source_name}: {len(atoms)} atoms -> {len(params)} neurons '
          f'(sparse ratio {stats.ratio:.4f}) in {duration:.1f} s')
    return 0


def _load_mesh_source(args):
    """Return ``(model, box, isovalue)`` for a PQR file or a saved model."""
    if os.fspath(args.input).lower().endswith('.json'):
        params, meta = load_model(args.input)
        try:
            box = BoundingBox(np.array(meta['box_min']), np.array(meta['box_max']))
        except KeyError as exc:
            raise CommandError(f'{args.input}: model has no bounding box metadata') from exc
        iso = args.isovalue if args.isovalue is not None else meta.get('isovalue', 1.0)
        return params, box, iso
    atoms = read_pqr(args.input)
    decay = args.decay if args.decay is not None else DEFAULT_DECAY
    iso = args.isovalue if args.isovalue is not None else 1.0
    return DensityMap(atoms, decay), bounding_box(atoms, args.padding), iso


def cmd_mesh(args):
    try:
        model, box, iso = _load_mesh_source(args)
    except OSError as exc:
        raise CommandError(f'cannot read {args.input}: {exc}') from exc
    mesh = mesh_from_model(model, box, args.spacing, iso)
    if mesh.is_empty:
        warnings.warn(f'level set {iso} is empty; writing an empty mesh')
    write_mesh(mesh, args.out)
    print(f'{args.out}: {len(mesh.vertices)} vertices, {len(mesh)} triangles')
    return 0


def cmd_compare(args):
    meshes = []
    for path in (args.a, args.b):
        try:
            meshes.append(read_mesh(path))
        except (OSError, ValueError, IndexError) as exc:
            raise CommandError(f'cannot read mesh {path}: {exc}') from exc
    if any(m.is_empty for m in meshes):
        raise CommandError('cannot compare an empty mesh')
    name = args.name or os.path.splitext(os.path.basename(args.a))[0]
    report = compare_shapes(meshes[0], meshes[1], args.samples, molecule=name)
    if os.fspath(args.out).lower().endswith('.csv'):
        report.to_csv(args.out)
    else:
        report.to_json(args.out)
    print(f'err_A {report.error_area:.4f}  err_V {report.error_volume:.4f}  '
          f'hausdorff {report.hausdorff:.4f}')
    return 0


def cmd_report(args):
    if not os.path.isdir(args.manifests):
        raise CommandError(f'{args.manifests} is not a directory')
    rows = []
    for fn in sorted(os.listdir(args.manifests)):
        if not fn.endswith('.json'):
            continue
        try:
            with open(os.path.join(args.manifests, fn)) as fh:
                doc = json.load(fh)
        except (OSError, ValueError):
            continue
        if not isinstance(doc, dict) or doc.get('kind') != MANIFEST_KIND:
            continue
        n, k = int(doc['n_atoms']), int(doc['n_neurons'])
        rows.append([doc.get('molecule') or fn, n, k, k / n])
    if not rows:
        raise CommandError(f'no run manifests found in {args.manifests}')
    rows.sort(key=lambda r: (r[1], r[0]))
    with open(args.out, 'w', newline='') as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)
    print(f'{args.out}: {len(rows)} rows')
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog='molsparse',
                                description='Sparse ellipsoid RBF fitting of Gaussian molecular surfaces.')
    p.add_argument('-v', '--verbose', action='store_true', help='log progress to stderr')
    sub = p.add_subparsers(dest='command', required=True)

    d = TrainConfig()
    s = sub.add_parser('sparsify', help='fit a sparse network to a molecule')
    s.add_argument('--input', required=True, help='PQR file')
    s.add_argument('--out', required=True, help='output model (.json)')
    s.add_argument('--decay', type=float, default=DEFAULT_DECAY)
    s.add_argument('--isovalue', type=float, default=1.0)
    s.add_argument('--grid-spacing', type=float, default=d.grid_spacing)
    s.add_argument('--padding', type=float, default=d.padding)
    s.add_argument('--band', type=float, default=d.band)
    s.add_argument('--max-iter', type=int, default=d.max_iter)
    s.add_argument('--sparse-iter', type=int, default=d.sparse_iter)
    s.add_argument('--batch-size', type=int, default=d.batch_size)
    s.add_argument('--tol1', type=float, default=d.tol1)
    s.add_argument('--tol2', type=float, default=d.tol2)
    s.add_argument('--check-step', type=int, default=d.check_step)
    s.add_argument('--lr', type=float, default=d.learning_rate)
    s.add_argument('--seed', type=int, default=d.seed)
    s.add_argument('--guard', choices=GUARDS, default=d.guard,
                   help='error statistic compared with tol2 (default: %(default)s)')
    s.add_argument('--trace', help='trace CSV (default: <out>.trace.csv)')
    s.add_argument('--manifest', help='run manifest (default: <out>.manifest.json)')
    s.add_argument('--legacy-init', action='store_true',
                   help='initialize d~ = 0.5 instead of sqrt(decay)')
    s.set_defaults(func=cmd_sparsify)

    m = sub.add_parser('mesh', help='triangulate the isosurface of a PQR map or a model')
    m.add_argument('--input', required=True, help='PQR file or model (.json)')
    m.add_argument('--out', required=True, help='output mesh (.obj or .off)')
    m.add_argument('--isovalue', type=float, help='default 1.0, or the value stored in the model')
    m.add_argument('--spacing', type=float, default=DEFAULT_MESH_SPACING)
    m.add_argument('--decay', type=float, help=f'PQR input only (default {DEFAULT_DECAY})')
    m.add_argument('--padding', type=float, default=d.padding, help='PQR input only')
    m.set_defaults(func=cmd_mesh)

    c = sub.add_parser('compare', help='area, volume and Hausdorff comparison of two meshes')
    c.add_argument('--a', required=True, help='reference mesh')
    c.add_argument('--b', required=True, help='compared mesh')
    c.add_argument('--samples', type=float, default=DEFAULT_SAMPLES_PER_AREA,
                   help='surface samples per square Angstrom')
    c.add_argument('--name', help='molecule label in the report')
    c.add_argument('--out', required=True, help='report (.json or .csv)')
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser('report', help='collect run manifests into a table')
    r.add_argument('--manifests', required=True, help='directory of *.manifest.json files')
    r.add_argument('--out', required=True, help='output CSV')
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except CommandError as exc:
        print(f'molsparse {args.command}: {exc}', file=sys.stderr)
    except (PQRParseError, ValueError, DivergenceError, GridTooLargeError) as exc:
        print(f'molsparse {args.command}: {exc}', file=sys.stderr)
    return 1


if __name__ == '__main__':
    sys.exit(main())

"""Shape comparison metrics for triangle meshes.

Surface area, enclosed volume (divergence theorem), a Metro-style sampled
Hausdorff distance and the sparse ratio of a fitted network.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
from scipy.spatial import cKDTree

from .mesher import TriMesh

__all__ = ['OpenMeshWarning', 'ShapeReport', 'SparseStats', 'mesh_area', 'mesh_volume',
           'sample_surface', 'point_triangle_distance', 'point_mesh_distance',
           'hausdorff', 'one_sided_hausdorff', 'compare_shapes', 'sparse_stats',
           'SHAPE_COLUMNS', 'DEFAULT_SAMPLES_PER_AREA']

DEFAULT_SAMPLES_PER_AREA = 10.0
# Kronecker sequence step for nested triangle sampling (plastic-number R2 sequence)
_G = 1.32471795724474602596
_R2 = np.array([1.0 / _G, 1.0 / _G ** 2])

SHAPE_COLUMNS = ['molecule', 'area_orig', 'area_sparse', 'err_A', 'vol_orig',
                  'vol_sparse', 'err_V', 'hausdorff']


class OpenMeshWarning(UserWarning):
    """Volume requested for a mesh that is not closed."""


@dataclass
class ShapeReport:
    area_a: float
    area_b: float
    volume_a: float
    volume_b: float
    error_area: float
    error_volume: float
    hausdorff: float
    molecule: str = ''

    def as_row(self):
        return [self.molecule, self.area_a, self.area_b, self.error_area, self.volume_a,
                self.volume_b, self.error_volume, self.hausdorff]

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=1, sort_keys=True) + '\n'
        if path is not None:
            with open(path, 'w') as fh:
                fh.write(text)
        return text

    def to_csv(self, path, header=True):
        with open(path, 'w', newline='') as fh:
            w = csv.writer(fh)
            if header:
                w.writerow(SHAPE_COLUMNS)
            w.writerow(self.as_row())


@dataclass
class SparseStats:
    n_atoms: int
    n_neurons: int

    @property
    def ratio(self) -> float:
        return self.n_neurons / self.n_atoms


def sparse_stats(n_atoms, n_neurons) -> SparseStats:
    if n_atoms <= 0:
        raise ValueError('n_atoms must be positive')
    return SparseStats(int(n_atoms), int(n_neurons))


def _triangle_areas(mesh):
    v1, v2, v3 = mesh.corners
    return 0.5 * np.linalg.norm(np.cross(v2 - v1, v3 - v1), axis=1)


def mesh_area(mesh: TriMesh) -> float:
    """Sum of triangle areas."""
    if mesh.is_empty:
        return 0.0
    return float(_triangle_areas(mesh).sum())


def mesh_volume(mesh: TriMesh) -> float:
    """Enclosed volume ``|sum v1 . (v2 x v3)| / 6`` of a closed mesh.

    The magnitude is returned, so the winding convention does not matter.
    An :class:`OpenMeshWarning` is issued when the mesh has boundary
    edges; the number is still computed but then depends on the origin.
    """
    if mesh.is_empty:
        return 0.0
    if not mesh.is_closed():
        warnings.warn('mesh is not closed; volume is origin dependent', OpenMeshWarning,
                      stacklevel=2)
    v1, v2, v3 = mesh.corners
    # shift to a local origin to limit cancellation on far-away meshes
    o = mesh.vertices.mean(axis=0)
    v1, v2, v3 = v1 - o, v2 - o, v3 - o
    return float(abs(np.einsum('ij,ij->', v1, np.cross(v2, v3))) / 6.0)


def sample_surface(mesh: TriMesh, samples_per_area=DEFAULT_SAMPLES_PER_AREA, seed=0):
    """Points on ``mesh``: all vertices plus area-proportional face samples.

    Sample sets are nested: the samples drawn at a given density are a
    subset of those drawn at any higher density (same mesh and seed).
    """
    if mesh.is_empty:
        return mesh.vertices.copy()
    areas = _triangle_areas(mesh)
    rng = np.random.default_rng(seed)
    shift = rng.random((len(areas), 2))
    jitter = rng.random(len(areas))
    counts = np.floor(areas * samples_per_area + jitter).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return mesh.vertices.copy()
    tri = np.repeat(np.arange(len(areas)), counts)
    starts = np.cumsum(counts) - counts
    k = np.arange(total) - np.repeat(starts, counts)
    uv = np.mod(shift[tri] + (k + 1)[:, None] * _R2, 1.0)
    fold = uv.sum(axis=1) > 1.0
    uv[fold] = 1.0 - uv[fold]
    v1, v2, v3 = (c[tri] for c in mesh.corners)
    pts = v1 + uv[:, :1] * (v2 - v1) + uv[:, 1:] * (v3 - v1)
    return np.vstack([mesh.vertices, pts])


def point_triangle_distance(p, a, b, c):
    """Exact Euclidean distance from points ``p`` to triangles ``(a, b, c)``.

    All inputs are ``(n, 3)`` arrays (broadcastable).  Uses the Voronoi
    region decomposition of the triangle (vertex, edge and face regions).
    """
    p, a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p, a, b, c)))
    dot = lambda x, y: np.einsum('ij,ij->i', x, y)
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = dot(ab, ap), dot(ac, ap)
    bp = p - b
    d3, d4 = dot(ab, bp), dot(ac, bp)
    cp = p - c
    d5, d6 = dot(ab, cp), dot(ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide='ignore', invalid='ignore'):
        # face region by default
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        closest = a + v[:, None] * ab + w[:, None] * ac

        # edge BC
        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        closest = np.where(m[:, None], b + t[:, None] * (c - b), closest)
        # edge AC
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = d2 / (d2 - d6)
        closest = np.where(m[:, None], a + t[:, None] * ac, closest)
        closest = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, closest)
        # edge AB
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1 / (d1 - d3)
        closest = np.where(m[:, None], a + t[:, None] * ab, closest)
    # later assignments take precedence: A, B, AB, C, AC, BC, face
    closest = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, closest)
    closest = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, closest)
    return np.linalg.norm(p - closest, axis=1)


def point_mesh_distance(points, mesh: TriMesh, k=8) -> np.ndarray:
    """Distance from each point to the nearest point of ``mesh``'s surface.

    Triangle centroids go into a KD-tree.  The ``k`` nearest triangles give
    an upper bound ``U``; any triangle that could be closer has its centroid
    within ``U + R`` where ``R`` is the largest centroid-to-vertex radius,
    and those candidates are checked exactly when the first ``k`` do not
    already cover that ball.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if mesh.is_empty:
        raise ValueError('distance to an empty mesh is undefined')
    v1, v2, v3 = mesh.corners
    cent = (v1 + v2 + v3) / 3.0
    radius = float(np.max(np.linalg.norm(np.stack([v1, v2, v3]) - cent, axis=2)))
    tree = cKDTree(cent)
    k = min(k, len(cent))
    cdist, cidx = tree.query(pts, k=k)
    cdist = cdist.reshape(len(pts), k)
    cidx = cidx.reshape(len(pts), k)
    flat = cidx.ravel()
    d = point_triangle_distance(np.repeat(pts, k, axis=0), v1[flat], v2[flat], v3[flat])
    best = d.reshape(len(pts), k).min(axis=1)

    if k == len(cent):
        return best
    todo = np.nonzero(cdist[:, -1] < best + radius)[0]
    if len(todo):
        cands = tree.query_ball_point(pts[todo], best[todo] + radius + 1e-12)
        sizes = np.array([len(c) for c in cands])
        tri = np.concatenate([np.asarray(c, dtype=np.intp) for c in cands])
        owner = np.repeat(todo, sizes)
        dd = point_triangle_distance(pts[owner], v1[tri], v2[tri], v3[tri])
        starts = np.cumsum(sizes) - sizes
        best[todo] = np.minimum(best[todo], np.minimum.reduceat(dd, starts))
    return best


def one_sided_hausdorff(mesh_a, mesh_b, samples_per_area=DEFAULT_SAMPLES_PER_AREA, seed=0):
    """``max_{p in A} dist(p, B)`` over the sample points of ``mesh_a``."""
    pts = sample_surface(mesh_a, samples_per_area, seed)
    return float(point_mesh_distance(pts, mesh_b).max())


def hausdorff(mesh_a: TriMesh, mesh_b: TriMesh, samples_per_area=DEFAULT_SAMPLES_PER_AREA,
              seed=0) -> float:
    """Symmetric Hausdorff distance estimated from surface samples of both meshes."""
    if mesh_a.is_empty or mesh_b.is_empty:
        raise ValueError('Hausdorff distance needs two non-empty meshes')
    return max(one_sided_hausdorff(mesh_a, mesh_b, samples_per_area, seed),
               one_sided_hausdorff(mesh_b, mesh_a, samples_per_area, seed))


def compare_shapes(original: TriMesh, sparse: TriMesh,
                   samples_per_area=DEFAULT_SAMPLES_PER_AREA, molecule='') -> ShapeReport:
    """Area, volume and Hausdorff comparison; ``original`` is the reference."""
    area_a, area_b = mesh_area(original), mesh_area(sparse)
    vol_a, vol_b = mesh_volume(original), mesh_volume(sparse)
    return ShapeReport(
        area_a=area_a, area_b=area_b, volume_a=vol_a, volume_b=vol_b,
        error_area=abs(area_b - area_a) / area_a if area_a else math.nan,
        error_volume=abs(vol_b - vol_a) / vol_a if vol_a else math.nan,
        hausdorff=hausdorff(original, sparse, samples_per_area),
        molecule=molecule)

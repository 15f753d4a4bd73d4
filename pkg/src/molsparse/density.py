"""Gaussian density map of a molecule and its sampling on uniform grids.

The density is a sum of one isotropic Gaussian per atom,

    phi(x) = sum_i exp(-d * (|x - x_i|^2 - r_i^2)),

and the Gaussian surface is its level set ``phi = c``.

Grids follow a one-based lattice: along x the points are
``a + i * (b - a) / N_x`` for ``i = 1 .. N_x`` (so the upper corner is a
lattice point and the lower one is not).  Field values are stored in an
array of shape ``(N_x, N_y, N_z)`` in C order, i.e. z varies fastest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pqr import AtomSet, BoundingBox

__all__ = ['DEFAULT_DECAY', 'MAX_GRID_POINTS', 'GridTooLargeError', 'DensityMap',
           'UniformGrid', 'ScalarField', 'phi', 'sample_grid', 'grid_for_box',
           'write_volume', 'read_volume']

DEFAULT_DECAY = 0.5
MAX_GRID_POINTS = 50_000_000
# exp(-40) ~ 4e-18: negligible next to an isovalue of order one
CUTOFF_EXPONENT = 40.0


class GridTooLargeError(MemoryError):
    pass


@dataclass
class DensityMap:
    atoms: AtomSet
    decay: float = DEFAULT_DECAY
    cutoff: bool = False

    def __post_init__(self):
        if not self.decay > 0:
            raise ValueError('decay must be positive')

    def __call__(self, points):
        return phi(self, points)


@dataclass
class UniformGrid:
    box: BoundingBox
    counts: tuple

    def __post_init__(self):
        self.counts = tuple(int(n) for n in self.counts)
        if len(self.counts) != 3 or min(self.counts) < 2:
            raise ValueError('grid needs at least 2 points per axis')

    @property
    def spacing(self) -> np.ndarray:
        return self.box.extent / np.array(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def axes(self):
        """The three coordinate vectors of the lattice."""
        h = self.spacing
        return [self.box.min_corner[k] + h[k] * np.arange(1, self.counts[k] + 1)
                for k in range(3)]

    @property
    def origin(self) -> np.ndarray:
        """Coordinates of array index (0, 0, 0)."""
        return self.box.min_corner + self.spacing

    def points(self) -> np.ndarray:
        """All lattice points, ``(size, 3)``, in the field's storage order."""
        gx, gy, gz = np.meshgrid(*self.axes(), indexing='ij')
        return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


@dataclass
class ScalarField:
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.counts)


def grid_for_box(box: BoundingBox, spacing: float) -> UniformGrid:
    """Grid over ``box`` with ``ceil(extent / spacing)`` points per axis.

    The realised spacing is never larger than ``spacing``.
    """
    if not spacing > 0:
        raise ValueError('spacing must be positive')
    counts = np.maximum(np.ceil(box.extent / spacing - 1e-9), 2).astype(int)
    return UniformGrid(box, tuple(counts))


def phi(dmap: DensityMap, points, block=1_000_000) -> np.ndarray:
    """Evaluate the density at ``points`` (shape ``(3,)`` or ``(n, 3)``).

    Returns a float for a single point, otherwise an ``(n,)`` array.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    centers = dmap.atoms.centers
    r2 = dmap.atoms.radii ** 2
    d = dmap.decay
    out = np.empty(len(pts))
    chunk = max(1, block // len(centers))
    for s in range(0, len(pts), chunk):
        diff = pts[s:s + chunk, None, :] - centers[None, :, :]
        expo = -d * (np.einsum('nij,nij->ni', diff, diff) - r2)
        if dmap.cutoff:
            expo[expo < -CUTOFF_EXPONENT] = -np.inf
        out[s:s + chunk] = np.exp(expo).sum(axis=1)
    return float(out[0]) if single else out


def sample_grid(dmap, grid: UniformGrid, max_points=MAX_GRID_POINTS) -> ScalarField:
    """Sample any point-wise callable (density map or network) on ``grid``."""
    if grid.size > max_points:
        raise GridTooLargeError(f'grid of {grid.size} points exceeds cap of {max_points}')
    values = np.asarray(dmap(grid.points()), dtype=float)
    return ScalarField(grid, values)


def write_volume(field: ScalarField, path):
    """Write a text volume: header with counts and box corners, then values (z fastest)."""
    g = field.grid
    with open(path, 'w') as fh:
        fh.write('# molsparse volume, C order (z fastest), lattice a + i*h for i = 1..N\n')
        fh.write('counts {} {} {}\n'.format(*g.counts))
        fh.write('min {!r} {!r} {!r}\n'.format(*g.box.min_corner.tolist()))
        fh.write('max {!r} {!r} {!r}\n'.format(*g.box.max_corner.tolist()))
        np.savetxt(fh, field.values.ravel(), fmt='%.17g')


def read_volume(path) -> ScalarField:
    header = {}
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith('#')]
    for ln in lines[:3]:
        key, *vals = ln.split()
        header[key] = vals
    box = BoundingBox([float(v) for v in header['min']], [float(v) for v in header['max']])
    grid = UniformGrid(box, [int(v) for v in header['counts']])
    values = np.array([float(v) for v in lines[3:]])
    return ScalarField(grid, values)

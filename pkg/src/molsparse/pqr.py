"""Reading and writing PQR files.

A PQR file is a PDB-like text format whose ATOM/HETATM records carry a
position, a partial charge and a radius.  Intermediate columns (atom name,
residue, chain, ...) vary between producers, so records are split on
whitespace and the last five numeric tokens are taken as ``x y z q r``.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

__all__ = ['PQRParseError', 'EmptyMoleculeError', 'Atom', 'AtomSet', 'BoundingBox',
           'parse_pqr', 'read_pqr', 'write_pqr', 'bounding_box', 'load_molecule',
           'bundled_molecules', 'DEFAULT_PADDING']

DEFAULT_PADDING = 5.0
_RECORDS = ('ATOM', 'HETATM')


class PQRParseError(ValueError):
    """Malformed PQR content; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class EmptyMoleculeError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    center: tuple
    radius: float
    charge: float = 0.0
    name: str = ''


@dataclass
class BoundingBox:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        self.min_corner = np.asarray(self.min_corner, dtype=float).reshape(3)
        self.max_corner = np.asarray(self.max_corner, dtype=float).reshape(3)
        if not np.all(self.max_corner > self.min_corner):
            raise ValueError('bounding box must have max_corner > min_corner on every axis')

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    def contains(self, points, tol=0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.min_corner - tol) & (p <= self.max_corner + tol), axis=1)


@dataclass
class AtomSet:
    """An ordered collection of atoms.

    Coordinates and radii are held as arrays (``centers`` is ``(n, 3)``,
    ``radii`` and ``charges`` are ``(n,)``); :attr:`atoms` rebuilds the
    per-atom view on demand.
    """
    centers: np.ndarray
    radii: np.ndarray
    charges: np.ndarray = None
    names: list = field(default_factory=list)
    source_name: str = ''

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        n = len(self.centers)
        if n == 0:
            raise EmptyMoleculeError('molecule has no atoms')
        if self.radii.shape != (n,):
            raise ValueError('radii and centers disagree in length')
        if self.charges is None:
            self.charges = np.zeros(n)
        self.charges = np.asarray(self.charges, dtype=float).reshape(n)
        if not self.names:
            self.names = [''] * n
        if not np.all(np.isfinite(self.centers)):
            bad = int(np.nonzero(~np.isfinite(self.centers).all(axis=1))[0][0])
            raise ValueError(f'atom {bad + 1}: non-finite coordinate')
        bad = np.nonzero(~(self.radii > 0))[0]
        if bad.size:
            raise ValueError(f'atom {bad[0] + 1}: radius must be positive, got {self.radii[bad[0]]}')

    def __len__(self):
        return len(self.centers)

    @property
    def atoms(self):
        return [Atom(tuple(c), float(r), float(q), nm)
                for c, r, q, nm in zip(self.centers, self.radii, self.charges, self.names)]

    @classmethod
    def from_atoms(cls, atoms, source_name=''):
        atoms = list(atoms)
        if not atoms:
            raise EmptyMoleculeError('molecule has no atoms')
        return cls(centers=[a.center for a in atoms], radii=[a.radius for a in atoms],
                   charges=[a.charge for a in atoms], names=[a.name for a in atoms],
                   source_name=source_name)


def _numeric_tail(tokens, count=5):
    """Return the trailing run of ``count`` float-parsable tokens, or None."""
    if len(tokens) < count + 1:
        return None
    tail = tokens[-count:]
    try:
        return [float(t) for t in tail]
    except ValueError:
        return None


def parse_pqr(text, source_name='') -> AtomSet:
    """Parse PQR content into an :class:`AtomSet`.

    Parameters
    ----------
    text : str, bytes or file-like
        The PQR document.
    source_name : str
        Label stored on the result.

    Raises
    ------
    PQRParseError
        A record has fewer than five trailing numeric fields.
    EmptyMoleculeError
        No ATOM/HETATM record was found.
    ValueError
        An atom has a non-positive radius.
    """
    if hasattr(text, 'read'):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode('utf-8', errors='replace')

    centers, radii, charges, names = [], [], [], []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        tokens = line.split()
        if not tokens or tokens[0] not in _RECORDS:
            continue
        values = _numeric_tail(tokens)
        if values is None:
            raise PQRParseError(f'expected x y z charge radius at end of {tokens[0]} record',
                                line=lineno)
        x, y, z, q, r = values
        if not np.isfinite([x, y, z, q, r]).all():
            raise PQRParseError('non-finite numeric field', line=lineno)
        if r <= 0:
            raise ValueError(f'atom {len(radii) + 1} (line {lineno}): '
                             f'radius must be positive, got {r}')
        centers.append((x, y, z))
        charges.append(q)
        radii.append(r)
        names.append(tokens[2] if len(tokens) > 7 else '')
    if not centers:
        raise EmptyMoleculeError(f'no ATOM/HETATM records in {source_name or "input"}')
    return AtomSet(np.array(centers), np.array(radii), np.array(charges), names,
                   source_name=source_name)


def read_pqr(path) -> AtomSet:
    with open(path, 'rb') as fh:
        data = fh.read()
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_pqr(data, source_name=name)


def write_pqr(atoms: AtomSet, path=None) -> str:
    """Serialize ``atoms`` as PQR text; also write it to ``path`` if given.

    Coordinates are written with ``repr`` precision so that re-parsing
    reproduces them exactly.
    """
    lines = []
    for i, (c, q, r, nm) in enumerate(zip(atoms.centers.tolist(), atoms.charges.tolist(),
                                          atoms.radii.tolist(), atoms.names), start=1):
        nm = nm or 'X'
        lines.append(f'ATOM {i:6d} {nm:<4s} MOL {1:4d} '
                     f'{c[0]!r} {c[1]!r} {c[2]!r} {q!r} {r!r}')
    lines.append('END')
    text = '\n'.join(lines) + '\n'
    if path is not None:
        with open(path, 'w') as fh:
            fh.write(text)
    return text


def bounding_box(atoms: AtomSet, padding: float = DEFAULT_PADDING) -> BoundingBox:
    """Axis-aligned box enclosing every atom sphere, grown by ``padding`` on each side."""
    if padding < 0:
        raise ValueError('padding must be non-negative')
    r = atoms.radii[:, None]
    lo = (atoms.centers - r).min(axis=0) - padding
    hi = (atoms.centers + r).max(axis=0) + padding
    return BoundingBox(lo, hi)


def bundled_molecules():
    """Names of the PQR files shipped in ``molsparse/data``."""
    root = resources.files('molsparse') / 'data'
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith('.pqr'))


def load_molecule(name) -> AtomSet:
    """Load a bundled molecule by name (e.g. ``'adp'``)."""
    res = resources.files('molsparse') / 'data' / f'{name}.pqr'
    if not res.is_file():
        raise FileNotFoundError(f'no bundled molecule {name!r}; have {bundled_molecules()}')
    return parse_pqr(res.read_bytes(), source_name=name)

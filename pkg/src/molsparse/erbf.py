"""Ellipsoid radial basis function network.

Each neuron ``i`` carries ten real parameters stored in the substituted
(unconstrained) form that the optimizer works with::

    [w~, d~_1, d~_2, d~_3, c_1, c_2, c_3, alpha, beta, gamma]

The physical output weight is ``w = w~**2`` and the axis scales are
``d_q = d~_q**2``, so non-negativity holds by construction.  A neuron
evaluates

    psi(x) = exp(-|| D^(1/2) R(alpha, beta, gamma) (x - c) ||^2),  D = diag(d~**2)

i.e. the exponent is ``sum_q d_q * z_q**2`` with ``z = R (x - c)``, and
``R = R_z(gamma) R_y(beta) R_x(alpha)``.  The network output is
``Psi(x) = sum_i w~_i**2 psi_i(x)``.

Parameters are kept neuron-major in an ``(N, 10)`` table; the flat vector
used by the optimizer is ``table.ravel()``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

try:
    from . import _kernels
except ImportError:  # numba missing
    _kernels = None

__all__ = ['N_PARAMS', 'DivergenceError', 'ErbfNeuron', 'ErbfParams', 'LossWeights',
           'rotation_matrix', 'rotation_matrices', 'psi', 'forward', 'residuals',
           'loss', 'loss_gradient', 'loss_and_gradient', 'save_model', 'load_model',
           'model_to_dict', 'model_from_dict']

N_PARAMS = 10
W = 0
D = slice(1, 4)
C = slice(4, 7)
ANG = slice(7, 10)


def _use_kernels(backend):
    if backend is None:
        return _kernels is not None
    if backend == 'numba':
        if _kernels is None:
            raise ImportError('numba backend requested but numba is not installed')
        return True
    if backend == 'numpy':
        return False
    raise ValueError(f'unknown backend {backend!r}')


class DivergenceError(FloatingPointError):
    """Raised when the loss or its gradient stops being finite."""


@dataclass(frozen=True)
class ErbfNeuron:
    w_tilde: float
    d_tilde: tuple
    center: tuple
    angles: tuple

    def as_row(self):
        return np.r_[self.w_tilde, self.d_tilde, self.center, self.angles].astype(float)


class ErbfParams:
    """Parameter table of an ellipsoid RBF network.

    Calling the object evaluates the network, so it can be handed to
    :func:`molsparse.density.sample_grid` like a density map.
    """

    def __init__(self, table):
        table = np.array(table, dtype=float)
        if table.ndim == 1:
            table = table.reshape(-1, N_PARAMS)
        if table.ndim != 2 or table.shape[1] != N_PARAMS:
            raise ValueError(f'parameter table must have {N_PARAMS} columns')
        self.table = table

    @classmethod
    def from_neurons(cls, neurons):
        return cls(np.array([n.as_row() for n in neurons]).reshape(-1, N_PARAMS))

    @classmethod
    def from_physical(cls, weights, axes, centers, angles):
        """Build from non-negative physical weights and axis scales."""
        weights = np.asarray(weights, dtype=float)
        axes = np.asarray(axes, dtype=float).reshape(-1, 3)
        if np.any(weights < 0) or np.any(axes < 0):
            raise ValueError('physical weights and axis scales must be non-negative')
        return cls(np.column_stack([np.sqrt(weights), np.sqrt(axes),
                                    np.asarray(centers, float).reshape(-1, 3),
                                    np.asarray(angles, float).reshape(-1, 3)]))

    def __len__(self):
        return len(self.table)

    def __call__(self, points):
        return forward(self, points)

    def __eq__(self, other):
        return isinstance(other, ErbfParams) and np.array_equal(self.table, other.table)

    def __repr__(self):
        return f'ErbfParams(n_neurons={len(self)})'

    def copy(self):
        return ErbfParams(self.table.copy())

    def neuron(self, i) -> ErbfNeuron:
        row = self.table[i]
        return ErbfNeuron(float(row[W]), tuple(row[D]), tuple(row[C]), tuple(row[ANG]))

    @property
    def neurons(self):
        return [self.neuron(i) for i in range(len(self))]

    @property
    def n_params(self) -> int:
        return self.table.size

    def flat(self) -> np.ndarray:
        return self.table.ravel().copy()

    @property
    def w_tilde(self):
        return self.table[:, W]

    @property
    def d_tilde(self):
        return self.table[:, D]

    @property
    def centers(self):
        return self.table[:, C]

    @property
    def angles(self):
        return self.table[:, ANG]

    @property
    def weights(self):
        """Physical output weights ``w~**2``."""
        return self.table[:, W] ** 2

    @property
    def axes(self):
        """Physical axis scales ``d~**2``."""
        return self.table[:, D] ** 2


@dataclass(frozen=True)
class LossWeights:
    rho1: float = 1.0
    rho2: float = 1.0

    def __post_init__(self):
        if self.rho1 < 0 or self.rho2 < 0:
            raise ValueError('loss weights must be non-negative')
        if self.rho1 == 0 and self.rho2 == 0:
            raise ValueError('rho1 and rho2 cannot both be zero')


# -- rotations ---------------------------------------------------------------

def rotation_matrix(angles) -> np.ndarray:
    """Rotation ``R_z(gamma) @ R_y(beta) @ R_x(alpha)`` for ``angles = (alpha, beta, gamma)``."""
    return rotation_matrices(np.asarray(angles, dtype=float).reshape(1, 3))[0]


def rotation_matrices(angles, derivatives=False):
    """Closed-form rotation matrices for an ``(N, 3)`` array of Euler angles.

    With ``derivatives=True`` also return the partial derivatives with
    respect to alpha, beta and gamma, each ``(N, 3, 3)``.
    """
    angles = np.asarray(angles, dtype=float).reshape(-1, 3)
    ca, cb, cg = np.cos(angles).T
    sa, sb, sg = np.sin(angles).T
    R = np.empty((len(angles), 3, 3))
    R[:, 0, 0] = cb * cg
    R[:, 0, 1] = -ca * sg + sa * sb * cg
    R[:, 0, 2] = sa * sg + ca * cg * sb
    R[:, 1, 0] = cb * sg
    R[:, 1, 1] = ca * cg + sa * sb * sg
    R[:, 1, 2] = -sa * cg + ca * sb * sg
    R[:, 2, 0] = -sb
    R[:, 2, 1] = cb * sa
    R[:, 2, 2] = ca * cb
    if not derivatives:
        return R

    z = np.zeros_like(ca)
    dA = np.stack([
        np.stack([z, sa * sg + ca * sb * cg, ca * sg - sa * cg * sb], -1),
        np.stack([z, -sa * cg + ca * sb * sg, -ca * cg - sa * sb * sg], -1),
        np.stack([z, cb * ca, -sa * cb], -1),
    ], axis=1)
    dB = np.stack([
        np.stack([-sb * cg, sa * cb * cg, ca * cg * cb], -1),
        np.stack([-sb * sg, sa * cb * sg, ca * cb * sg], -1),
        np.stack([-cb, -sb * sa, -ca * sb], -1),
    ], axis=1)
    dG = np.stack([
        np.stack([-cb * sg, -ca * cg - sa * sb * sg, sa * cg - ca * sg * sb], -1),
        np.stack([cb * cg, -ca * sg + sa * sb * cg, sa * sg + ca * sb * cg], -1),
        np.stack([z, z, z], -1),
    ], axis=1)
    return R, dA, dB, dG


# -- evaluation --------------------------------------------------------------

def _activations(table, points):
    """Return psi ``(B, N)`` and the intermediates needed by the gradient."""
    R = rotation_matrices(table[:, ANG])
    s = table[:, D]
    y = points[:, None, :] - table[None, :, C]
    z = np.einsum('nij,bnj->bni', R, y)
    u = s[None] * z
    act = np.exp(-np.einsum('bni,bni->bn', u, u))
    return act, y, z, u, R, s


def psi(neuron, x) -> float:
    """Activation of a single neuron at point(s) ``x``."""
    row = neuron.as_row() if isinstance(neuron, ErbfNeuron) else np.asarray(neuron, float)
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    act = _activations(row.reshape(1, N_PARAMS), pts)[0][:, 0]
    return float(act[0]) if np.ndim(x) == 1 else act


def _forward_numpy(table, pts, block=1_000_000):
    w = table[:, W] ** 2
    out = np.empty(len(pts))
    chunk = max(1, block // max(len(table), 1))
    for s in range(0, len(pts), chunk):
        out[s:s + chunk] = _activations(table, pts[s:s + chunk])[0] @ w
    return out


def forward(params: ErbfParams, points, backend=None):
    """Network output at ``points`` (``(3,)`` or ``(n, 3)``)."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.ascontiguousarray(np.atleast_2d(pts))
    if _use_kernels(backend):
        out = _kernels.forward_kernel(np.ascontiguousarray(params.table), pts)
    else:
        out = _forward_numpy(params.table, pts)
    return float(out[0]) if single else out


def residuals(params: ErbfParams, points, targets, backend=None) -> np.ndarray:
    """Point-wise error ``Psi(x_m) - target_m``."""
    return forward(params, points, backend) - np.asarray(targets, dtype=float)


def _check(value, what):
    if not np.all(np.isfinite(value)):
        raise DivergenceError(f'non-finite {what}; training diverged')
    return value


def _regularizer(table):
    with np.errstate(over='ignore', invalid='ignore'):
        return float((table[:, W] ** 2).sum() + (table[:, D] ** 2).sum())


def loss(params: ErbfParams, points, targets, weights: LossWeights = LossWeights(),
         backend=None) -> float:
    """``rho1 * (sum w~^2 + sum d~^2) + rho2 * sum_m (Psi(x_m) - target_m)^2``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        raise ValueError('empty batch')
    value = weights.rho1 * _regularizer(params.table)
    if weights.rho2:
        r = residuals(params, pts, targets, backend)
        value += weights.rho2 * float(r @ r)
    return float(_check(value, 'loss'))


def _data_term_numpy(table, pts, targets, rho2):
    wt = table[:, W]
    grad = np.zeros_like(table)
    act, y, z, u, R, s = _activations(table, pts)
    r = act @ (wt ** 2) - targets
    rw = 2.0 * rho2 * r
    grad[:, W] = 2.0 * wt * (rw @ act)
    # a[b, i] = dL/dPsi_b * w_i * psi_bi; dL/dtheta = -sum_b a * dE/dtheta
    a = rw[:, None] * act * (wt ** 2)[None]
    au = a[:, :, None] * u
    grad[:, D] = -2.0 * np.einsum('bni,bni->ni', au, z)
    su = s * au.sum(axis=0)
    grad[:, C] = 2.0 * np.einsum('nji,nj->ni', R, su)
    G = np.einsum('bnj,bnk->njk', au, y) * s[:, :, None]
    _, dA, dB, dG = rotation_matrices(table[:, ANG], derivatives=True)
    grad[:, 7] = -2.0 * np.einsum('njk,njk->n', dA, G)
    grad[:, 8] = -2.0 * np.einsum('njk,njk->n', dB, G)
    grad[:, 9] = -2.0 * np.einsum('njk,njk->n', dG, G)
    return rho2 * float(r @ r), grad


def loss_and_gradient(params: ErbfParams, points, targets,
                      weights: LossWeights = LossWeights(), backend=None):
    """Loss value and its gradient, a flat vector in neuron-major order.

    ``backend`` selects ``'numba'`` or ``'numpy'``; the default uses numba
    when it is installed.
    """
    table = np.ascontiguousarray(params.table)
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    targets = np.ascontiguousarray(targets, dtype=float)
    if len(pts) == 0:
        raise ValueError('empty batch')
    value = weights.rho1 * _regularizer(table)
    grad = np.zeros_like(table)
    if weights.rho2:
        if _use_kernels(backend):
            _, dA, dB, dG = rotation_matrices(table[:, ANG], derivatives=True)
            data, grad = _kernels.loss_grad_kernel(table, pts, targets, float(weights.rho2),
                                                   dA, dB, dG)
        else:
            data, grad = _data_term_numpy(table, pts, targets, weights.rho2)
        value += data
    grad[:, W] += 2.0 * weights.rho1 * table[:, W]
    grad[:, D] += 2.0 * weights.rho1 * table[:, D]
    _check(value, 'loss')
    return float(value), _check(grad.ravel(), 'gradient')


def loss_gradient(params: ErbfParams, points, targets,
                  weights: LossWeights = LossWeights()) -> np.ndarray:
    return loss_and_gradient(params, points, targets, weights)[1]


# -- serialization -----------------------------------------------------------

def model_to_dict(params: ErbfParams, metadata=None) -> dict:
    neurons = []
    for row in params.table:
        neurons.append({
            'weight': float(row[W] ** 2),
            'axes': [float(v) for v in row[D] ** 2],
            'center': [float(v) for v in row[C]],
            'angles': [float(v) for v in row[ANG]],
        })
    return {'format': 'molsparse-erbf', 'version': 1, 'n_neurons': len(params),
            'metadata': dict(metadata or {}), 'neurons': neurons}


def model_from_dict(doc):
    if doc.get('format') != 'molsparse-erbf':
        raise ValueError('not a molsparse ERBF model document')
    neurons = doc['neurons']
    if not neurons:
        raise ValueError('model has no neurons')
    params = ErbfParams.from_physical([n['weight'] for n in neurons],
                                      [n['axes'] for n in neurons],
                                      [n['center'] for n in neurons],
                                      [n['angles'] for n in neurons])
    return params, doc.get('metadata', {})


def save_model(params: ErbfParams, path, metadata=None):
    """Write a JSON model document with physical weights ``w~^2`` and axes ``d~^2``."""
    with open(path, 'w') as fh:
        json.dump(model_to_dict(params, metadata), fh, indent=1, sort_keys=True)
        fh.write('\n')


def load_model(path):
    """Read a model written by :func:`save_model`; returns ``(params, metadata)``."""
    with open(path) as fh:
        return model_from_dict(json.load(fh))

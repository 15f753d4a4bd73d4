"""Sparse fitting of a Gaussian density map by an ellipsoid RBF network.

The fit starts from one neuron per atom, initialized so that the network
reproduces the density exactly, and then runs batch ADAM on

    rho1 * (sum w~^2 + sum d~^2) + rho2 * sum_m (Psi(x_m) - phi(x_m))^2

while periodically removing neurons whose weight has collapsed.  The
``(rho1, rho2)`` pair follows a schedule:

* sparse phase (iterations ``1 .. sparse_iter``): ``(rho1_initial, rho2_initial)``,
  switched to ``(0, 1)`` until the next checkpoint whenever the training-set
  error exceeds ``tol2`` at a checkpoint;
* refinement phase (after ``sparse_iter``): ``(0, 1)`` with pruning off.

The error statistic compared with ``tol2`` is chosen by ``TrainConfig.guard``.
The default ``'rms'`` uses the root-mean-square residual.  ``'max'`` uses
the largest pointwise residual; on real molecules a handful of interior
points keep that above 0.1 throughout, so the sparsity term is never
active and nothing is pruned.

The trace records, per iteration, the batch value of the phase objective
(``(rho1_initial, rho2_initial)`` weights during the sparse phase, ``(0, 1)``
after it) together with the ``rho1`` actually used for the step, so the
drop of the sparsity term at ``sparse_iter`` shows up in the loss curve.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .density import DensityMap, grid_for_box, sample_grid
from .erbf import (ErbfParams, LossWeights, DivergenceError, _regularizer, forward,
                   loss_and_gradient)
from .pqr import AtomSet, bounding_box

__all__ = ['TrainConfig', 'TrainingSet', 'AdamState', 'TraceRecord', 'TrainTrace',
           'EmptyTrainingSetError', 'DegenerateModelError', 'build_training_set',
           'initialize', 'prune', 'adam_step', 'max_error', 'training_errors', 'train',
           'TrainingDiverged', 'GUARDS']

log = logging.getLogger(__name__)

GUARDS = ('rms', 'max')


class EmptyTrainingSetError(ValueError):
    pass


class DegenerateModelError(RuntimeError):
    pass


class TrainingDiverged(DivergenceError):
    """Divergence during :func:`train`; the partial trace is attached as ``trace``."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class TrainConfig:
    max_iter: int = 10000
    sparse_iter: int = 6000
    batch_size: int = 1000
    tol1: float = 1e-3
    tol2: float = 0.1
    check_step: int = 20
    learning_rate: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    rho1_initial: float = 1.0
    rho2_initial: float = 1.0
    grid_spacing: float = 1.0
    padding: float = 5.0
    band: float = 1.0
    seed: int = 42
    legacy_init: bool = False
    guard: str = 'rms'

    def __post_init__(self):
        if self.guard not in GUARDS:
            raise ValueError(f'guard must be one of {GUARDS}')
        if self.sparse_iter > self.max_iter:
            raise ValueError('sparse_iter must not exceed max_iter')
        if self.batch_size < 1 or self.check_step < 1:
            raise ValueError('batch_size and check_step must be positive')
        for name in ('tol1', 'tol2', 'learning_rate', 'grid_spacing', 'band'):
            if not getattr(self, name) > 0:
                raise ValueError(f'{name} must be positive')
        if self.padding < 0:
            raise ValueError('padding must be non-negative')

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class TrainingSet:
    points: np.ndarray
    targets: np.ndarray
    isovalue: float
    band: float = 1.0

    def __len__(self):
        return len(self.points)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    loss: float
    neuron_count: int
    max_error: float = math.nan
    rms_error: float = math.nan
    rho1: float = math.nan


CSV_COLUMNS = ['iteration', 'loss', 'neuron_count', 'max_error', 'rms_error', 'rho1']


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def append(self, *args, **kwargs):
        self.records.append(TraceRecord(*args, **kwargs))

    @property
    def iterations(self):
        return np.array([r.iteration for r in self.records])

    @property
    def losses(self):
        return np.array([r.loss for r in self.records])

    @property
    def neuron_counts(self):
        return np.array([r.neuron_count for r in self.records])

    @property
    def max_errors(self):
        return np.array([r.max_error for r in self.records])

    @property
    def rms_errors(self):
        return np.array([r.rms_error for r in self.records])

    @property
    def rho1s(self):
        return np.array([r.rho1 for r in self.records])

    def to_csv(self, path):
        with open(path, 'w', newline='') as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            opt = lambda x: '' if math.isnan(x) else repr(x)
            for r in self.records:
                w.writerow([r.iteration, repr(r.loss), r.neuron_count,
                            opt(r.max_error), opt(r.rms_error), opt(r.rho1)])

    @classmethod
    def from_csv(cls, path):
        trace = cls()
        with open(path, newline='') as fh:
            for row in csv.DictReader(fh):
                opt = lambda k: float(row[k]) if row.get(k) else math.nan
                trace.append(int(row['iteration']), float(row['loss']),
                             int(row['neuron_count']), opt('max_error'), opt('rms_error'),
                             opt('rho1'))
        return trace


def build_training_set(dmap: DensityMap, config: TrainConfig = TrainConfig(),
                       isovalue: float = 1.0) -> TrainingSet:
    """Grid points of the padded box whose density lies within ``band`` of ``isovalue``."""
    if not isovalue > 0:
        raise ValueError('isovalue must be positive')
    box = bounding_box(dmap.atoms, config.padding)
    grid = grid_for_box(box, config.grid_spacing)
    field_ = sample_grid(dmap, grid)
    pts = grid.points()
    vals = field_.values.ravel()
    keep = np.abs(vals - isovalue) <= config.band
    if not keep.any():
        raise EmptyTrainingSetError(
            f'no grid point has |phi - {isovalue}| <= {config.band}; '
            'use a wider band or a finer grid')
    return TrainingSet(pts[keep], vals[keep], float(isovalue), float(config.band))


def initialize(atoms: AtomSet, decay: float = 0.5, legacy: bool = False) -> ErbfParams:
    """One neuron per atom reproducing ``phi`` exactly.

    Centers sit on the atoms, angles are zero, ``d~ = sqrt(decay)`` and
    ``w~ = exp(decay * r^2 / 2)`` so that ``w~^2 psi = exp(-decay (|x-c|^2 - r^2))``.
    ``legacy=True`` instead sets ``d~ = 0.5`` literally, which only matches
    the density when ``decay = 1/16``.
    """
    if not decay > 0:
        raise ValueError('decay must be positive')
    n = len(atoms)
    table = np.zeros((n, 10))
    table[:, 0] = np.exp(decay * atoms.radii ** 2 / 2.0)
    table[:, 1:4] = 0.5 if legacy else math.sqrt(decay)
    table[:, 4:7] = atoms.centers
    return ErbfParams(table)


def prune(params: ErbfParams, adam: AdamState, tol1: float, keep_last=True):
    """Drop neurons with ``|w~| < tol1`` along with their optimizer slots.

    Returns ``(params, adam, removed_count)``.  With ``keep_last`` the
    largest-weight neuron survives even if every weight is below ``tol1``;
    otherwise that case raises :class:`DegenerateModelError`.
    """
    if not tol1 > 0:
        raise ValueError('tol1 must be positive')
    keep = np.abs(params.w_tilde) >= tol1
    if not keep.any():
        if not keep_last:
            raise DegenerateModelError('every neuron fell below the pruning threshold')
        keep[np.argmax(np.abs(params.w_tilde))] = True
    removed = int((~keep).sum())
    if removed == 0:
        return params, adam, 0
    slots = np.repeat(keep, params.table.shape[1])
    return (ErbfParams(params.table[keep]),
            AdamState(adam.m[slots], adam.v[slots], adam.step_count), removed)


def adam_step(params: ErbfParams, adam: AdamState, gradient, config: TrainConfig = TrainConfig()):
    """One bias-corrected ADAM update; returns new ``(params, adam)``."""
    g = np.asarray(gradient, dtype=float)
    if g.shape != (params.n_params,):
        raise ValueError('gradient length does not match the parameter count')
    if not np.all(np.isfinite(g)):
        raise DivergenceError('non-finite gradient')
    b1, b2 = config.beta1, config.beta2
    k = adam.step_count + 1
    m = b1 * adam.m + (1.0 - b1) * g
    v = b2 * adam.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1 ** k)
    v_hat = v / (1.0 - b2 ** k)
    flat = params.flat() - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return ErbfParams(flat), AdamState(m, v, k)


def max_error(params: ErbfParams, tset: TrainingSet) -> float:
    """Largest ``|Psi(x_m) - phi(x_m)|`` over the training set."""
    return float(np.max(np.abs(forward(params, tset.points) - tset.targets)))


def training_errors(params: ErbfParams, tset: TrainingSet):
    """``(max, rms)`` of the residual over the whole training set."""
    r = forward(params, tset.points) - tset.targets
    return float(np.max(np.abs(r))), float(np.sqrt(np.mean(r * r)))


def _batches(n, size, rng):
    """Endless stream of index batches from per-epoch shuffles."""
    size = min(size, n)
    pool = np.empty(0, dtype=np.intp)
    while True:
        while len(pool) < size:
            pool = np.concatenate([pool, rng.permutation(n)])
        yield pool[:size]
        pool = pool[size:]


def train(atoms: AtomSet, config: TrainConfig = TrainConfig(), decay: float = 0.5,
          isovalue: float = 1.0, tset: TrainingSet = None, callback=None):
    """Run the sparse optimization; returns ``(params, trace)``.

    ``tset`` may be passed to reuse a training set built earlier.  The
    optional ``callback(iteration, params)`` is invoked after every
    checkpoint.
    """
    dmap = DensityMap(atoms, decay)
    if tset is None:
        tset = build_training_set(dmap, config, isovalue)
    params = initialize(atoms, decay, legacy=config.legacy_init)
    adam = AdamState.zeros(params.n_params)
    rng = np.random.default_rng(config.seed)
    batches = _batches(len(tset), config.batch_size, rng)
    trace = TrainTrace()

    sparse = LossWeights(config.rho1_initial, config.rho2_initial)
    accurate = LossWeights(0.0, 1.0)
    weights = sparse
    log.info('training %s: %d neurons, %d training points', atoms.source_name,
             len(params), len(tset))

    for it in range(1, config.max_iter + 1):
        in_sparse_phase = it <= config.sparse_iter
        err = rms = math.nan
        if it % config.check_step == 0:
            if in_sparse_phase:
                params, adam, removed = prune(params, adam, config.tol1)
                if removed:
                    log.debug('iter %d: pruned %d, %d left', it, removed, len(params))
            err, rms = training_errors(params, tset)
            if in_sparse_phase:
                stat = rms if config.guard == 'rms' else err
                weights = accurate if stat > config.tol2 else sparse
            if callback is not None:
                callback(it, params)
        if not in_sparse_phase:
            weights = accurate

        idx = next(batches)
        try:
            value, grad = loss_and_gradient(params, tset.points[idx], tset.targets[idx], weights)
            # report the phase objective even on steps where the guard dropped rho1
            phase = sparse if in_sparse_phase else accurate
            if weights is not phase:
                reg = _regularizer(params.table)
                data = (value - weights.rho1 * reg) / weights.rho2
                value = phase.rho1 * reg + phase.rho2 * data
            count = len(params)
            params, adam = adam_step(params, adam, grad, config)
        except DivergenceError as exc:
            raise TrainingDiverged(f'iteration {it}: {exc}', trace) from exc
        trace.append(it, value, count, err, rms, weights.rho1)

    return params, trace

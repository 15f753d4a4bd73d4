"""Fused loops for network evaluation and the loss gradient.

These mirror the vectorized numpy code in :mod:`molsparse.erbf` and are
used by it when numba is importable.  Reductions run in a fixed order so
results are reproducible run to run.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _rotation(a, b, g, R):
    ca, sa = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    cg, sg = math.cos(g), math.sin(g)
    R[0, 0] = cb * cg
    R[0, 1] = -ca * sg + sa * sb * cg
    R[0, 2] = sa * sg + ca * cg * sb
    R[1, 0] = cb * sg
    R[1, 1] = ca * cg + sa * sb * sg
    R[1, 2] = -sa * cg + ca * sb * sg
    R[2, 0] = -sb
    R[2, 1] = cb * sa
    R[2, 2] = ca * cb


@njit(cache=True)
def _rotations(table):
    n = table.shape[0]
    R = np.empty((n, 3, 3))
    for i in range(n):
        _rotation(table[i, 7], table[i, 8], table[i, 9], R[i])
    return R


@njit(cache=True)
def forward_kernel(table, points):
    n = table.shape[0]
    R = _rotations(table)
    out = np.zeros(points.shape[0])
    for b in range(points.shape[0]):
        acc = 0.0
        for i in range(n):
            y0 = points[b, 0] - table[i, 4]
            y1 = points[b, 1] - table[i, 5]
            y2 = points[b, 2] - table[i, 6]
            e = 0.0
            for q in range(3):
                z = R[i, q, 0] * y0 + R[i, q, 1] * y1 + R[i, q, 2] * y2
                u = table[i, 1 + q] * z
                e += u * u
            acc += table[i, 0] * table[i, 0] * math.exp(-e)
        out[b] = acc
    return out


@njit(cache=True)
def loss_grad_kernel(table, points, targets, rho2, dA, dB, dG):
    """Data term of the loss and its gradient (regularizer handled by the caller)."""
    n = table.shape[0]
    nb = points.shape[0]
    R = _rotations(table)
    grad = np.zeros((n, 10))
    act = np.empty(n)
    ys = np.empty((n, 3))
    zs = np.empty((n, 3))
    G = np.zeros((n, 3, 3))
    value = 0.0
    for b in range(nb):
        psi_sum = 0.0
        for i in range(n):
            ys[i, 0] = points[b, 0] - table[i, 4]
            ys[i, 1] = points[b, 1] - table[i, 5]
            ys[i, 2] = points[b, 2] - table[i, 6]
            e = 0.0
            for q in range(3):
                z = R[i, q, 0] * ys[i, 0] + R[i, q, 1] * ys[i, 1] + R[i, q, 2] * ys[i, 2]
                zs[i, q] = z
                u = table[i, 1 + q] * z
                e += u * u
            act[i] = math.exp(-e)
            psi_sum += table[i, 0] * table[i, 0] * act[i]
        r = psi_sum - targets[b]
        value += r * r
        rw = 2.0 * rho2 * r
        for i in range(n):
            wt = table[i, 0]
            grad[i, 0] += 2.0 * wt * rw * act[i]
            a = rw * act[i] * wt * wt
            if a == 0.0:
                continue
            for q in range(3):
                dq = table[i, 1 + q]
                au = a * dq * zs[i, q]
                grad[i, 1 + q] -= 2.0 * au * zs[i, q]
                # center: 2 R^T (d * a u)
                sau = dq * au
                for k in range(3):
                    grad[i, 4 + k] += 2.0 * R[i, q, k] * sau
                    G[i, q, k] += sau * ys[i, k]
    for i in range(n):
        sa = 0.0
        sb = 0.0
        sg = 0.0
        for j in range(3):
            for k in range(3):
                sa += dA[i, j, k] * G[i, j, k]
                sb += dB[i, j, k] * G[i, j, k]
                sg += dG[i, j, k] * G[i, j, k]
        grad[i, 7] -= 2.0 * sa
        grad[i, 8] -= 2.0 * sb
        grad[i, 9] -= 2.0 * sg
    return rho2 * value, grad

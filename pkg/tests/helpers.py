"""Shared oracles for the test suite.

Everything in here is deliberately independent of the library internals: the
finite-difference checks only call ``neg_log_likelihood``/``gradient`` as black
boxes, and the grid minimizer re-parameterizes the d=3 feasible set by hand.
"""

import numpy as np
from scipy.special import log_ndtr

from rateorank import models

# Orthonormal basis of the mean-zero subspace in R^3 (columns).
REDUCED_BASIS_3 = np.array(
    [
        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(6.0)],
        [-1.0 / np.sqrt(2.0), 1.0 / np.sqrt(6.0)],
        [0.0, -2.0 / np.sqrt(6.0)],
    ]
)


def fd_gradient(spec, w, obs, eps=1e-6):
    w = np.asarray(w, dtype=float)
    g = np.zeros_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = eps
        g[j] = (
            models.neg_log_likelihood(spec, w + e, obs)
            - models.neg_log_likelihood(spec, w - e, obs)
        ) / (2.0 * eps)
    return g


def fd_hessian(spec, w, obs, eps=1e-6):
    w = np.asarray(w, dtype=float)
    h = np.zeros((w.size, w.size))
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = eps
        h[:, j] = (
            models.gradient(spec, w + e, obs) - models.gradient(spec, w - e, obs)
        ) / (2.0 * eps)
    return 0.5 * (h + h.T)


def _batch_nll(spec, candidates, obs):
    """Negative log-likelihood for a batch of quality vectors (rows)."""
    if spec.kind == "cardinal":
        margins = candidates[:, obs.design]
    else:
        margins = candidates[:, obs.design[:, 0]] - candidates[:, obs.design[:, 1]]
    y = obs.outcomes[None, :]
    if spec.kind in ("cardinal", "paired_linear"):
        r = y - margins
        return np.einsum("ij,ij->i", r, r)
    z = y * margins / spec.sigma
    if spec.kind == "thurstone":
        return -log_ndtr(z).sum(axis=1)
    return np.logaddexp(0.0, -z).sum(axis=1)


def _grid_scan(spec, obs, b_bound, center, half_span, points, chunk=40000):
    ax = np.linspace(-half_span, half_span, points)
    z1, z2 = np.meshgrid(center[0] + ax, center[1] + ax, indexing="ij")
    zs = np.column_stack([z1.ravel(), z2.ravel()])
    ws = zs @ REDUCED_BASIS_3.T
    feasible = np.max(np.abs(ws), axis=1) <= b_bound + 1e-12
    zs, ws = zs[feasible], ws[feasible]
    best_val, best_z, best_w = np.inf, None, None
    for start in range(0, ws.shape[0], chunk):
        block = ws[start : start + chunk]
        vals = _batch_nll(spec, block, obs)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_z = zs[start + i]
            best_w = block[i]
    return best_val, best_z, best_w


def grid_minimum(spec, obs, b_bound):
    """Dense grid search over the mean-zero, box-bounded set for d=3.

    Coarse scan of the whole feasible square followed by two local
    refinements; the final spacing is ~1e-5, so for interior optima the
    returned objective is within ~1e-8 of the true constrained minimum.
    """
    span = np.sqrt(3.0) * b_bound
    val, z, w = _grid_scan(spec, obs, b_bound, np.zeros(2), span, 901)
    half = span / 450.0
    for _ in range(2):
        val, z, w = _grid_scan(spec, obs, b_bound, z, 3.0 * half, 241)
        half = 3.0 * half / 120.0
    return val, w

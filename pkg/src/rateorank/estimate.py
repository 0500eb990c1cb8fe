"""Constrained maximum-likelihood estimation and noise-scale cross-validation.

All models are fit over the same feasible set: mean-zero vectors inside the
hypercube ``|w_j| <= B``.  The solver is projected gradient descent with an
Armijo backtracking line search; projection onto the intersection of the two
constraint sets uses Dykstra's alternating scheme.  The cardinal model has a
closed form (centered per-item means) and skips the iteration entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import ConnectivityError, FoldError, InsufficientDataError
from .graph import build_laplacian_from_design
from .models import CARDINAL, PAIRED_LINEAR, BTL, ModelSpec, ObservationSet, QualityVector

#: Default cross-validation grid: powers of two from 1/16 to 16.
DEFAULT_SIGMA_GRID = tuple(2.0**k for k in range(-4, 5))

_ARMIJO_C = 1e-4
_DYKSTRA_MAX_ITERS = 200
_DYKSTRA_TOL = 1e-12
_MIN_STEP = 1e-18


@dataclass(frozen=True)
class FitConfig:
    """Solver settings shared by every model fit."""

    b_bound: float = 1.0
    max_iters: int = 2000
    grad_tol: float | None = None  # defaults to 1e-8 * n at fit time
    sigma_grid: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.b_bound <= 0:
            raise ValueError(f"box bound must be positive, got {self.b_bound}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.sigma_grid is not None:
            grid = tuple(float(s) for s in self.sigma_grid)
            if len(grid) == 0 or any(s <= 0 for s in grid):
                raise ValueError("sigma_grid must be nonempty and positive")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("sigma_grid must be strictly increasing")
            object.__setattr__(self, "sigma_grid", grid)


@dataclass(frozen=True)
class FitResult:
    """Outcome of one constrained fit."""

    w_hat: QualityVector
    sigma_used: float
    final_nll: float
    iterations: int
    converged: bool
    active_box: tuple[int, ...]
    nll_path: tuple[float, ...] = field(repr=False, default=())


def project_feasible(v: np.ndarray, b_bound: float) -> np.ndarray:
    """Project onto {mean-zero} intersected with {|w_j| <= b_bound}.

    Runs Dykstra's alternating projections.  The input is centered first:
    every feasible point lies in the mean-zero subspace, so by Pythagoras the
    projection of ``v`` equals the projection of its centered part.  The exit
    test requires both that the iterate stopped moving and that the box-side
    and subspace-side iterates agree; movement alone goes quiet while the
    correction vectors are still draining, which silently returns infeasible
    points.  If the iteration budget runs out before the certificate holds
    (inputs far outside the box), the exact shift-and-clip solution finishes
    the job.
    """
    x = np.asarray(v, dtype=float)
    x = x - x.mean()
    centered = x
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(_DYKSTRA_MAX_ITERS):
        s = x + p
        y = np.clip(s, -b_bound, b_bound)
        p = s - y
        s = y + q
        x_new = s - s.mean()
        q = s - x_new
        gap = max(float(np.max(np.abs(x_new - x))), float(np.max(np.abs(x_new - y))))
        x = x_new
        if gap <= _DYKSTRA_TOL:
            return x
    return _shift_and_clip(centered, b_bound)


def _shift_and_clip(v: np.ndarray, b_bound: float) -> np.ndarray:
    """Exact projection onto {mean-zero, box}: clip(v - mu) with mu zeroing the sum.

    The sum of ``clip(v - mu)`` is a nonincreasing piecewise-linear function of
    ``mu`` with breakpoints at ``v_i -+ b``; locate the bracketing segment and
    interpolate the root exactly.
    """
    breakpoints = np.sort(np.concatenate([v - b_bound, v + b_bound]))
    sums = np.array([float(np.clip(v - mu, -b_bound, b_bound).sum()) for mu in breakpoints])
    idx = int(np.searchsorted(-sums, 0.0, side="left"))
    if idx == 0:
        mu = breakpoints[0]
    elif idx == breakpoints.size:
        mu = breakpoints[-1]
    else:
        lo, hi = breakpoints[idx - 1], breakpoints[idx]
        f_lo, f_hi = sums[idx - 1], sums[idx]
        mu = lo if f_lo == f_hi else lo + f_lo * (hi - lo) / (f_lo - f_hi)
    x = np.clip(v - mu, -b_bound, b_bound)
    # Spread any float dust in the sum over the unclipped coordinates.
    free = np.abs(x) < b_bound
    if np.any(free):
        x[free] -= x.sum() / np.count_nonzero(free)
    return x


def _grad_tol(config: FitConfig, n: int) -> float:
    return config.grad_tol if config.grad_tol is not None else 1e-8 * n


def _fit_cardinal(obs: ObservationSet, config: FitConfig) -> FitResult:
    counts = np.bincount(obs.design, minlength=obs.d)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ConnectivityError(f"cardinal fit needs every item rated at least once; missing {missing}")
    sums = np.bincount(obs.design, weights=obs.outcomes, minlength=obs.d)
    means = sums / counts
    w = means - means.mean()
    nll = models.neg_log_likelihood(obs.model, w, obs)
    return FitResult(
        w_hat=QualityVector(w),
        sigma_used=obs.model.sigma,
        final_nll=nll,
        iterations=0,
        converged=True,
        active_box=_active_box(w, config.b_bound),
        nll_path=(nll,),
    )


def _active_box(w: np.ndarray, b_bound: float) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(np.abs(w) >= b_bound - 1e-9))


def _initial_step(spec: ModelSpec, lambda1: float) -> float:
    """Inverse of a crude Lipschitz bound on the gradient, to seed the line search."""
    if spec.kind == PAIRED_LINEAR:
        lipschitz = 2.0 * lambda1
    elif spec.kind == BTL:
        lipschitz = 0.25 * lambda1 / spec.sigma**2
    else:
        lipschitz = lambda1 / spec.sigma**2
    return 1.0 / max(lipschitz, 1e-12)


def mle_fit(obs: ObservationSet, config: FitConfig) -> FitResult:
    """Constrained MLE for any model kind.

    Pairwise designs must form a connected comparison graph, otherwise the
    quality differences across components are not identifiable and the fit is
    refused.  The result reports ``converged=False`` rather than silently
    returning a poor point when the iteration budget runs out.
    """
    if obs.model.kind == CARDINAL:
        return _fit_cardinal(obs, config)

    laplacian = build_laplacian_from_design(obs.d, obs.design)
    if not laplacian.connected:
        raise ConnectivityError("comparison graph of the design is disconnected; fit refused")

    spec = obs.model
    tol = _grad_tol(config, obs.n)
    w = np.zeros(obs.d)
    f = models.neg_log_likelihood(spec, w, obs)
    path = [f]
    step = _initial_step(spec, laplacian.lambda1)
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iters + 1):
        g = models.gradient(spec, w, obs)
        # Fixed-point residual of the projected-gradient map with unit step.
        residual = w - project_feasible(w - g, config.b_bound)
        if float(np.linalg.norm(residual)) <= tol:
            converged = True
            iterations -= 1
            break

        t = 2.0 * step
        while True:
            w_new = project_feasible(w - t * g, config.b_bound)
            f_new = models.neg_log_likelihood(spec, w_new, obs)
            if f_new <= f + _ARMIJO_C * float(g @ (w_new - w)):
                break
            t *= 0.5
            if t < _MIN_STEP:
                w_new, f_new = w, f  # no descent possible at any step size
                break
        if t < _MIN_STEP:
            residual = w - project_feasible(w - models.gradient(spec, w, obs), config.b_bound)
            converged = float(np.linalg.norm(residual)) <= tol
            break
        step = t
        w, f = w_new, f_new
        path.append(f)

    return FitResult(
        w_hat=QualityVector(w, config.b_bound),
        sigma_used=spec.sigma,
        final_nll=f,
        iterations=iterations,
        converged=converged,
        active_box=_active_box(w, config.b_bound),
        nll_path=tuple(path),
    )


def cv_sigma(obs: ObservationSet, config: FitConfig) -> tuple[float, list[tuple[float, float]]]:
    """Pick the noise scale by 3-fold cross-validation.

    Rows are shuffled with the config seed, each fold is held out once, and
    every candidate sigma is scored by the average held-out log-likelihood.
    Ties break toward the smaller sigma.  Returns the winner together with the
    full (sigma, score) table.
    """
    grid = config.sigma_grid if config.sigma_grid is not None else DEFAULT_SIGMA_GRID
    if obs.n < 3:
        raise InsufficientDataError(f"cross-validation needs at least 3 observations, got {obs.n}")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(obs.n)
    folds = np.array_split(order, 3)

    splits = []
    for i, held_out in enumerate(folds):
        train_idx = np.concatenate([folds[j] for j in range(3) if j != i])
        train = obs.subset(train_idx)
        if train.model.kind in models.PAIRWISE_KINDS:
            if not build_laplacian_from_design(train.d, train.design).connected:
                raise FoldError(f"training graph for held-out fold {i} is disconnected")
        splits.append((train, obs.subset(held_out)))

    table: list[tuple[float, float]] = []
    best_sigma, best_score = None, -np.inf
    for sigma in grid:
        scores = []
        for train, held in splits:
            result = mle_fit(train.with_sigma(sigma), config)
            held_sigma = held.with_sigma(sigma)
            scores.append(-models.neg_log_likelihood(held_sigma.model, result.w_hat, held_sigma))
        score = float(np.mean(scores))
        table.append((float(sigma), score))
        if score > best_score:
            best_sigma, best_score = float(sigma), score
    return best_sigma, table

"""Observation models for quality estimation.

Four ways of observing a latent quality vector ``w`` on ``d`` items:

* ``cardinal``       -- a rating of one item: ``y = w_j + noise``.
* ``paired_linear``  -- a real-valued comparison: ``y = w_a - w_b + noise``.
* ``thurstone``      -- the sign of a noisy comparison (probit link).
* ``btl``            -- a binary comparison with logistic link.

The latent vector is identifiable only up to a common shift, so all vectors
here are mean-centered, and the two binary models additionally carry a box
bound ``|w_j| <= B`` that keeps their likelihoods well-behaved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, log_ndtr

from .errors import ModelKindError

CARDINAL = "cardinal"
PAIRED_LINEAR = "paired_linear"
THURSTONE = "thurstone"
BTL = "btl"

MODEL_KINDS = (CARDINAL, PAIRED_LINEAR, THURSTONE, BTL)
#: Kinds whose design rows are item pairs rather than single items.
PAIRWISE_KINDS = (PAIRED_LINEAR, THURSTONE, BTL)
#: Kinds with binary (+1/-1) outcomes.
BINARY_KINDS = (THURSTONE, BTL)

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_CENTER_TOL = 1e-9


def _log_norm_pdf(z: np.ndarray) -> np.ndarray:
    return -0.5 * z * z - _LOG_SQRT_2PI


@dataclass(frozen=True)
class QualityVector:
    """A mean-centered latent quality vector, optionally box-bounded."""

    values: np.ndarray
    b_bound: float | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError(f"quality vector must be 1-d with d >= 2, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("quality vector has non-finite entries")
        if abs(values.sum()) > _CENTER_TOL:
            raise ValueError(f"quality vector must sum to zero, got sum {values.sum():.3g}")
        if self.b_bound is not None:
            if self.b_bound <= 0:
                raise ValueError(f"box bound must be positive, got {self.b_bound}")
            if np.max(np.abs(values)) > self.b_bound + 1e-9:
                raise ValueError("quality vector violates its box bound")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def centered(cls, values, b_bound: float | None = None) -> "QualityVector":
        """Center arbitrary values and wrap them."""
        values = np.asarray(values, dtype=float)
        return cls(values - values.mean(), b_bound)

    @property
    def d(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


def as_values(w) -> np.ndarray:
    """Accept a QualityVector or a plain array; return the underlying array."""
    if isinstance(w, QualityVector):
        return w.values
    return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class ModelSpec:
    """Which observation model, its noise scale, and (for binary kinds) the box bound."""

    kind: str
    sigma: float
    b_bound: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ModelKindError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.kind in BINARY_KINDS:
            if self.sigma <= 0:
                raise ValueError(f"{self.kind} needs sigma > 0, got {self.sigma}")
            if self.b_bound is None or self.b_bound <= 0:
                raise ValueError(f"{self.kind} needs a positive box bound, got {self.b_bound}")
        elif self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class ObservationSet:
    """Observations plus the design they were collected under.

    ``design`` is an ``(n, 2)`` int array of ``(left, right)`` pairs for the
    pairwise kinds, or an ``(n,)`` int array of item indices for cardinal.
    ``outcomes`` is a float array; for binary kinds entries are exactly +-1.
    """

    model: ModelSpec
    d: int
    design: np.ndarray
    outcomes: np.ndarray

    def __post_init__(self) -> None:
        design = np.asarray(self.design, dtype=np.intp)
        outcomes = np.asarray(self.outcomes, dtype=float)
        if self.d < 2:
            raise ValueError(f"need at least 2 items, got d={self.d}")
        if self.model.kind in PAIRWISE_KINDS:
            if design.ndim != 2 or design.shape[1] != 2:
                raise ValueError(f"pairwise design must have shape (n, 2), got {design.shape}")
            if np.any(design[:, 0] == design[:, 1]):
                raise ValueError("design contains a self-comparison")
        else:
            if design.ndim != 1:
                raise ValueError(f"cardinal design must have shape (n,), got {design.shape}")
        if design.size == 0:
            raise ValueError("observation set is empty")
        if design.min() < 0 or design.max() >= self.d:
            raise IndexError(f"design indexes items outside range(0, {self.d})")
        if outcomes.shape != (design.shape[0],):
            raise ValueError(f"expected {design.shape[0]} outcomes, got {outcomes.shape}")
        if not np.all(np.isfinite(outcomes)):
            raise ValueError("outcomes contain non-finite values")
        if self.model.kind in BINARY_KINDS and not np.all(np.abs(outcomes) == 1.0):
            raise ValueError("binary model outcomes must all be +1 or -1")
        design.setflags(write=False)
        outcomes.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n(self) -> int:
        return self.outcomes.size

    def subset(self, indices: np.ndarray) -> "ObservationSet":
        """A new observation set restricted to the given row indices."""
        return ObservationSet(self.model, self.d, self.design[indices], self.outcomes[indices])

    def with_sigma(self, sigma: float) -> "ObservationSet":
        """Same data viewed under a different noise scale."""
        return ObservationSet(replace(self.model, sigma=sigma), self.d, self.design, self.outcomes)


def _margins(w: np.ndarray, design: np.ndarray) -> np.ndarray:
    """Differencing-vector inner products w_left - w_right for each design row."""
    return w[design[:, 0]] - w[design[:, 1]]


def _require_kind(spec: ModelSpec, allowed: tuple[str, ...], op: str) -> None:
    if spec.kind not in allowed:
        raise ModelKindError(f"{op} is not defined for the {spec.kind!r} model")


def prob_positive(spec: ModelSpec, w, edge: tuple[int, int]) -> float:
    """Probability that comparing ``edge`` under ``spec`` comes out positive.

    For paired_linear this is P(y > 0); both links reduce to a CDF applied to
    the standardized margin.
    """
    _require_kind(spec, PAIRWISE_KINDS, "prob_positive")
    if spec.sigma <= 0:
        raise ValueError("prob_positive needs sigma > 0")
    w = as_values(w)
    z = (w[edge[0]] - w[edge[1]]) / spec.sigma
    if spec.kind == BTL:
        return float(expit(z))
    return float(np.exp(log_ndtr(z)))


def sample(spec: ModelSpec, w, design: np.ndarray, seed: int) -> ObservationSet:
    """Draw one observation per design row under the given model."""
    w = as_values(w)
    rng = np.random.default_rng(seed)
    if spec.kind == CARDINAL:
        design = np.asarray(design, dtype=np.intp)
        y = w[design] + spec.sigma * rng.standard_normal(design.shape[0])
        return ObservationSet(spec, w.size, design, y)
    design = np.asarray(design, dtype=np.intp)
    margins = _margins(w, design)
    if spec.kind == PAIRED_LINEAR:
        y = margins + spec.sigma * rng.standard_normal(margins.size)
    elif spec.kind == THURSTONE:
        noisy = margins + spec.sigma * rng.standard_normal(margins.size)
        y = np.where(noisy >= 0, 1.0, -1.0)
    else:  # btl
        u = rng.uniform(size=margins.size)
        y = np.where(u < expit(margins / spec.sigma), 1.0, -1.0)
    return ObservationSet(spec, w.size, design, y)


def neg_log_likelihood(spec: ModelSpec, w, obs: ObservationSet) -> float:
    """Negative log-likelihood of ``w`` (squared error for the two linear kinds).

    Uses asymptotic-safe log-CDF evaluation, so it stays finite for
    standardized margins out to |z| ~ 40 and beyond.
    """
    if spec.kind != obs.model.kind:
        raise ModelKindError(f"spec kind {spec.kind!r} does not match observations ({obs.model.kind!r})")
    w = as_values(w)
    y = obs.outcomes
    if spec.kind == CARDINAL:
        r = y - w[obs.design]
        return float(r @ r)
    if spec.kind == PAIRED_LINEAR:
        r = y - _margins(w, obs.design)
        return float(r @ r)
    z = _margins(w, obs.design) / spec.sigma
    if spec.kind == THURSTONE:
        return float(-np.sum(log_ndtr(y * z)))
    return float(np.sum(np.logaddexp(0.0, -y * z)))


def gradient(spec: ModelSpec, w, obs: ObservationSet) -> np.ndarray:
    """Gradient of :func:`neg_log_likelihood` with respect to ``w``."""
    if spec.kind != obs.model.kind:
        raise ModelKindError(f"spec kind {spec.kind!r} does not match observations ({obs.model.kind!r})")
    w = as_values(w)
    d = w.size
    y = obs.outcomes
    if spec.kind == CARDINAL:
        coef = -2.0 * (y - w[obs.design])
        return np.bincount(obs.design, weights=coef, minlength=d)
    left, right = obs.design[:, 0], obs.design[:, 1]
    if spec.kind == PAIRED_LINEAR:
        coef = -2.0 * (y - _margins(w, obs.design))
    else:
        z = _margins(w, obs.design) / spec.sigma
        if spec.kind == THURSTONE:
            # d/dz of -log Phi(yz) = -y * phi(z) / Phi(yz), evaluated in log space.
            ratio = np.exp(_log_norm_pdf(z) - log_ndtr(y * z))
            coef = -y * ratio / spec.sigma
        else:
            coef = -y * expit(-y * z) / spec.sigma
    return np.bincount(left, weights=coef, minlength=d) - np.bincount(right, weights=coef, minlength=d)


def hessian(spec: ModelSpec, w, obs: ObservationSet) -> np.ndarray:
    """Hessian of :func:`neg_log_likelihood`; a sum of rank-one edge terms."""
    if spec.kind != obs.model.kind:
        raise ModelKindError(f"spec kind {spec.kind!r} does not match observations ({obs.model.kind!r})")
    w = as_values(w)
    d = w.size
    if spec.kind == CARDINAL:
        return np.diag(np.bincount(obs.design, weights=np.full(obs.n, 2.0), minlength=d))
    if spec.kind == PAIRED_LINEAR:
        weights = np.full(obs.n, 2.0)
    else:
        z = _margins(w, obs.design) / spec.sigma
        y = obs.outcomes
        if spec.kind == THURSTONE:
            ratio = np.exp(_log_norm_pdf(z) - log_ndtr(y * z))
            weights = np.maximum(ratio * (ratio + y * z), 0.0) / spec.sigma**2
        else:
            p = expit(z)
            weights = p * (1.0 - p) / spec.sigma**2
    h = np.zeros((d, d))
    left, right = obs.design[:, 0], obs.design[:, 1]
    np.add.at(h, (left, left), weights)
    np.add.at(h, (right, right), weights)
    np.add.at(h, (left, right), -weights)
    np.add.at(h, (right, left), -weights)
    return h


def strong_convexity_scalar(spec: ModelSpec, t: float) -> float:
    """Per-comparison curvature of the binary losses at standardized margin ``t``.

    Returns the second derivative (in the margin) of the single-observation
    loss whose likelihood at margin ``t`` is ``1 - Phi(t)`` (Thurstone) or
    ``1 / (1 + e^t)`` (BTL).  By the mirror symmetry between the two outcome
    branches, minimizing this expression over a symmetric margin interval
    gives the strong-convexity constant of either branch.
    """
    _require_kind(spec, BINARY_KINDS, "strong_convexity_scalar")
    t = float(t)
    if spec.kind == THURSTONE:
        hazard = float(np.exp(_log_norm_pdf(np.array(t)) - log_ndtr(-t)))
        return hazard * (hazard - t)
    p = float(expit(t))
    return p * (1.0 - p)

"""Minimax risk intervals and the rate-or-rank decision rule.

Each report gives a lower and upper bound on the minimax estimation risk of a
measurement scheme, all proportional to ``d * sigma^2 / n``.  The binary-model
constants degrade through ``kappa = Phi(2B/sigma) * (1 - Phi(2B/sigma))``,
which measures how much of the comparison probability range the box bound
leaves usable.  The decision rule compares a rating scheme against a
comparison scheme at equal budget, where the ``d`` and ``n`` factors cancel
and only the noise scales and the interval constants matter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ModelKindError
from .models import BTL, CARDINAL, PAIRED_LINEAR, THURSTONE

#: Even-budget (one-rating-at-a-time vs round-robin comparisons) model names.
CVO_MODELS = (CARDINAL, "thurstone_even")

VERDICT_CARDINAL = "cardinal"
VERDICT_ORDINAL = "ordinal"
VERDICT_INDETERMINATE = "indeterminate"

NORM_PER_ITEM = "per_item_l2"
NORM_SEMINORM = "seminorm"

# Interval constants for the binary and paired-linear schemes.
_THURSTONE_LOWER = 0.0008
_THURSTONE_UPPER = 5.0
_PAIRED_LOWER = 0.00013
_PAIRED_UPPER = 0.68
_BTL_LOWER = 0.001
_BTL_UPPER = 1.37
# Sample-size thresholds under which the upper bounds are certified.
_THURSTONE_SAMPLE_C = 0.035
_BTL_SAMPLE_C = 0.04467
# The interval constants are calibrated for designs with more than this many items.
_MIN_REGIME_D = 9


@dataclass(frozen=True)
class BoundReport:
    """Minimax risk interval for one scheme at one budget."""

    model_kind: str
    d: int
    n: int
    sigma: float
    b_bound: float
    kappa: float
    lower: float
    upper: float
    norm: str
    sample_condition_met: bool
    in_regime: bool = True


@dataclass(frozen=True)
class Decision:
    """Outcome of the rating-vs-comparison comparison at equal budget."""

    verdict: str
    cardinal_risk: float
    ordinal_interval: tuple[float, float]


def kappa(b_bound: float, sigma: float) -> float:
    """Probability-range factor Phi(2B/sigma) * (1 - Phi(2B/sigma))."""
    if b_bound <= 0 or sigma <= 0:
        raise ValueError(f"kappa needs positive b_bound and sigma, got B={b_bound}, sigma={sigma}")
    u = 2.0 * b_bound / sigma
    return float(ndtr(u) * ndtr(-u))


def _validate_common(d: int, n: int, sigma: float, b_bound: float) -> None:
    if d < 2:
        raise ValueError(f"need at least 2 items, got d={d}")
    if n < 1:
        raise ValueError(f"need a positive budget, got n={n}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if b_bound <= 0:
        raise ValueError(f"b_bound must be positive, got {b_bound}")


def minimax_cvo(model: str, d: int, n: int, sigma: float, b_bound: float) -> BoundReport:
    """Per-item minimax risk interval in the even-budget setting.

    ``cardinal`` spreads ``n`` ratings evenly over items; ``thurstone_even``
    spreads ``n`` comparisons evenly over all pairs.  The cardinal risk is
    exact (lower equals upper); the binary interval carries the kappa factors.
    """
    if model not in CVO_MODELS:
        raise ModelKindError(f"minimax_cvo supports {CVO_MODELS}, got {model!r}")
    _validate_common(d, n, sigma, b_bound)
    rate = d * sigma**2 / n
    k = kappa(b_bound, sigma)
    if model == CARDINAL:
        return BoundReport(
            model_kind=model, d=d, n=n, sigma=sigma, b_bound=b_bound, kappa=k,
            lower=rate, upper=rate, norm=NORM_PER_ITEM,
            sample_condition_met=n >= d, in_regime=d > _MIN_REGIME_D,
        )
    # Even-budget comparisons form a complete graph whose standardized
    # pseudoinverse trace is (d-1)^2 / 2; plug that into the sample threshold.
    threshold = sigma**2 * k * (d - 1) ** 2 / (2.0 * _THURSTONE_SAMPLE_C * b_bound**2)
    return BoundReport(
        model_kind=model, d=d, n=n, sigma=sigma, b_bound=b_bound, kappa=k,
        lower=_THURSTONE_LOWER * k * rate, upper=_upper_over_kappa_sq(k, rate),
        norm=NORM_PER_ITEM, sample_condition_met=n >= threshold, in_regime=d > _MIN_REGIME_D,
    )


def _upper_over_kappa_sq(k: float, rate: float) -> float:
    """5/kappa^2 times the rate; infinite when kappa underflows to zero."""
    if k == 0.0:
        return float("inf")
    return _THURSTONE_UPPER / k**2 * rate


def minimax_seminorm(
    model: str, d: int, n: int, sigma: float, b_bound: float, trace_pinv_std: float
) -> BoundReport:
    """Minimax risk interval in the design seminorm, for an arbitrary connected topology.

    ``trace_pinv_std`` is the trace of the pseudoinverse of the standardized
    design covariance; it enters only the sample-size certification for the
    binary models.
    """
    _validate_common(d, n, sigma, b_bound)
    if trace_pinv_std <= 0:
        raise ValueError(f"trace_pinv_std must be positive, got {trace_pinv_std}")
    rate = d * sigma**2 / n
    k = kappa(b_bound, sigma)
    if model == PAIRED_LINEAR:
        lower, upper = _PAIRED_LOWER * rate, _PAIRED_UPPER * rate
        condition = True
    elif model == THURSTONE:
        lower, upper = _THURSTONE_LOWER * k * rate, _upper_over_kappa_sq(k, rate)
        condition = n >= sigma**2 * k * trace_pinv_std / (_THURSTONE_SAMPLE_C * b_bound**2)
    elif model == BTL:
        ratio = b_bound / sigma
        swell = (np.exp(ratio) + np.exp(-ratio)) ** 4
        lower, upper = _BTL_LOWER * rate, _BTL_UPPER * swell * rate
        condition = n >= _BTL_SAMPLE_C * sigma**2 * trace_pinv_std / b_bound**2
    else:
        raise ModelKindError(f"minimax_seminorm supports pairwise models, got {model!r}")
    return BoundReport(
        model_kind=model, d=d, n=n, sigma=sigma, b_bound=b_bound, kappa=k,
        lower=float(lower), upper=float(upper), norm=NORM_SEMINORM,
        sample_condition_met=bool(condition), in_regime=d > _MIN_REGIME_D,
    )


def decide(sigma_c: float, sigma_o: float, b_bound: float = 1.0) -> Decision:
    """Rate or rank?  Compare per-item risks at equal item count and budget.

    The shared ``d/n`` factor cancels, leaving the cardinal risk ``sigma_c^2``
    against the binary-comparison interval.  The verdict is ``ordinal`` only
    when the whole interval sits below the cardinal risk, ``cardinal`` only
    when the cardinal risk sits below the whole interval, and indeterminate
    otherwise.
    """
    if sigma_c <= 0 or sigma_o <= 0:
        raise ValueError(f"noise scales must be positive, got sigma_c={sigma_c}, sigma_o={sigma_o}")
    k = kappa(b_bound, sigma_o)
    cardinal_risk = sigma_c**2
    interval = (_THURSTONE_LOWER * k * sigma_o**2, _upper_over_kappa_sq(k, sigma_o**2))
    if interval[1] < cardinal_risk:
        verdict = VERDICT_ORDINAL
    elif cardinal_risk < interval[0]:
        verdict = VERDICT_CARDINAL
    else:
        verdict = VERDICT_INDETERMINATE
    return Decision(verdict=verdict, cardinal_risk=cardinal_risk, ordinal_interval=interval)


def decision_grid(
    sigma_c_range: tuple[float, float],
    sigma_o_range: tuple[float, float],
    b_bound: float = 1.0,
    resolution: int = 20,
) -> list[tuple[float, float, str]]:
    """Evaluate :func:`decide` over a log-spaced grid of noise scales."""
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    for name, (lo, hi) in (("sigma_c", sigma_c_range), ("sigma_o", sigma_o_range)):
        if lo <= 0 or hi < lo:
            raise ValueError(f"{name} range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
    cs = np.geomspace(sigma_c_range[0], sigma_c_range[1], resolution)
    os_ = np.geomspace(sigma_o_range[0], sigma_o_range[1], resolution)
    rows = []
    for sc in cs:
        for so in os_:
            rows.append((float(sc), float(so), decide(sc, so, b_bound).verdict))
    return rows


def write_decision_grid(rows: list[tuple[float, float, str]], path) -> None:
    """Write grid rows as ``sigma_c,sigma_o,verdict`` CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma_c", "sigma_o", "verdict"])
        for sc, so, verdict in rows:
            writer.writerow([repr(sc), repr(so), verdict])

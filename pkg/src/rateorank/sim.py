"""Monte Carlo risk estimation harness.

An experiment fixes a model, a comparison topology (or an even rating
schedule for the cardinal model), and a true quality vector; each trial
samples a fresh dataset, refits, and scores the fit against the truth under
four metrics.  Everything is seeded: trial ``t`` uses ``seed + t``, so runs
are bit-reproducible, and sweeps rerun the experiment across one varying
parameter to produce flat tables ready for CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import estimate, models
from .errors import ModelKindError
from .graph import ComparisonGraph, Laplacian, generate_topology, laplacian_of
from .models import CARDINAL, ModelSpec, QualityVector, as_values

#: Metric names computed per trial.
METRIC_SEMINORM = "seminorm_sq"
METRIC_PER_ITEM = "per_item_l2_sq"
METRIC_KENDALL = "kendall_tau"
METRIC_SCALED = "scaled_l2_sq"

SWEEPABLE = ("n", "d", "sigma", "topology.kind")

_MAX_FAILURE_FRACTION = 0.05
_W_SEED_OFFSET = 10**6
_SWEEP_SEED_STRIDE = 10**7


@dataclass(frozen=True)
class TopologySpec:
    """Which comparison topology to measure under."""

    kind: str
    d: int
    n: int
    k: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: model + topology + truth + budget."""

    model: ModelSpec
    topology: TopologySpec
    w_true: QualityVector | dict
    trials: int
    seed: int = 0
    fit: estimate.FitConfig = field(default_factory=estimate.FitConfig)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class RiskEstimate:
    """Mean and standard error of one metric over the successful trials."""

    metric: str
    mean: float
    stderr: float
    trials: int


def seminorm_sq(w_hat, w_true, laplacian: Laplacian) -> float:
    """Squared error in the standardized design seminorm, (w^ - w*)' (M/n) (w^ - w*)."""
    diff = as_values(w_hat) - as_values(w_true)
    return float(diff @ laplacian.m @ diff) / laplacian.n


def per_item_l2_sq(w_hat, w_true) -> float:
    """Plain squared error averaged over items."""
    diff = as_values(w_hat) - as_values(w_true)
    return float(diff @ diff) / diff.size


def scaled_l2_sq(w_hat, w_true) -> float:
    """Squared error per item after affinely mapping both vectors onto [-1, 1]."""
    return per_item_l2_sq(_rescale(as_values(w_hat)), _rescale(as_values(w_true)))


def _rescale(v: np.ndarray) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        raise ValueError("cannot rescale a constant vector onto [-1, 1]")
    return 2.0 * (v - lo) / (hi - lo) - 1.0


def kendall_tau(w_hat, w_true) -> float:
    """Kendall tau-a: (concordant - discordant) pairs over all pairs; ties count zero."""
    a, b = as_values(w_hat), as_values(w_true)
    sa = np.sign(a[:, None] - a[None, :])
    sb = np.sign(b[:, None] - b[None, :])
    upper = np.triu_indices(a.size, k=1)
    return float(np.sum(sa[upper] * sb[upper])) / (a.size * (a.size - 1) // 2)


def cardinal_design(d: int, n: int) -> np.ndarray:
    """Round-robin rating schedule: item ``i`` is rated on rows i, i+d, i+2d, ..."""
    if n < d:
        raise ValueError(f"need n >= d ratings to cover every item, got n={n}, d={d}")
    return np.arange(n, dtype=np.intp) % d


def resolve_w_true(config: ExperimentConfig, laplacian: Laplacian | None) -> QualityVector:
    """Materialize the configured truth, drawing generator rules from the master seed."""
    w = config.w_true
    if isinstance(w, QualityVector):
        return w
    if isinstance(w, dict):
        rule = w.get("rule")
        if rule == "uniform_box":
            b = float(w.get("b", 1.0))
            if b <= 0:
                raise ValueError(f"w_true.b must be positive, got {b}")
            rng = np.random.default_rng(config.seed + _W_SEED_OFFSET)
            v = rng.uniform(-b, b, config.topology.d)
            v -= v.mean()
            v *= b / np.max(np.abs(v))
            return QualityVector(v)
        if rule == "packing_vertex":
            if laplacian is None:
                raise ValueError("packing_vertex truth needs a pairwise topology")
            from .packing import build_packing  # local import: only this rule needs it

            pack = build_packing(laplacian, float(w.get("delta", 1.0)), float(w.get("alpha", 0.15)))
            index = int(w.get("index", 0))
            if not 0 <= index < pack.count:
                raise IndexError(f"packing_vertex index {index} out of range ({pack.count} vectors)")
            return pack.vectors[index]
        raise ValueError(f"unknown w_true rule {rule!r}")
    return QualityVector(np.asarray(w, dtype=float))


def run_experiment(config: ExperimentConfig) -> dict[str, RiskEstimate]:
    """Estimate risk under every metric; abort loudly if fits fail too often.

    Returns a map from metric name to its estimate.  The seminorm metric is
    only defined for pairwise designs and is omitted for cardinal runs.  Trials
    whose fit does not converge are dropped; more than 5% of them aborts the
    experiment with diagnostics rather than reporting a biased average.
    """
    topo = config.topology
    is_cardinal = config.model.kind == CARDINAL
    if is_cardinal:
        graph, laplacian = None, None
        design = cardinal_design(topo.d, topo.n)
    else:
        graph = generate_topology(topo.kind, topo.d, topo.n, seed=config.seed, k=topo.k)
        laplacian = laplacian_of(graph)
        design = graph.to_design()
    w_true = resolve_w_true(config, laplacian)
    if w_true.d != topo.d:
        raise ValueError(f"w_true has {w_true.d} items but topology has {topo.d}")

    values: dict[str, list[float]] = {METRIC_PER_ITEM: [], METRIC_KENDALL: [], METRIC_SCALED: []}
    if not is_cardinal:
        values[METRIC_SEMINORM] = []
    failures = 0
    failure_notes: list[str] = []
    for trial in range(config.trials):
        obs = models.sample(config.model, w_true, design, seed=config.seed + trial)
        result = estimate.mle_fit(obs, config.fit)
        if not result.converged:
            failures += 1
            if len(failure_notes) < 5:
                failure_notes.append(
                    f"trial {trial}: no convergence after {result.iterations} iterations"
                )
            continue
        w_hat = result.w_hat
        values[METRIC_PER_ITEM].append(per_item_l2_sq(w_hat, w_true))
        values[METRIC_KENDALL].append(kendall_tau(w_hat, w_true))
        values[METRIC_SCALED].append(scaled_l2_sq(w_hat, w_true))
        if not is_cardinal:
            values[METRIC_SEMINORM].append(seminorm_sq(w_hat, w_true, laplacian))

    if failures > _MAX_FAILURE_FRACTION * config.trials:
        notes = "; ".join(failure_notes)
        raise RuntimeError(
            f"{failures}/{config.trials} trials failed to converge "
            f"({config.model.kind} on {topo.kind}, d={topo.d}, n={topo.n}): {notes}"
        )

    out = {}
    for metric, vals in values.items():
        arr = np.asarray(vals)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        out[metric] = RiskEstimate(metric=metric, mean=float(arr.mean()), stderr=stderr, trials=arr.size)
    return out


@dataclass(frozen=True)
class SweepRow:
    """One (parameter value, metric) cell of a sweep table."""

    param: str
    value: object
    metric: str
    mean: float
    stderr: float
    trials: int
    failures: int


def _apply_sweep_value(config: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param == "n":
        return replace(config, topology=replace(config.topology, n=int(value)))
    if param == "d":
        return replace(config, topology=replace(config.topology, d=int(value)))
    if param == "sigma":
        return replace(config, model=replace(config.model, sigma=float(value)))
    if param == "topology.kind":
        return replace(config, topology=replace(config.topology, kind=str(value)))
    raise ValueError(f"cannot sweep {param!r}; choose one of {SWEEPABLE}")


def sweep(config: ExperimentConfig, param: str, values: Sequence) -> list[SweepRow]:
    """Rerun the experiment across parameter values; one row per (value, metric)."""
    if len(values) == 0:
        return []
    rows: list[SweepRow] = []
    for index, value in enumerate(values):
        point = _apply_sweep_value(config, param, value)
        point = replace(point, seed=config.seed + _SWEEP_SEED_STRIDE * index)
        estimates = run_experiment(point)
        for metric in sorted(estimates):
            est = estimates[metric]
            rows.append(
                SweepRow(
                    param=param,
                    value=value,
                    metric=metric,
                    mean=est.mean,
                    stderr=est.stderr,
                    trials=est.trials,
                    failures=point.trials - est.trials,
                )
            )
    return rows


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    """Write sweep rows as CSV with a fixed header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "metric", "mean", "stderr", "trials", "failures"])
        for row in rows:
            writer.writerow([row.param, row.value, row.metric, repr(row.mean), repr(row.stderr), row.trials, row.failures])

"""Command-line front end.

Subcommands:

* ``fit``       -- estimate quality scores from a ratings or comparisons CSV.
* ``decide``    -- rate-or-rank verdict for given noise scales, or a whole grid.
* ``simulate``  -- Monte Carlo risk sweep driven by a JSON experiment config.
* ``topology``  -- spectral report for a named comparison topology.
* ``pack``      -- build a separated vector family on the complete design.

Exit codes: 0 on success, 2 for malformed input data or config, 3 for model
failures (disconnected designs, unusable folds, failed constructions).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, bounds, estimate, graph, models, packing, sim
from .errors import (
    ConnectivityError,
    DataFormatError,
    FoldError,
    InsufficientDataError,
    ModelKindError,
    PackingConstructionError,
    RateorankError,
)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_MODEL = 3

SCHEMA_VERSION = "1"

#: Models fit from files; paired_linear has real-valued pair outcomes, which the
#: two documented CSV schemas cannot carry, so it is simulation/library-only here.
FIT_MODELS = ("cardinal", "thurstone", "btl")

ID_ORDERS = ("first-appearance", "sorted")


@dataclass(frozen=True)
class Dataset:
    """Parsed input rows with item ids resolved to indices."""

    kind: str  # "cardinal" | "ordinal"
    item_ids: tuple[str, ...]
    design: np.ndarray
    outcomes: np.ndarray

    @property
    def d(self) -> int:
        return len(self.item_ids)

    def to_observations(self, spec: models.ModelSpec) -> models.ObservationSet:
        if spec.kind == models.CARDINAL and self.kind != "cardinal":
            raise ModelKindError("the cardinal model needs item,rating rows, not comparisons")
        if spec.kind != models.CARDINAL and self.kind != "ordinal":
            raise ModelKindError(f"the {spec.kind} model needs left,right,outcome rows, not ratings")
        return models.ObservationSet(spec, self.d, self.design, self.outcomes)


def _data_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield line_no, [part.strip() for part in text.split(",")]


def _index_ids(names: list[str], id_order: str) -> dict[str, int]:
    if id_order == "sorted":
        return {name: i for i, name in enumerate(sorted(set(names)))}
    ids: dict[str, int] = {}
    for name in names:
        if name not in ids:
            ids[name] = len(ids)
    return ids


def read_ordinal_csv(path, id_order: str = "first-appearance") -> Dataset:
    """Read ``left,right,outcome`` rows with outcomes exactly +1 or -1."""
    names: list[str] = []
    rows: list[tuple[str, str, float]] = []
    for line_no, parts in _data_rows(path):
        if len(parts) != 3:
            raise DataFormatError(f"{path}, line {line_no}: expected 'left,right,outcome', got {','.join(parts)!r}")
        left, right, outcome_text = parts
        if outcome_text not in ("+1", "1", "-1"):
            raise DataFormatError(f"{path}, line {line_no}: outcome must be +1 or -1, got {outcome_text!r}")
        if left == right:
            raise DataFormatError(f"{path}, line {line_no}: an item cannot be compared with itself")
        names.extend((left, right))
        rows.append((left, right, float(int(outcome_text))))
    if not rows:
        raise DataFormatError(f"{path}: no comparison rows found")
    ids = _index_ids(names, id_order)
    design = np.array([(ids[l], ids[r]) for l, r, _ in rows], dtype=np.intp)
    outcomes = np.array([y for _, _, y in rows])
    return Dataset("ordinal", tuple(ids), design, outcomes)


def read_cardinal_csv(path, id_order: str = "first-appearance") -> Dataset:
    """Read ``item,rating`` rows with real-valued ratings."""
    names: list[str] = []
    rows: list[tuple[str, float]] = []
    for line_no, parts in _data_rows(path):
        if len(parts) != 2:
            raise DataFormatError(f"{path}, line {line_no}: expected 'item,rating', got {','.join(parts)!r}")
        item, rating_text = parts
        try:
            rating = float(rating_text)
        except ValueError:
            raise DataFormatError(f"{path}, line {line_no}: rating must be a number, got {rating_text!r}") from None
        names.append(item)
        rows.append((item, rating))
    if not rows:
        raise DataFormatError(f"{path}: no rating rows found")
    ids = _index_ids(names, id_order)
    design = np.array([ids[item] for item, _ in rows], dtype=np.intp)
    outcomes = np.array([rating for _, rating in rows])
    return Dataset("cardinal", tuple(ids), design, outcomes)


def result_document(
    item_ids: tuple[str, ...],
    result: estimate.FitResult,
    model_kind: str,
    b_bound: float,
    metrics: dict | None = None,
    bound_report: bounds.BoundReport | None = None,
) -> dict:
    """Assemble the JSON-ready fit document, items sorted by score descending."""
    w = result.w_hat.values
    order = np.argsort(-w, kind="stable")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "model": model_kind,
        "sigma_used": result.sigma_used,
        "b_bound": b_bound,
        "items": [{"id": item_ids[i], "w_hat": float(w[i])} for i in order],
    }
    if metrics:
        doc["metrics"] = metrics
    if bound_report is not None:
        doc["bounds"] = {
            "model_kind": bound_report.model_kind,
            "norm": bound_report.norm,
            "lower": bound_report.lower,
            "upper": bound_report.upper,
            "kappa": bound_report.kappa,
            "sample_condition_met": bound_report.sample_condition_met,
            "in_regime": bound_report.in_regime,
        }
    return doc


def load_result_document(path) -> dict:
    """Reload a fit document; validates the schema version."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataFormatError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    return doc


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _parse_sigma_grid(text: str) -> tuple[float, ...] | None:
    if text == "default":
        return None  # estimate.cv_sigma falls back to its default grid
    try:
        grid = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise DataFormatError(f"--cv-grid must be 'default' or comma-separated numbers, got {text!r}") from None
    return grid


def cmd_fit(args) -> int:
    if args.model == "cardinal":
        dataset = read_cardinal_csv(args.data, args.id_order)
        spec = models.ModelSpec(models.CARDINAL, sigma=args.sigma if args.sigma is not None else 1.0)
    else:
        dataset = read_ordinal_csv(args.data, args.id_order)
        if args.sigma is None and args.cv_grid is None:
            raise DataFormatError(f"the {args.model} model needs --sigma or --cv-grid")
        spec = models.ModelSpec(args.model, sigma=args.sigma if args.sigma is not None else 1.0, b_bound=args.b_bound)

    config = estimate.FitConfig(
        b_bound=args.b_bound,
        sigma_grid=_parse_sigma_grid(args.cv_grid) if args.cv_grid is not None else None,
        seed=args.seed,
    )
    obs = dataset.to_observations(spec)

    metrics: dict = {}
    if args.model != "cardinal" and args.cv_grid is not None:
        sigma_best, table = estimate.cv_sigma(obs, config)
        obs = obs.with_sigma(sigma_best)
        metrics["cv_table"] = [{"sigma": s, "heldout_loglik": ll} for s, ll in table]

    result = estimate.mle_fit(obs, config)
    metrics.update(
        final_nll=result.final_nll,
        iterations=result.iterations,
        converged=result.converged,
        active_box=list(result.active_box),
    )

    bound_report = None
    if args.model != "cardinal":
        lap = graph.build_laplacian_from_design(obs.d, obs.design)
        summary = graph.spectral_summary(lap)
        bound_report = bounds.minimax_seminorm(
            args.model, obs.d, obs.n, obs.model.sigma, args.b_bound, summary.trace_pinv_std
        )
    elif obs.model.sigma > 0:
        bound_report = bounds.minimax_cvo(models.CARDINAL, obs.d, obs.n, obs.model.sigma, args.b_bound)

    doc = result_document(dataset.item_ids, result, args.model, args.b_bound, metrics, bound_report)
    if args.out:
        _write_json(doc, args.out)
    print(f"fit {args.model}: d={obs.d} n={obs.n} sigma={obs.model.sigma:g} "
          f"nll={result.final_nll:.6g} converged={result.converged}")
    for entry_ in doc["items"]:
        print(f"  {entry_['id']}: {entry_['w_hat']:+.6f}")
    if not result.converged:
        print("warning: solver did not converge; scores may be inaccurate", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


def cmd_decide(args) -> int:
    if args.grid is not None:
        sc_lo, sc_hi, so_lo, so_hi = args.grid
        rows = bounds.decision_grid((sc_lo, sc_hi), (so_lo, so_hi), args.b_bound, args.resolution)
        if args.out:
            bounds.write_decision_grid(rows, args.out)
        counts = {v: 0 for v in (bounds.VERDICT_CARDINAL, bounds.VERDICT_ORDINAL, bounds.VERDICT_INDETERMINATE)}
        for _, _, verdict in rows:
            counts[verdict] += 1
        print(f"decision grid {args.resolution}x{args.resolution}: " +
              ", ".join(f"{v}={c}" for v, c in counts.items()))
        return EXIT_OK
    decision = bounds.decide(args.sigma_c, args.sigma_o, args.b_bound)
    lo, hi = decision.ordinal_interval
    print(f"verdict: {decision.verdict}")
    print(f"cardinal risk ~ {decision.cardinal_risk:.6g} * d/n")
    print(f"ordinal risk in [{lo:.6g}, {hi:.6g}] * d/n")
    return EXIT_OK


def _config_value(doc: dict, path: str, expected, required: bool = True, default=None):
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise DataFormatError(f"config field {path}: missing")
            return default
        node = node[part]
    if expected is float:
        if not isinstance(node, (int, float)) or isinstance(node, bool):
            raise DataFormatError(f"config field {path}: expected a number, got {node!r}")
        return float(node)
    if expected is int:
        if not isinstance(node, int) or isinstance(node, bool):
            raise DataFormatError(f"config field {path}: expected an integer, got {node!r}")
        return node
    if not isinstance(node, expected):
        raise DataFormatError(f"config field {path}: expected {expected.__name__}, got {node!r}")
    return node


def parse_experiment_config(doc: dict) -> tuple[sim.ExperimentConfig, str | None, list]:
    """Validate a simulate config document; returns (config, sweep_param, sweep_values)."""
    kind = _config_value(doc, "model.kind", str)
    if kind not in models.MODEL_KINDS:
        raise DataFormatError(f"config field model.kind: unknown model {kind!r}")
    sigma = _config_value(doc, "model.sigma", float)
    b_bound = _config_value(doc, "model.b_bound", float, required=kind in models.BINARY_KINDS, default=None)
    topo_kind = _config_value(doc, "topology.kind", str, required=kind != models.CARDINAL, default="complete")
    d = _config_value(doc, "topology.d", int)
    n = _config_value(doc, "topology.n", int)
    k = _config_value(doc, "topology.k", int, required=False)
    trials = _config_value(doc, "trials", int)
    seed = _config_value(doc, "seed", int, required=False, default=0)

    if "w_true" not in doc:
        raise DataFormatError("config field w_true: missing")
    w_true = doc["w_true"]
    if isinstance(w_true, list):
        w_true = models.QualityVector(np.asarray(w_true, dtype=float))
    elif not isinstance(w_true, dict):
        raise DataFormatError("config field w_true: expected a vector or a generator rule object")

    fit_fields = doc.get("fit", {})
    if not isinstance(fit_fields, dict):
        raise DataFormatError("config field fit: expected an object")
    fit_grid = fit_fields.get("sigma_grid")
    fit = estimate.FitConfig(
        b_bound=fit_fields.get("b_bound", b_bound if b_bound is not None else 1.0),
        max_iters=fit_fields.get("max_iters", 2000),
        grad_tol=fit_fields.get("grad_tol"),
        sigma_grid=tuple(fit_grid) if fit_grid else None,
        seed=fit_fields.get("seed", 0),
    )

    try:
        model = models.ModelSpec(kind, sigma=sigma, b_bound=b_bound)
        config = sim.ExperimentConfig(
            model=model,
            topology=sim.TopologySpec(kind=topo_kind, d=d, n=n, k=k),
            w_true=w_true,
            trials=trials,
            seed=seed,
            fit=fit,
        )
    except (ValueError, ModelKindError) as exc:
        raise DataFormatError(f"config rejected: {exc}") from exc

    sweep_param, sweep_values = None, []
    if "sweep" in doc:
        sweep_param = _config_value(doc, "sweep.param", str)
        sweep_values = _config_value(doc, "sweep.values", list)
        if sweep_param not in sim.SWEEPABLE:
            raise DataFormatError(f"config field sweep.param: cannot sweep {sweep_param!r}")
        if not sweep_values:
            raise DataFormatError("config field sweep.values: must be a nonempty list")
    return config, sweep_param, sweep_values


def _row_bound(config: sim.ExperimentConfig, param: str, value) -> bounds.BoundReport | None:
    point = sim._apply_sweep_value(config, param, value) if param else config
    spec, topo = point.model, point.topology
    try:
        if spec.kind == models.CARDINAL:
            return bounds.minimax_cvo(models.CARDINAL, topo.d, topo.n, spec.sigma, spec.b_bound or 1.0)
        lap = graph.laplacian_of(graph.generate_topology(topo.kind, topo.d, topo.n, seed=point.seed, k=topo.k))
        summary = graph.spectral_summary(lap)
        return bounds.minimax_seminorm(spec.kind, topo.d, topo.n, spec.sigma, spec.b_bound or 1.0, summary.trace_pinv_std)
    except ValueError:
        return None  # e.g. sigma = 0: bounds are undefined, rows still print


def cmd_simulate(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{args.config}: invalid JSON ({exc})") from exc
    config, sweep_param, sweep_values = parse_experiment_config(doc)

    if sweep_param is None:
        sweep_param, sweep_values = "n", [config.topology.n]
    rows = sim.sweep(config, sweep_param, sweep_values)

    if args.out:
        sim.write_sweep_csv(rows, args.out)

    headline = sim.METRIC_SEMINORM if config.model.kind != models.CARDINAL else sim.METRIC_PER_ITEM
    for row in rows:
        line = (f"{row.param}={row.value} {row.metric}: mean={row.mean:.6g} "
                f"stderr={row.stderr:.3g} trials={row.trials} failures={row.failures}")
        if row.metric == headline:
            report = _row_bound(config, row.param, row.value)
            if report is not None:
                line += f"  bound=[{report.lower:.3g}, {report.upper:.3g}]"
        print(line)
    return EXIT_OK


def cmd_topology(args) -> int:
    g = graph.generate_topology(args.kind, args.d, args.n, seed=args.seed, k=args.k)
    lap = graph.laplacian_of(g)
    summary = graph.spectral_summary(lap)
    print(f"topology {args.kind}: d={args.d} n={args.n} edges={len(g.edges)}")
    print(f"connected: {summary.connected}")
    print(f"lambda2(std): {summary.lambda2_std:.6g}")
    print(f"trace_pinv(std): {summary.trace_pinv_std:.6g}")
    print(f"rate factor d/lambda2(std): {args.d / summary.lambda2_std:.6g}  (x sigma^2/n)")
    if args.out:
        graph.write_edge_list(g, args.out)
    return EXIT_OK


def cmd_pack(args) -> int:
    lap = graph.laplacian_of(graph.generate_topology("complete", args.d, args.d * (args.d - 1) // 2))
    pack = packing.build_packing(lap, args.delta, args.alpha)
    report = packing.verify_packing(pack)
    if args.out:
        packing.packing_to_json(pack, args.out)
    print(f"packing: d={args.d} delta={args.delta:g} alpha={args.alpha:g} beta={pack.beta:.6g}")
    print(f"vectors: {pack.count}")
    print(f"pair separation^2 in [{report.min_pair:.6g}, {report.max_pair:.6g}] "
          f"(required [{args.alpha * args.delta**2:.6g}, {4 * args.delta**2:.6g}])")
    print(f"max |sum(w)|: {report.mean_zero_max:.3g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rateorank", description="Quality scores from ratings or comparisons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit quality scores from a CSV dataset")
    fit.add_argument("data", help="CSV file: item,rating or left,right,outcome rows")
    fit.add_argument("--model", choices=FIT_MODELS, required=True)
    fit.add_argument("--sigma", type=float, default=None, help="noise scale (fixed)")
    fit.add_argument("--cv-grid", default=None,
                     help="'default' or comma-separated sigmas to cross-validate over")
    fit.add_argument("--b-bound", type=float, default=1.0)
    fit.add_argument("--id-order", choices=ID_ORDERS, default="first-appearance")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=None, help="write the fit document (JSON) here")
    fit.set_defaults(func=cmd_fit)

    decide = sub.add_parser("decide", help="rate-or-rank verdict from noise scales")
    decide.add_argument("--sigma-c", type=float, help="rating noise scale")
    decide.add_argument("--sigma-o", type=float, help="comparison noise scale")
    decide.add_argument("--b-bound", type=float, default=1.0)
    decide.add_argument("--grid", type=float, nargs=4, metavar=("SC_LO", "SC_HI", "SO_LO", "SO_HI"),
                        default=None, help="evaluate a log-spaced verdict grid instead")
    decide.add_argument("--resolution", type=int, default=20)
    decide.add_argument("--out", default=None, help="write the grid as CSV here")
    decide.set_defaults(func=cmd_decide)

    simulate = sub.add_parser("simulate", help="Monte Carlo risk sweep from a JSON config")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--out", default=None, help="write the sweep table as CSV here")
    simulate.set_defaults(func=cmd_simulate)

    topology = sub.add_parser("topology", help="spectral report for a comparison topology")
    topology.add_argument("--kind", choices=graph.TOPOLOGY_KINDS, required=True)
    topology.add_argument("--d", type=int, required=True)
    topology.add_argument("--n", type=int, required=True)
    topology.add_argument("--k", type=int, default=None, help="degree for the expander kind")
    topology.add_argument("--seed", type=int, default=0)
    topology.add_argument("--out", default=None, help="write the edge list here")
    topology.set_defaults(func=cmd_topology)

    pack = sub.add_parser("pack", help="build a separated vector family (complete design)")
    pack.add_argument("--d", type=int, required=True)
    pack.add_argument("--delta", type=float, required=True)
    pack.add_argument("--alpha", type=float, required=True)
    pack.add_argument("--out", default=None, help="write the packing as JSON here")
    pack.set_defaults(func=cmd_pack)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "decide" and args.grid is None and (args.sigma_c is None or args.sigma_o is None):
        print("error: decide needs --sigma-c and --sigma-o (or --grid)", file=sys.stderr)
        return EXIT_DATA
    try:
        return args.func(args)
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, IndexError) as exc:
        if isinstance(exc, (ConnectivityError, ModelKindError, FoldError, InsufficientDataError, PackingConstructionError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_MODEL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))

"""Comparison multigraphs and their Laplacian spectra.

A comparison design on ``d`` items is an undirected multigraph: every time a
pair is compared the corresponding edge gains one unit of weight.  The
combinatorial Laplacian ``M`` of the weighted graph is the Gram matrix of the
differencing vectors of the design, and ``M / n`` (``n`` = total number of
comparisons) is the standardized design covariance.  Risk bounds, packings and
seminorm metrics are all phrased in terms of ``M``, its Moore-Penrose
pseudoinverse and its spectrum, so those objects live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConnectivityError

# Eigenvalues below RANK_TOL * lambda_max are treated as structural zeros.
RANK_TOL = 1e-10

TOPOLOGY_KINDS = ("complete", "dumbbell", "expander", "star")

# Minimum algebraic connectivity (relative to degree) accepted when sampling
# a random regular graph, and the cap on resampling attempts.
_EXPANDER_LAMBDA2_FRACTION = 0.1
_EXPANDER_MAX_ATTEMPTS = 5000


@dataclass(frozen=True)
class ComparisonEdge:
    """One compared pair; ``left`` carries +1 and ``right`` -1 in the differencing vector."""

    left: int
    right: int

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ValueError(f"edge must join two distinct items, got ({self.left}, {self.right})")
        if self.left < 0 or self.right < 0:
            raise IndexError(f"item indices must be nonnegative, got ({self.left}, {self.right})")


@dataclass(frozen=True)
class ComparisonGraph:
    """A weighted comparison multigraph on ``d`` items.

    ``edges`` holds ``(left, right, weight)`` triples with ``left < right``,
    lexicographically sorted, each weight a positive integer giving the number
    of times that pair is compared.
    """

    d: int
    edges: tuple[tuple[int, int, int], ...]

    @property
    def n(self) -> int:
        """Total number of comparisons (sum of edge weights)."""
        return sum(w for _, _, w in self.edges)

    def to_design(self) -> np.ndarray:
        """Expand the multigraph into an (n, 2) array of comparison rows."""
        rows = [(a, b) for a, b, w in self.edges for _ in range(w)]
        return np.array(rows, dtype=np.intp)


def comparison_graph(d: int, weighted_edges) -> ComparisonGraph:
    """Build a :class:`ComparisonGraph`, merging duplicates and validating ranges."""
    if d < 2:
        raise ValueError(f"need at least 2 items, got d={d}")
    merged: dict[tuple[int, int], int] = {}
    for a, b, w in weighted_edges:
        a, b, w = int(a), int(b), int(w)
        if a == b:
            raise ValueError(f"self-comparison ({a}, {b}) is not allowed")
        if not (0 <= a < d and 0 <= b < d):
            raise IndexError(f"edge ({a}, {b}) out of range for d={d}")
        if w <= 0:
            raise ValueError(f"edge ({a}, {b}) has nonpositive weight {w}")
        key = (min(a, b), max(a, b))
        merged[key] = merged.get(key, 0) + w
    if not merged:
        raise ValueError("a comparison graph needs at least one edge")
    edges = tuple((a, b, merged[(a, b)]) for a, b in sorted(merged))
    return ComparisonGraph(d=d, edges=edges)


@dataclass(frozen=True)
class Laplacian:
    """Combinatorial Laplacian of a comparison design plus its eigendecomposition.

    ``eigenvalues`` are sorted nonincreasing with near-zero values clamped to
    exactly zero; ``eigenvectors`` holds the matching orthonormal columns.
    ``n`` is the number of comparisons the design contains, so ``m / n`` is the
    standardized covariance.
    """

    m: np.ndarray
    n: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def d(self) -> int:
        return self.m.shape[0]

    @property
    def lambda1(self) -> float:
        """Largest eigenvalue."""
        return float(self.eigenvalues[0])

    @property
    def lambda2(self) -> float:
        """Second-smallest eigenvalue (algebraic connectivity of the multigraph)."""
        return float(self.eigenvalues[-2])

    @property
    def connected(self) -> bool:
        return self.lambda2 > 0.0

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues))


@dataclass(frozen=True)
class SpectralSummary:
    """Spectral facts about the standardized covariance ``m / n``."""

    lambda2_std: float
    trace_pinv_std: float
    connected: bool


def build_laplacian(d: int, weighted_edges) -> Laplacian:
    """Assemble the Laplacian of a weighted comparison graph and eigendecompose it.

    ``weighted_edges`` is an iterable of ``(left, right, weight)`` triples.
    """
    graph = comparison_graph(d, weighted_edges)
    m = np.zeros((d, d))
    for a, b, w in graph.edges:
        m[a, a] += w
        m[b, b] += w
        m[a, b] -= w
        m[b, a] -= w
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    # eigh returns ascending order; flip to nonincreasing.
    eigenvalues = eigenvalues[::-1].copy()
    eigenvectors = eigenvectors[:, ::-1].copy()
    eigenvalues[eigenvalues < RANK_TOL * eigenvalues[0]] = 0.0
    return Laplacian(m=m, n=graph.n, eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def laplacian_of(graph: ComparisonGraph) -> Laplacian:
    """Laplacian of an already-built comparison graph."""
    return build_laplacian(graph.d, graph.edges)


def build_laplacian_from_design(d: int, design: np.ndarray) -> Laplacian:
    """Laplacian of an (n, 2) design array (each row one unit-weight comparison)."""
    design = np.asarray(design, dtype=np.intp)
    if design.ndim != 2 or design.shape[1] != 2:
        raise ValueError(f"design must have shape (n, 2), got {design.shape}")
    return build_laplacian(d, [(a, b, 1) for a, b in design])


def pseudo_inverse(laplacian: Laplacian) -> np.ndarray:
    """Moore-Penrose pseudoinverse of the Laplacian via its eigendecomposition.

    Raises :class:`ConnectivityError` on a disconnected graph, where the
    estimation problem the pseudoinverse feeds into is not identifiable.
    """
    if not laplacian.connected:
        raise ConnectivityError("comparison graph is disconnected; pseudoinverse refused")
    inv = np.zeros_like(laplacian.eigenvalues)
    np.divide(1.0, laplacian.eigenvalues, out=inv, where=laplacian.eigenvalues > 0)
    u = laplacian.eigenvectors
    return (u * inv) @ u.T


def spectral_summary(laplacian: Laplacian) -> SpectralSummary:
    """Summary of the standardized covariance: connectivity, lambda_2, trace of the pseudoinverse."""
    nonzero = laplacian.eigenvalues[laplacian.eigenvalues > 0]
    trace_pinv = float(np.sum(1.0 / nonzero)) if nonzero.size else float("inf")
    return SpectralSummary(
        lambda2_std=laplacian.lambda2 / laplacian.n,
        trace_pinv_std=laplacian.n * trace_pinv,
        connected=laplacian.connected,
    )


def _base_edges(kind: str, d: int, k: int | None, rng: np.random.Generator) -> list[tuple[int, int]]:
    if kind == "complete":
        return [(a, b) for a in range(d) for b in range(a + 1, d)]
    if kind == "dumbbell":
        if d < 4 or d % 2:
            raise ValueError(f"dumbbell topology needs even d >= 4, got d={d}")
        half = d // 2
        edges = [(a, b) for a in range(half) for b in range(a + 1, half)]
        edges += [(a, b) for a in range(half, d) for b in range(a + 1, d)]
        edges.append((half - 1, half))
        return sorted(edges)
    if kind == "star":
        return [(0, b) for b in range(1, d)]
    if kind == "expander":
        if k is None:
            raise ValueError("expander topology needs a degree k")
        if not (3 <= k < d):
            raise ValueError(f"expander degree must satisfy 3 <= k < d, got k={k}, d={d}")
        if (k * d) % 2:
            raise ValueError(f"k*d must be even for a k-regular graph, got k={k}, d={d}")
        return _sample_regular(d, k, rng)
    raise ValueError(f"unknown topology kind {kind!r}")


def _sample_regular(d: int, k: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random simple k-regular graph by the pairing model, kept only if well-connected."""
    for _ in range(_EXPANDER_MAX_ATTEMPTS):
        stubs = np.repeat(np.arange(d), k)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = {(min(a, b), max(a, b)) for a, b in pairs}
        if len(edges) < pairs.shape[0] or any(a == b for a, b in pairs):
            continue  # multi-edge or self-loop: resample
        lap = build_laplacian(d, [(a, b, 1) for a, b in edges])
        if lap.lambda2 >= _EXPANDER_LAMBDA2_FRACTION * k:
            return sorted(edges)
    raise RuntimeError(f"failed to sample a {k}-regular expander on {d} vertices")


def generate_topology(kind: str, d: int, n: int, seed: int = 0, k: int | None = None) -> ComparisonGraph:
    """Build a named comparison topology with ``n`` comparisons spread evenly.

    Every base edge receives ``n // E`` comparisons; the remainder is handed
    out one at a time in lexicographic edge order.
    """
    if d < 2:
        raise ValueError(f"need at least 2 items, got d={d}")
    rng = np.random.default_rng(seed)
    base = _base_edges(kind, d, k, rng)
    if n < len(base):
        raise ValueError(f"need n >= {len(base)} comparisons to cover every edge of {kind}, got n={n}")
    per_edge, remainder = divmod(n, len(base))
    weighted = [(a, b, per_edge + (1 if i < remainder else 0)) for i, (a, b) in enumerate(base)]
    return comparison_graph(d, weighted)


def write_edge_list(graph: ComparisonGraph, path, item_ids: list[str] | None = None) -> None:
    """Write a graph as ``left_id,right_id,weight`` rows."""
    if item_ids is None:
        item_ids = [str(i) for i in range(graph.d)]
    if len(item_ids) != graph.d:
        raise ValueError(f"expected {graph.d} item ids, got {len(item_ids)}")
    with open(path, "w", encoding="utf-8") as fh:
        for a, b, w in graph.edges:
            fh.write(f"{item_ids[a]},{item_ids[b]},{w}\n")


def read_edge_list(path) -> tuple[ComparisonGraph, list[str]]:
    """Read ``left_id,right_id,weight`` rows; ids are indexed by first appearance."""
    ids: dict[str, int] = {}
    triples: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ValueError(f"line {line_no}: expected 'left,right,weight', got {line!r}")
            left, right, weight_text = parts
            try:
                weight = int(weight_text)
            except ValueError:
                raise ValueError(f"line {line_no}: weight must be an integer, got {weight_text!r}") from None
            for name in (left, right):
                if name not in ids:
                    ids[name] = len(ids)
            triples.append((ids[left], ids[right], weight))
    if not triples:
        raise ValueError("edge list is empty")
    item_ids = list(ids)
    return comparison_graph(len(item_ids), triples), item_ids

"""Well-separated families of feasible quality vectors.

The construction takes a binary code with guaranteed Hamming separation
(greedy lexicographic scan, so it meets the classical volume lower bound),
recenters the codewords to +-1 entries with one zeroed coordinate, and lifts
them through the design Laplacian's half-pseudoinverse.  The lift turns
Hamming distance into squared seminorm distance exactly, which yields
families of mean-zero vectors whose pairwise separations are pinned to a
narrow band -- the raw material for information-theoretic lower bounds on
estimation risk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConnectivityError, PackingConstructionError
from .graph import Laplacian
from .models import QualityVector

_MEAN_ZERO_TOL = 1e-10
_PAIR_TOL = 1e-8
_SCAN_BLOCK = 1 << 16


@dataclass(frozen=True)
class BinaryCode:
    """A binary code found by greedy lexicographic scan.

    ``words`` has shape (count, length) with 0/1 entries, in the order kept.
    ``shortfall`` is set when the scan exhausted the whole space before
    reaching its target count.
    """

    length: int
    min_distance: int
    words: np.ndarray
    shortfall: bool

    @property
    def count(self) -> int:
        return self.words.shape[0]


def hamming_ball_volume(length: int, radius: int) -> int:
    """Number of binary words within the given Hamming radius of a point."""
    return sum(math.comb(length, r) for r in range(radius + 1))


def gv_code(length: int, min_distance: int, target_count: int) -> BinaryCode:
    """Greedy code: scan words in counting order, keep those far from all kept words.

    Stops as soon as ``target_count`` words are kept.  Run to exhaustion, the
    greedy scan always reaches at least
    ``2**length / hamming_ball_volume(length, min_distance - 1)`` words, the
    classical volume guarantee.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if not (1 <= min_distance <= length):
        raise ValueError(f"min_distance must be in [1, {length}], got {min_distance}")
    if target_count < 1:
        raise ValueError(f"target_count must be >= 1, got {target_count}")

    bit_positions = np.arange(length, dtype=np.uint64)
    kept: list[np.ndarray] = []
    total = 1 << length
    start = 0
    while start < total and len(kept) < target_count:
        stop = min(start + _SCAN_BLOCK, total)
        block = np.arange(start, stop, dtype=np.uint64)
        bits = ((block[:, None] >> bit_positions) & np.uint64(1)).astype(np.int64)
        if kept:
            old = np.asarray(kept)
            # Hamming distance to every kept word via two inner products.
            dist = bits @ (1 - old.T) + (1 - bits) @ old.T
            candidates = bits[dist.min(axis=1) >= min_distance]
        else:
            candidates = bits
        fresh: list[np.ndarray] = []
        for word in candidates:
            if fresh:
                block_dist = np.abs(np.asarray(fresh) - word).sum(axis=1)
                if int(block_dist.min()) < min_distance:
                    continue
            fresh.append(word)
            if len(kept) + len(fresh) >= target_count:
                break
        kept.extend(fresh)
        start = stop
    words = np.asarray(kept, dtype=np.int64).reshape(len(kept), length)
    return BinaryCode(
        length=length,
        min_distance=min_distance,
        words=words,
        shortfall=len(kept) < target_count,
    )


@dataclass(frozen=True)
class Packing:
    """A separated family of mean-zero vectors lifted from a binary code."""

    laplacian: Laplacian
    delta: float
    alpha: float
    beta: float
    vectors: tuple[QualityVector, ...]

    @property
    def count(self) -> int:
        return len(self.vectors)

    def as_array(self) -> np.ndarray:
        return np.asarray([v.values for v in self.vectors])


@dataclass(frozen=True)
class PackingReport:
    """Exhaustive verification facts for a packing."""

    min_pair: float
    max_pair: float
    mean_zero_max: float
    count_ok: bool

    def ok(self, delta: float, alpha: float) -> bool:
        return (
            self.count_ok
            and self.mean_zero_max <= _MEAN_ZERO_TOL
            and self.min_pair >= alpha * delta**2 - _PAIR_TOL
            and self.max_pair <= 4.0 * delta**2 + _PAIR_TOL
        )


def packing_rate(alpha: float) -> float:
    """Exponential rate: families of about e^(rate * d) vectors are achievable."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return (math.log(2.0) + alpha * math.log(alpha) - alpha) / 2.0


def build_packing(laplacian: Laplacian, delta: float, alpha: float) -> Packing:
    """Build a verified packing of separation scale ``delta`` on a connected design.

    Constructs a binary code of length ``d - 1`` with Hamming separation
    ``ceil(alpha * d)``, signs it, pads the coordinate aligned with the
    Laplacian nullspace with a zero, and lifts through
    ``(delta / sqrt(d)) * U * pinv(Lambda)^(1/2)``.  Every pair of lifted
    vectors then has squared seminorm distance in ``[alpha, 4] * delta^2``.
    """
    if not laplacian.connected:
        raise ConnectivityError("packing construction needs a connected design")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    d = laplacian.d
    beta = packing_rate(alpha)
    min_distance = math.ceil(alpha * d)
    if min_distance > d - 1:
        raise ValueError(f"alpha={alpha} asks for Hamming distance {min_distance} on words of length {d - 1}")
    target = math.ceil(math.exp(beta * d))
    if target < 2:
        raise ValueError(f"alpha={alpha}, d={d} targets fewer than 2 vectors; nothing to pack")

    code = gv_code(d - 1, min_distance, target)
    if code.shortfall:
        raise PackingConstructionError(
            f"greedy code exhausted at {code.count} words; {target} needed for alpha={alpha}, d={d}"
        )

    signs = 2.0 * code.words - 1.0
    # Zero coordinate goes where the zero eigenvalue sits (last, by sort order).
    padded = np.hstack([signs, np.zeros((code.count, 1))])
    half_inv = np.zeros_like(laplacian.eigenvalues)
    np.divide(1.0, np.sqrt(laplacian.eigenvalues), out=half_inv, where=laplacian.eigenvalues > 0)
    lift = laplacian.eigenvectors * half_inv  # U @ diag(1/sqrt(lambda))
    raw = (delta / math.sqrt(d)) * padded @ lift.T

    # Rows are mean-zero by construction (the zero pad kills the nullspace
    # coordinate); constructing QualityVectors revalidates that, no recentering.
    vectors = tuple(QualityVector(row) for row in raw)
    packing = Packing(laplacian=laplacian, delta=delta, alpha=alpha, beta=beta, vectors=vectors)
    report = verify_packing(packing)
    if not report.ok(delta, alpha):
        worst = _worst_pair(packing)
        raise PackingConstructionError(
            f"packing failed verification: pair {worst} has squared separation outside "
            f"[{alpha * delta**2:.6g}, {4 * delta**2:.6g}] "
            f"(min={report.min_pair:.6g}, max={report.max_pair:.6g}, "
            f"mean_zero_max={report.mean_zero_max:.3g})"
        )
    return packing


def verify_packing(packing: Packing) -> PackingReport:
    """Exhaustively check pairwise separations, centering, and the count target."""
    arr = packing.as_array()
    m = packing.laplacian.m
    count = arr.shape[0]
    pairs: list[float] = []
    for i in range(count):
        for j in range(i + 1, count):
            diff = arr[i] - arr[j]
            pairs.append(float(diff @ m @ diff))
    min_pair = min(pairs) if pairs else float("inf")
    max_pair = max(pairs) if pairs else 0.0
    mean_zero_max = float(np.max(np.abs(arr.sum(axis=1)))) if count else 0.0
    target = math.ceil(math.exp(packing.beta * packing.laplacian.d))
    return PackingReport(
        min_pair=min_pair,
        max_pair=max_pair,
        mean_zero_max=mean_zero_max,
        count_ok=count >= target,
    )


def _worst_pair(packing: Packing) -> tuple[int, int]:
    arr = packing.as_array()
    m = packing.laplacian.m
    lo, hi = packing.alpha * packing.delta**2, 4.0 * packing.delta**2
    worst, worst_margin = (0, 1), 0.0
    for i in range(arr.shape[0]):
        for j in range(i + 1, arr.shape[0]):
            diff = arr[i] - arr[j]
            val = float(diff @ m @ diff)
            margin = max(lo - val, val - hi)
            if margin > worst_margin:
                worst, worst_margin = (i, j), margin
    return worst


def packing_to_json(packing: Packing, path) -> None:
    """Write the packing as JSON: delta, alpha, beta, and the vector rows."""
    doc = {
        "delta": packing.delta,
        "alpha": packing.alpha,
        "beta": packing.beta,
        "vectors": [v.values.tolist() for v in packing.vectors],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")

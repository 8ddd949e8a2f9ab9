"""Euclidean MST construction and nonparametric Bayes-error bounds.

The overlap between class-conditional distributions is measured without
density estimation: build a Euclidean minimum spanning tree over a sample,
count the edges whose endpoints carry different class labels, and convert
those counts into Henze-Penrose divergence estimates and two-sided bounds on
the Bayes error rate. Applied cluster by cluster, this yields the per-region
error levels that drive the smoothing-strength solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import (
    Clustering,
    ClusterBerEstimate,
    Dataset,
    DomainError,
    _readonly,
)

__all__ = [
    "Mst",
    "build_mst",
    "cross_edge_counts",
    "HpEstimate",
    "hp_divergence_binary",
    "ber_bounds_binary",
    "ber_bounds_multiclass",
    "cluster_ber",
    "DELTA_ESTIMATORS",
]

DELTA_ESTIMATORS = ("halved", "paper")


@dataclass(frozen=True)
class Mst:
    """A spanning tree: (n-1) index pairs with their Euclidean lengths."""

    edges: np.ndarray  # (n-1, 2) int64, each row sorted so edge[0] < edge[1]
    lengths: np.ndarray  # (n-1,) float64
    total_weight: float

    def __post_init__(self):
        object.__setattr__(self, "edges", _readonly(np.asarray(self.edges, np.int64)))
        object.__setattr__(self, "lengths", _readonly(np.asarray(self.lengths, float)))

    @property
    def num_points(self) -> int:
        return self.edges.shape[0] + 1


def build_mst(points) -> Mst:
    """Exact Euclidean minimum spanning tree via Prim's algorithm.

    Runs in O(n^2) time and memory-light form (no full distance matrix is
    stored). Ties between equal-length candidate edges are broken by the
    lexicographically smallest (min index, max index) pair, so the tree is
    deterministic even with duplicate points.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n < 2:
        raise DomainError(f"an MST needs at least 2 points, got {n}")
    if not np.isfinite(pts).all():
        raise DomainError("points must be finite")

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_dist = np.sqrt(((pts - pts[0]) ** 2).sum(axis=1))
    best_from = np.zeros(n, dtype=np.int64)
    best_dist[0] = np.inf

    edges = np.empty((n - 1, 2), dtype=np.int64)
    lengths = np.empty(n - 1, dtype=np.float64)
    for k in range(n - 1):
        masked = np.where(in_tree, np.inf, best_dist)
        d = masked.min()
        ties = np.flatnonzero(masked == d)
        if ties.size == 1:
            v = int(ties[0])
        else:
            pairs = [
                (min(int(t), int(best_from[t])), max(int(t), int(best_from[t])), int(t))
                for t in ties
            ]
            v = min(pairs)[2]
        u = int(best_from[v])
        edges[k] = (min(u, v), max(u, v))
        lengths[k] = best_dist[v]
        in_tree[v] = True
        new_dist = np.sqrt(((pts - pts[v]) ** 2).sum(axis=1))
        closer = new_dist < best_dist
        # on exact ties prefer the lexicographically smaller candidate pair
        tied = new_dist == best_dist
        if tied.any():
            idx = np.arange(n)
            old_lo = np.minimum(idx, best_from)
            old_hi = np.maximum(idx, best_from)
            new_lo = np.minimum(idx, v)
            new_hi = np.maximum(idx, v)
            closer |= tied & (
                (new_lo < old_lo) | ((new_lo == old_lo) & (new_hi < old_hi))
            )
        closer &= ~in_tree
        best_dist[closer] = new_dist[closer]
        best_from[closer] = v
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return Mst(
        edges=edges[order],
        lengths=lengths[order],
        total_weight=float(lengths.sum()),
    )


def cross_edge_counts(mst: Mst, labels, num_classes: int | None = None) -> np.ndarray:
    """Symmetric K x K matrix of edge counts by endpoint label pair.

    Entry (i, j), i != j, counts tree edges joining a class-i point to a
    class-j point; the diagonal counts within-class edges. The total over
    i <= j equals n - 1.
    """
    labs = np.asarray(labels, dtype=np.int64)
    if labs.shape[0] != mst.num_points:
        raise DomainError(
            f"got {labs.shape[0]} labels for an MST over {mst.num_points} points"
        )
    if num_classes is None:
        num_classes = int(labs.max()) + 1
    a = labs[mst.edges[:, 0]]
    b = labs[mst.edges[:, 1]]
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (np.minimum(a, b), np.maximum(a, b)), 1)
    off = np.triu(counts, 1)
    return counts * np.eye(num_classes, dtype=np.int64) + off + off.T


@dataclass(frozen=True)
class HpEstimate:
    """Henze-Penrose divergence estimate for one class pair."""

    divergence: float  # clamped to [0, 1]
    cross_edges: int
    n_i: int
    n_j: int


def hp_divergence_binary(cross_edges: int, n_i: int, n_j: int) -> HpEstimate:
    """Estimate the Henze-Penrose divergence from MST cross-edge counts.

    The Friedman-Rafsky statistic ``1 - C_ij (N_i + N_j) / (2 N_i N_j)``
    converges to the divergence between the two class-conditional densities;
    the finite-sample value is clamped to [0, 1].
    """
    if n_i < 1 or n_j < 1:
        raise DomainError("both classes need at least one sample")
    raw = 1.0 - cross_edges * (n_i + n_j) / (2.0 * n_i * n_j)
    return HpEstimate(
        divergence=float(min(1.0, max(0.0, raw))),
        cross_edges=int(cross_edges),
        n_i=int(n_i),
        n_j=int(n_j),
    )


def ber_bounds_binary(
    divergence: float, prior_i: float, prior_j: float
) -> tuple[float, float]:
    """Two-sided Bayes-error bounds for a class pair from its divergence.

    With pair-restricted priors p and q = 1 - p and divergence D, the
    quantity u = 4 p q D + (p - q)^2 sandwiches the pairwise Bayes error:
    (1 - sqrt(u)) / 2 <= R <= (1 - u) / 2.
    """
    total = prior_i + prior_j
    if total <= 0:
        raise DomainError("pair priors must have positive mass")
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"pair priors must sum to 1, got {total}")
    if not 0.0 <= divergence <= 1.0:
        raise DomainError(f"divergence must lie in [0, 1], got {divergence}")
    p = prior_i / total
    q = prior_j / total
    u = 4.0 * p * q * divergence + (p - q) ** 2
    u = min(1.0, max(0.0, u))
    lower = 0.5 - 0.5 * math.sqrt(u)
    upper = 0.5 - 0.5 * u
    return lower, upper


def _delta_denominator(n_points: int, delta_estimator: str) -> float:
    if delta_estimator == "halved":
        return 2.0 * n_points
    if delta_estimator == "paper":
        return float(n_points)
    raise DomainError(
        f"delta_estimator must be one of {DELTA_ESTIMATORS}, got {delta_estimator!r}"
    )


def ber_bounds_multiclass(
    cross_edges: np.ndarray,
    n_points: int,
    num_classes: int,
    delta_estimator: str = "halved",
) -> tuple[float, float]:
    """Multiclass Bayes-error bounds from a single global spanning tree.

    The pairwise confusion integrals delta_ij are estimated from the
    cross-edge counts of one MST over all classes; with s = sum_{i<j}
    delta_ij and m = (K-1)/K,

        lower = m * (1 - sqrt(max(0, 1 - s / (m / 2))))
        upper = min(2 s, m)

    ``delta_estimator`` selects C_ij / (2N) (``halved``, the default, which
    matches the analytic value of delta_ij for identical balanced
    distributions) or C_ij / N (``paper``).
    """
    if num_classes < 2:
        raise DomainError("num_classes must be >= 2")
    counts = np.asarray(cross_edges, dtype=np.float64)
    denom = _delta_denominator(n_points, delta_estimator)
    delta_sum = float(np.triu(counts, 1).sum() / denom)
    m = (num_classes - 1) / num_classes
    radicand = 1.0 - (2.0 * num_classes / (num_classes - 1)) * delta_sum
    radicand = min(1.0, max(0.0, radicand))
    lower = m * (1.0 - math.sqrt(radicand))
    upper = min(2.0 * delta_sum, m)
    upper = max(upper, lower)
    return lower, upper


def cluster_ber(
    dataset: Dataset,
    clustering: Clustering,
    points: np.ndarray | None = None,
    delta_estimator: str = "halved",
    feature_space: str = "raw",
) -> ClusterBerEstimate:
    """Per-cluster Bayes-error bounds from per-cluster spanning trees.

    ``points`` overrides the coordinates used for tree construction (for
    example the standardized, PCA-reduced space the clustering was built in);
    labels always come from the dataset. Clusters with fewer than two points
    get bounds (0, 0) and a recorded warning; single-class clusters get
    bounds (0, 0) since no cross edges are possible.
    """
    _delta_denominator(2, delta_estimator)  # validate the flag early
    pts = dataset.features if points is None else np.asarray(points, dtype=np.float64)
    if pts.shape[0] != dataset.num_samples:
        raise DomainError("points row count must match the dataset")
    if clustering.num_samples != dataset.num_samples:
        raise DomainError("clustering does not match the dataset size")
    k = dataset.num_classes
    c_total = clustering.num_clusters
    lower = np.zeros(c_total)
    upper = np.zeros(c_total)
    sizes = np.zeros(c_total, dtype=np.int64)
    class_counts = np.zeros((c_total, k), dtype=np.int64)
    cross = np.zeros((c_total, k, k), dtype=np.int64)
    warnings: list[str] = []
    limit = (k - 1) / k
    for c in range(c_total):
        member = clustering.assignments == c
        labs = dataset.labels[member]
        sizes[c] = labs.size
        class_counts[c] = np.bincount(labs, minlength=k)
        if labs.size < 2:
            warnings.append(f"cluster {c}: fewer than 2 points, bounds set to (0, 0)")
            continue
        tree = build_mst(pts[member])
        cross[c] = cross_edge_counts(tree, labs, num_classes=k)
        present = np.flatnonzero(class_counts[c] > 0)
        if present.size < 2:
            continue  # single class: no cross edges possible, bounds stay (0, 0)
        if k == 2:
            i, j = 0, 1
            n_i, n_j = int(class_counts[c, i]), int(class_counts[c, j])
            est = hp_divergence_binary(int(cross[c, i, j]), n_i, n_j)
            lo, up = ber_bounds_binary(
                est.divergence, n_i / labs.size, n_j / labs.size
            )
        else:
            lo, up = ber_bounds_multiclass(
                cross[c], labs.size, k, delta_estimator=delta_estimator
            )
        lower[c] = min(max(lo, 0.0), limit)
        upper[c] = min(max(up, lower[c]), limit)
    return ClusterBerEstimate(
        num_clusters=c_total,
        num_classes=k,
        lower=lower,
        upper=upper,
        sizes=sizes,
        class_counts=class_counts,
        cross_edges=cross,
        delta_estimator=delta_estimator,
        feature_space=feature_space,
        warnings=tuple(warnings),
    )

"""Dimensionality reduction and partitioning of the training set.

The pipeline standardizes features, optionally projects them with PCA, and
partitions the result with either k-means or a diagonal-covariance Gaussian
mixture fitted by EM. Partitions are returned as :class:`~slsmooth.data.Clustering`
values; the preprocessing applied is recorded so later stages can rebuild the
same feature space deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Clustering, Dataset, DomainError, NumericalError, _readonly
from .data import clustering_from_assignments

__all__ = [
    "standardize",
    "PcaModel",
    "fit_pca",
    "pca_transform",
    "pca_inverse_transform",
    "KmeansResult",
    "kmeans_fit",
    "kmeans",
    "GmmModel",
    "fit_gmm",
    "gmm_responsibilities",
    "gmm_assign",
    "preprocess_features",
    "cluster_weights",
]

GMM_VARIANCE_FLOOR = 1e-6
GMM_WEIGHT_COLLAPSE = 1e-12


def _as_points(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return np.asarray(data.features, dtype=np.float64)
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim != 2:
        raise DomainError(f"expected an N x d matrix, got shape {pts.shape}")
    return pts


def standardize(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each dimension and scale it to unit variance.

    Zero-variance dimensions are centered but not scaled. Returns
    ``(standardized, mean, scale)`` so the same transform can be replayed.
    """
    pts = _as_points(data=points)
    mean = pts.mean(axis=0)
    std = pts.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return (pts - mean) / scale, mean, scale


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    """Linear projection onto the leading eigenvectors of the sample covariance."""

    mean: np.ndarray
    components: np.ndarray  # d x r, orthonormal columns
    explained_variance: np.ndarray  # length r, nonincreasing

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(np.asarray(self.mean, float)))
        object.__setattr__(
            self, "components", _readonly(np.asarray(self.components, float))
        )
        object.__setattr__(
            self,
            "explained_variance",
            _readonly(np.asarray(self.explained_variance, float)),
        )


def fit_pca(data, r: int) -> PcaModel:
    """Fit a rank-``r`` PCA by eigendecomposition of the sample covariance.

    The sign of each component is fixed by requiring its largest-magnitude
    entry to be positive, making the result deterministic.
    """
    pts = _as_points(data)
    n, d = pts.shape
    if not 1 <= r <= min(n, d):
        raise DomainError(f"r must lie in [1, min(N, d)] = [1, {min(n, d)}], got {r}")
    variances = pts.var(axis=0)
    if (variances == 0).all():
        constant = np.flatnonzero(variances == 0).tolist()
        raise DomainError(
            f"all features are constant (zero variance): columns {constant}"
        )
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:r]
    components = eigvecs[:, order]
    eigvals = np.maximum(eigvals[order], 0.0)
    # sign convention: largest-magnitude entry of each column is positive
    flip = components[np.argmax(np.abs(components), axis=0), np.arange(r)] < 0
    components = components * np.where(flip, -1.0, 1.0)
    return PcaModel(mean=mean, components=components, explained_variance=eigvals)


def pca_transform(model: PcaModel, points) -> np.ndarray:
    return (_as_points(points) - model.mean) @ model.components


def pca_inverse_transform(model: PcaModel, projected) -> np.ndarray:
    return np.asarray(projected, float) @ model.components.T + model.mean


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KmeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    wcss_path: np.ndarray  # within-cluster sum of squares per iteration
    iterations: int


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (N, C) squared Euclidean distances
    return (
        (points**2).sum(axis=1, keepdims=True)
        - 2.0 * points @ centroids.T
        + (centroids**2).sum(axis=1)
    )


def _kmeans_pp_init(points: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((c, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, c):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with a centroid; pick any
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[k] = points[idx]
        closest = np.minimum(closest, ((points - centroids[k]) ** 2).sum(axis=1))
    return centroids


def _repair_empty_clusters(assignments, closest, counts) -> None:
    # Reseed each empty cluster at the point farthest from its current
    # centroid, drawing only from clusters that can spare a point.
    empties = np.flatnonzero(counts == 0)
    while empties.size:
        empty = int(empties[0])
        eligible = counts[assignments] > 1
        donor = int(np.argmax(np.where(eligible, closest, -np.inf)))
        counts[assignments[donor]] -= 1
        assignments[donor] = empty
        counts[empty] += 1
        closest[donor] = 0.0
        empties = np.flatnonzero(counts == 0)


def kmeans_fit(
    points,
    num_clusters: int,
    seed: int = 0,
    max_iters: int = 300,
    tol: float = 1e-8,
) -> KmeansResult:
    """Lloyd's algorithm with k-means++ initialization.

    Empty clusters are repaired by reseeding the empty centroid at the point
    currently farthest from its assigned centroid, so the requested cluster
    count is always preserved.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if num_clusters > n:
        raise DomainError(f"num_clusters={num_clusters} exceeds sample count {n}")
    if num_clusters < 1:
        raise DomainError("num_clusters must be >= 1")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(pts, num_clusters, rng)
    wcss_path = []
    assignments = np.zeros(n, dtype=np.int64)
    for iteration in range(max_iters):
        d2 = _sq_dists(pts, centroids)
        assignments = d2.argmin(axis=1)
        closest = d2[np.arange(n), assignments]
        counts = np.bincount(assignments, minlength=num_clusters)
        _repair_empty_clusters(assignments, closest, counts)
        wcss_path.append(float(closest.sum()))
        new_centroids = np.zeros_like(centroids)
        np.add.at(new_centroids, assignments, pts)
        new_centroids /= counts[:, None]
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    d2 = _sq_dists(pts, centroids)
    assignments = d2.argmin(axis=1)
    counts = np.bincount(assignments, minlength=num_clusters)
    closest = d2[np.arange(n), assignments]
    _repair_empty_clusters(assignments, closest, counts)
    wcss_path.append(float(closest.sum()))
    return KmeansResult(
        centroids=centroids,
        assignments=assignments,
        wcss_path=np.asarray(wcss_path),
        iterations=len(wcss_path) - 1,
    )


def kmeans(
    points,
    num_clusters: int,
    seed: int = 0,
    max_iters: int = 300,
    tol: float = 1e-8,
) -> Clustering:
    """Partition ``points`` into ``num_clusters`` clusters with Lloyd's algorithm."""
    result = kmeans_fit(points, num_clusters, seed=seed, max_iters=max_iters, tol=tol)
    return clustering_from_assignments(
        result.assignments,
        num_clusters=num_clusters,
        algorithm="kmeans",
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Diagonal-covariance Gaussian mixture
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GmmModel:
    """Diagonal-covariance Gaussian mixture fitted by EM."""

    means: np.ndarray  # (C, r)
    variances: np.ndarray  # (C, r), floored above zero
    weights: np.ndarray  # (C,), sums to 1
    seed: int | None = None
    log_likelihood_path: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "means", _readonly(np.asarray(self.means, float)))
        object.__setattr__(
            self, "variances", _readonly(np.asarray(self.variances, float))
        )
        object.__setattr__(self, "weights", _readonly(np.asarray(self.weights, float)))
        if (self.variances <= 0).any():
            raise DomainError("all component variances must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise DomainError("mixture weights must sum to 1")

    @property
    def num_components(self) -> int:
        return self.means.shape[0]


def _gmm_log_prob(model_means, model_vars, model_weights, pts) -> np.ndarray:
    # (N, C) joint log density log w_c + log N(x; mu_c, diag var_c)
    diff = pts[:, None, :] - model_means[None, :, :]
    quad = (diff**2 / model_vars[None, :, :]).sum(axis=2)
    logdet = np.log(model_vars).sum(axis=1)
    d = pts.shape[1]
    log_pdf = -0.5 * (quad + logdet + d * np.log(2.0 * np.pi))
    return log_pdf + np.log(model_weights)


def fit_gmm(
    points,
    num_components: int,
    seed: int = 0,
    max_iters: int = 500,
    tol: float = 1e-7,
    var_floor_frac: float = 0.01,
) -> GmmModel:
    """EM for a diagonal-covariance mixture, initialized from a k-means run.

    ``tol`` is the per-sample log-likelihood improvement below which EM stops,
    so convergence behaves the same at any dataset size. Per-dimension
    variances are floored at ``var_floor_frac`` times the data variance of
    that dimension (never below ``GMM_VARIANCE_FLOOR``): the absolute floor
    keeps duplicated points from producing singular components, while the
    data-scale floor keeps EM from carving likelihood spikes out of smooth
    noise dimensions. The per-iteration log-likelihood is recorded on the
    returned model.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if num_components > n:
        raise DomainError(f"num_components={num_components} exceeds sample count {n}")
    if var_floor_frac < 0:
        raise DomainError("var_floor_frac must be >= 0")
    floor = np.maximum(var_floor_frac * pts.var(axis=0), GMM_VARIANCE_FLOOR)
    init = kmeans_fit(pts, num_components, seed=seed)
    means = init.centroids.copy()
    variances = np.empty((num_components, d))
    weights = np.empty(num_components)
    for c in range(num_components):
        member = pts[init.assignments == c]
        variances[c] = member.var(axis=0) if len(member) > 1 else pts.var(axis=0)
        weights[c] = len(member) / n
    variances = np.maximum(variances, floor)
    weights = np.maximum(weights, GMM_WEIGHT_COLLAPSE)
    weights /= weights.sum()

    ll_path = []
    prev_ll = -np.inf
    for _ in range(max_iters):
        joint = _gmm_log_prob(means, variances, weights, pts)
        norm = logsumexp(joint, axis=1)
        ll = float(norm.sum())
        ll_path.append(ll)
        resp = np.exp(joint - norm[:, None])
        mass = resp.sum(axis=0)
        collapsed = np.flatnonzero(mass / n < GMM_WEIGHT_COLLAPSE)
        if collapsed.size:
            raise NumericalError(
                f"gmm component {int(collapsed[0])} collapsed (weight < {GMM_WEIGHT_COLLAPSE})"
            )
        means = (resp.T @ pts) / mass[:, None]
        sq = resp.T @ (pts**2) / mass[:, None]
        variances = np.maximum(sq - means**2, floor)
        weights = mass / n
        if (ll - prev_ll) / n < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll
    return GmmModel(
        means=means,
        variances=variances,
        weights=weights,
        seed=seed,
        log_likelihood_path=np.asarray(ll_path),
    )


def gmm_responsibilities(model: GmmModel, points) -> np.ndarray:
    """Posterior component membership probabilities, rows summing to 1."""
    pts = _as_points(points)
    joint = _gmm_log_prob(model.means, model.variances, model.weights, pts)
    return np.exp(joint - logsumexp(joint, axis=1)[:, None])


def gmm_assign(model: GmmModel, points) -> Clustering:
    """Assign each point to its maximum-responsibility component.

    If a component receives no points, the point with the highest
    responsibility for it is moved there so every cluster stays non-empty.
    """
    pts = _as_points(points)
    resp = gmm_responsibilities(model, pts)
    assignments = resp.argmax(axis=1).astype(np.int64)
    counts = np.bincount(assignments, minlength=model.num_components)
    for empty in np.flatnonzero(counts == 0):
        candidates = np.argsort(resp[:, empty])[::-1]
        for idx in candidates:
            if counts[assignments[idx]] > 1:
                counts[assignments[idx]] -= 1
                assignments[idx] = empty
                counts[empty] += 1
                break
    return clustering_from_assignments(
        assignments,
        num_clusters=model.num_components,
        algorithm="gmm",
        seed=model.seed,
    )


def cluster_weights(clustering: Clustering) -> np.ndarray:
    """Cluster weight vector w_c = n_c / N."""
    return np.asarray(clustering.weights, dtype=np.float64)


def preprocess_features(
    features: np.ndarray, do_standardize: bool = True, pca_dim: int | None = None
) -> tuple[np.ndarray, dict]:
    """Apply the pipeline's feature-space preparation and describe it.

    The returned description is stored in clustering artifacts so downstream
    stages (which only see files) can rebuild the identical space: both steps
    are deterministic functions of the data.
    """
    pts = _as_points(features)
    if do_standardize:
        pts, _, _ = standardize(pts)
    if pca_dim is not None:
        model = fit_pca(pts, pca_dim)
        pts = pca_transform(model, pts)
    return pts, {"standardize": bool(do_standardize), "pca_dim": pca_dim}

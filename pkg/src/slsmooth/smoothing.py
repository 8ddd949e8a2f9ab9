"""Cluster-level smoothing strengths and soft-label construction.

Given per-cluster Bayes-error levels R_c and cluster weights w_c, the
smoothing strengths minimize the weighted variance of the strengths plus a
bias penalty, subject to a fixed weighted average alpha. The minimizer has a
closed form:

    a_i = alpha + (beta / 2) * (sum_c |R_c K/(K-1) - 1| w_c - |R_i K/(K-1) - 1|)

Strengths must stay below (K-1)/K or smoothing would move the optimal
decision boundary, so solutions are clamped into [0, (K-1)/K - margin] and
the clamping is recorded instead of being renormalized away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import (
    Clustering,
    ClusterBerEstimate,
    Dataset,
    DomainError,
    SmoothingPlan,
    SoftLabelMatrix,
)

__all__ = [
    "SmoothingConfig",
    "STRENGTH_CLAMP_MARGIN",
    "solve_strengths",
    "uniform_plan",
    "none_plan",
    "reverse_plan",
    "soft_labels",
    "smoothed_posterior",
    "pointwise_bias",
]

STRENGTH_CLAMP_MARGIN = 1e-6

CONFIG_MODES = ("uniform", "structural", "reversed-structural")


@dataclass(frozen=True)
class SmoothingConfig:
    """Average strength, bias-reduction weight, and smoothing mode."""

    alpha: float
    beta: float
    num_classes: int
    mode: str = "structural"

    def __post_init__(self):
        if self.num_classes < 2:
            raise DomainError("num_classes must be >= 2")
        limit = (self.num_classes - 1) / self.num_classes
        if not (0.0 < self.alpha < limit):
            raise DomainError(
                f"alpha must lie in (0, {limit}) for K={self.num_classes}, got {self.alpha}"
            )
        if not (np.isfinite(self.beta) and self.beta >= 0.0):
            raise DomainError(f"beta must be finite and >= 0, got {self.beta}")
        if self.mode not in CONFIG_MODES:
            raise DomainError(f"mode must be one of {CONFIG_MODES}, got {self.mode!r}")


def _bias_deviation(r_values: np.ndarray, num_classes: int) -> np.ndarray:
    # |R * K/(K-1) - 1|: the per-unit-strength Bayes-error bias of a region
    return np.abs(r_values * num_classes / (num_classes - 1) - 1.0)


def solve_strengths(
    ber, weights, config: SmoothingConfig
) -> SmoothingPlan:
    """Closed-form per-cluster strengths from Bayes-error lower bounds.

    ``ber`` may be a :class:`ClusterBerEstimate` (its lower bounds are used)
    or a plain array of per-cluster error levels. Before clamping, the
    strengths satisfy sum_c a_c w_c = alpha exactly; with beta = 0 every
    strength equals alpha. Clamped cluster ids and the weighted means before
    and after clamping are recorded on the plan.
    """
    if isinstance(ber, ClusterBerEstimate):
        if ber.num_classes != config.num_classes:
            raise DomainError(
                f"estimate has K={ber.num_classes} but config has K={config.num_classes}"
            )
        r_values = np.asarray(ber.lower, dtype=np.float64)
    else:
        r_values = np.asarray(ber, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != r_values.shape or w.ndim != 1:
        raise DomainError("weights and error levels must be equal-length vectors")
    if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError("weights must form a probability simplex")
    k = config.num_classes
    limit = (k - 1) / k
    if (r_values < -1e-12).any() or (r_values > limit + 1e-12).any():
        raise DomainError(f"error levels must lie in [0, {limit}]")

    deviation = _bias_deviation(r_values, k)
    raw = config.alpha + 0.5 * config.beta * (deviation @ w - deviation)
    clamped = np.clip(raw, 0.0, limit - STRENGTH_CLAMP_MARGIN)
    changed = np.flatnonzero(clamped != raw)
    return SmoothingPlan(
        mode="structural",
        alpha=config.alpha,
        beta=config.beta,
        strengths=clamped,
        num_classes=k,
        clamped_clusters=tuple(int(i) for i in changed),
        weighted_mean_before=float(raw @ w),
        weighted_mean_after=float(clamped @ w),
    )


def uniform_plan(alpha: float, num_clusters: int, num_classes: int) -> SmoothingPlan:
    """One identical strength for every cluster (traditional smoothing)."""
    limit = (num_classes - 1) / num_classes
    if not (0.0 <= alpha < limit):
        raise DomainError(f"alpha must lie in [0, {limit}), got {alpha}")
    strengths = np.full(num_clusters, alpha)
    return SmoothingPlan(
        mode="uniform",
        alpha=alpha,
        beta=0.0,
        strengths=strengths,
        num_classes=num_classes,
        weighted_mean_before=alpha,
        weighted_mean_after=alpha,
    )


def none_plan(num_clusters: int, num_classes: int) -> SmoothingPlan:
    """The no-smoothing baseline: every strength zero, targets stay one-hot."""
    return SmoothingPlan(
        mode="none",
        alpha=0.0,
        beta=0.0,
        strengths=np.zeros(num_clusters),
        num_classes=num_classes,
        weighted_mean_before=0.0,
        weighted_mean_after=0.0,
    )


def reverse_plan(plan: SmoothingPlan, weights) -> SmoothingPlan:
    """Reassign strengths so rank-k largest goes to the rank-k smallest cluster.

    This is the ablation that deliberately smooths low-error regions hardest.
    The recorded weighted means are the plan's mean before reversal and the
    mean after; they coincide only for uniform weights, which is why the
    post-reversal mean is recorded rather than asserted.
    """
    if plan.mode not in ("structural", "uniform"):
        raise DomainError(f"cannot reverse a plan with mode {plan.mode!r}")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != plan.strengths.shape:
        raise DomainError("weights must have one entry per cluster")
    order = np.argsort(plan.strengths, kind="stable")
    reversed_strengths = np.empty_like(plan.strengths)
    reversed_strengths[order] = np.sort(plan.strengths)[::-1]
    return SmoothingPlan(
        mode="reversed-structural",
        alpha=plan.alpha,
        beta=plan.beta,
        strengths=reversed_strengths,
        num_classes=plan.num_classes,
        clamped_clusters=plan.clamped_clusters,
        weighted_mean_before=float(plan.strengths @ w),
        weighted_mean_after=float(reversed_strengths @ w),
    )


def soft_labels(
    dataset: Dataset, clustering: Clustering | None, plan: SmoothingPlan
) -> SoftLabelMatrix:
    """Materialize the row-stochastic training targets for a plan.

    Row n with true label t in cluster c gets 1 - a_c at position t and
    a_c / (K - 1) elsewhere. Plans whose strengths are constant (none,
    uniform) do not require a clustering.
    """
    k = dataset.num_classes
    if plan.num_classes != k:
        raise DomainError(f"plan has K={plan.num_classes} but dataset has K={k}")
    if clustering is None:
        if plan.mode in ("none", "uniform"):
            per_row = np.full(dataset.num_samples, plan.strengths[0])
        else:
            raise DomainError(f"mode {plan.mode!r} requires a clustering")
    else:
        if clustering.num_clusters != plan.num_clusters:
            raise DomainError(
                f"plan has {plan.num_clusters} clusters but clustering has "
                f"{clustering.num_clusters}"
            )
        if clustering.num_samples != dataset.num_samples:
            raise DomainError("clustering does not match the dataset size")
        per_row = plan.strengths[clustering.assignments]
    values = np.repeat((per_row / (k - 1))[:, None], k, axis=1)
    values[np.arange(dataset.num_samples), dataset.labels] = 1.0 - per_row
    return SoftLabelMatrix(values)


def smoothed_posterior(posterior, alpha_hat):
    """Posterior after smoothing at strength ``alpha_hat``.

    Smoothing keeps the label with probability 1 - a and flips it uniformly
    to another class otherwise, so the new posterior is a mixture:
    p'_k = (1 - a) p_k + a (1 - p_k) / (K - 1). For a < (K-1)/K this mixture
    preserves the argmax; larger strengths are rejected because they can move
    the optimal decision boundary.
    """
    p = np.asarray(posterior, dtype=np.float64)
    k = p.shape[-1]
    if k < 2:
        raise DomainError("posterior needs at least 2 classes")
    a = np.asarray(alpha_hat, dtype=np.float64)
    limit = (k - 1) / k
    if (a < 0).any() or (a >= limit).any():
        raise DomainError(f"alpha_hat must lie in [0, {limit}) for K={k}")
    if a.ndim == 1 and p.ndim == 2:
        a = a[:, None]
    return (1.0 - a) * p + a * (1.0 - p) / (k - 1)


def pointwise_bias(posterior, alpha_hat):
    """Absolute Bayes-error change that smoothing induces at a single point.

    With local error R = 1 - max_k p_k, smoothing at strength a shifts the
    point-wise error by a * |R K/(K-1) - 1|, which equals the drop in the
    maximum posterior probability.
    """
    p = np.asarray(posterior, dtype=np.float64)
    k = p.shape[-1]
    if k < 2:
        raise DomainError("posterior needs at least 2 classes")
    a = np.asarray(alpha_hat, dtype=np.float64)
    limit = (k - 1) / k
    if (a < 0).any() or (a >= limit).any():
        raise DomainError(f"alpha_hat must lie in [0, {limit}) for K={k}")
    local_error = 1.0 - p.max(axis=-1)
    return a * np.abs(local_error * k / (k - 1) - 1.0)

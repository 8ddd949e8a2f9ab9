"""Synthetic Gaussian-mixture data with exact posterior and error oracles.

Each class is a mixture of full-covariance Gaussians over a small block of
informative dimensions; optional noise dimensions are drawn from one shared
Gaussian per dimension for every class, so they are exactly uninformative and
cancel out of the posterior. Because the generating densities are known, the
Bayes posterior, the Bayes error of any region, and the error bias introduced
by label smoothing can all be computed to Monte Carlo accuracy and used as
ground truth for the estimators in the rest of the package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .data import Dataset, DomainError, _readonly

__all__ = [
    "GmmSpec",
    "default_spec",
    "load_spec_json",
    "save_spec_json",
    "spec_hash",
    "generate",
    "bayes_posterior",
    "OracleEstimate",
    "oracle_ber",
    "BiasEstimate",
    "simulate_bias",
]


@dataclass(frozen=True)
class GmmSpec:
    """Class-conditional Gaussian mixtures plus shared noise dimensions."""

    class_priors: np.ndarray  # (K,)
    component_means: tuple[np.ndarray, ...]  # per class: (m_k, r)
    component_covs: tuple[np.ndarray, ...]  # per class: (m_k, r, r)
    component_weights: tuple[np.ndarray, ...]  # per class: (m_k,)
    noise_means: np.ndarray  # (n_noise,)
    noise_stds: np.ndarray  # (n_noise,)

    def __post_init__(self):
        priors = np.asarray(self.class_priors, dtype=np.float64)
        if priors.ndim != 1 or priors.size < 2:
            raise DomainError("class_priors must list at least two classes")
        if (priors < 0).any() or abs(priors.sum() - 1.0) > 1e-9:
            raise DomainError("class_priors must form a probability simplex")
        k = priors.size
        if not (
            len(self.component_means)
            == len(self.component_covs)
            == len(self.component_weights)
            == k
        ):
            raise DomainError("component lists must have one entry per class")
        means = tuple(np.asarray(m, dtype=np.float64) for m in self.component_means)
        covs = tuple(np.asarray(c, dtype=np.float64) for c in self.component_covs)
        weights = tuple(
            np.asarray(w, dtype=np.float64) for w in self.component_weights
        )
        r = means[0].shape[1]
        for cls in range(k):
            if means[cls].ndim != 2 or means[cls].shape[1] != r:
                raise DomainError(f"classes[{cls}].means must be (m, {r})")
            m = means[cls].shape[0]
            if covs[cls].shape != (m, r, r):
                raise DomainError(f"classes[{cls}].covs must be ({m}, {r}, {r})")
            if weights[cls].shape != (m,):
                raise DomainError(f"classes[{cls}].weights must have length {m}")
            if abs(weights[cls].sum() - 1.0) > 1e-9 or (weights[cls] < 0).any():
                raise DomainError(f"classes[{cls}].weights must form a simplex")
            for comp in range(m):
                cov = covs[cls][comp]
                if np.abs(cov - cov.T).max() > 1e-12:
                    raise DomainError(f"classes[{cls}].covs[{comp}] is not symmetric")
                try:
                    np.linalg.cholesky(cov)
                except np.linalg.LinAlgError as exc:
                    raise DomainError(
                        f"classes[{cls}].covs[{comp}] is not positive definite"
                    ) from exc
        noise_means = np.asarray(self.noise_means, dtype=np.float64)
        noise_stds = np.asarray(self.noise_stds, dtype=np.float64)
        if noise_means.shape != noise_stds.shape or noise_means.ndim != 1:
            raise DomainError("noise_means and noise_stds must be equal-length vectors")
        if (noise_stds <= 0).any():
            raise DomainError("noise_stds must be positive")
        object.__setattr__(self, "class_priors", _readonly(priors))
        object.__setattr__(self, "component_means", tuple(_readonly(m) for m in means))
        object.__setattr__(self, "component_covs", tuple(_readonly(c) for c in covs))
        object.__setattr__(
            self, "component_weights", tuple(_readonly(w) for w in weights)
        )
        object.__setattr__(self, "noise_means", _readonly(noise_means))
        object.__setattr__(self, "noise_stds", _readonly(noise_stds))

    @property
    def num_classes(self) -> int:
        return self.class_priors.size

    @property
    def num_informative(self) -> int:
        return self.component_means[0].shape[1]

    @property
    def num_noise(self) -> int:
        return self.noise_means.size

    @property
    def num_features(self) -> int:
        return self.num_informative + self.num_noise


def default_spec(num_noise: int = 126) -> GmmSpec:
    """The shipped two-class benchmark: an overlap ramp on a diagonal line.

    Six unit-covariance components per class sit on the x = y diagonal of the
    two informative dimensions. The two classes' components are paired site
    by site with separations doubling from 0.15 to 4.8, so local Bayes error
    ramps from near-maximal overlap down to near-perfect separability, which
    is the structure cluster-level smoothing is meant to exploit. Noise
    dimensions are standard normal and identical for both classes.
    """
    separations = np.array([0.15, 0.3, 0.6, 1.2, 2.4, 4.8])
    gap = 6.0
    starts = np.concatenate([[0.0], np.cumsum(separations[:-1] + gap)])
    span = starts[-1] + separations[-1]
    pos0 = starts - span / 2.0
    pos1 = pos0 + separations
    diag = np.array([1.0, 1.0]) / np.sqrt(2.0)
    means0 = pos0[:, None] * diag
    means1 = pos1[:, None] * diag
    eye = np.broadcast_to(np.eye(2), (6, 2, 2)).copy()
    sixth = np.full(6, 1.0 / 6.0)
    return GmmSpec(
        class_priors=np.array([0.5, 0.5]),
        component_means=(means0, means1),
        component_covs=(eye, eye.copy()),
        component_weights=(sixth, sixth.copy()),
        noise_means=np.zeros(num_noise),
        noise_stds=np.ones(num_noise),
    )


def _spec_to_dict(spec: GmmSpec) -> dict:
    return {
        "class_priors": spec.class_priors.tolist(),
        "classes": [
            {
                "components": [
                    {
                        "mean": spec.component_means[cls][i].tolist(),
                        "cov": spec.component_covs[cls][i].tolist(),
                        "weight": float(spec.component_weights[cls][i]),
                    }
                    for i in range(spec.component_means[cls].shape[0])
                ]
            }
            for cls in range(spec.num_classes)
        ],
        "noise": {
            "means": spec.noise_means.tolist(),
            "stds": spec.noise_stds.tolist(),
        },
    }


def save_spec_json(spec: GmmSpec, path: Path | str) -> None:
    Path(path).write_text(
        json.dumps(_spec_to_dict(spec), sort_keys=True, indent=2) + "\n"
    )


def load_spec_json(path: Path | str) -> GmmSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"spec file {path} is not valid JSON: {exc}") from exc
    try:
        classes = raw["classes"]
        means = tuple(
            np.array([c["mean"] for c in cls["components"]]) for cls in classes
        )
        covs = tuple(
            np.array([c["cov"] for c in cls["components"]]) for cls in classes
        )
        weights = tuple(
            np.array([c["weight"] for c in cls["components"]]) for cls in classes
        )
        noise = raw.get("noise", {"means": [], "stds": []})
        return GmmSpec(
            class_priors=np.asarray(raw["class_priors"], dtype=np.float64),
            component_means=means,
            component_covs=covs,
            component_weights=weights,
            noise_means=np.asarray(noise["means"], dtype=np.float64),
            noise_stds=np.asarray(noise["stds"], dtype=np.float64),
        )
    except KeyError as exc:
        raise DomainError(f"spec file {path} is missing field {exc}") from exc


def spec_hash(spec: GmmSpec) -> str:
    canonical = json.dumps(_spec_to_dict(spec), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _sample_class_points(
    spec: GmmSpec, cls: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    comp_counts = rng.multinomial(n, spec.component_weights[cls])
    blocks = []
    for comp, count in enumerate(comp_counts):
        if count == 0:
            continue
        chol = np.linalg.cholesky(spec.component_covs[cls][comp])
        z = rng.standard_normal((count, spec.num_informative))
        blocks.append(z @ chol.T + spec.component_means[cls][comp])
    pts = np.concatenate(blocks) if blocks else np.empty((0, spec.num_informative))
    return pts[rng.permutation(n)]


def _sample_joint(
    spec: GmmSpec, n: int, rng: np.random.Generator, with_noise: bool
) -> tuple[np.ndarray, np.ndarray]:
    class_counts = rng.multinomial(n, spec.class_priors)
    features = np.empty((n, spec.num_features if with_noise else spec.num_informative))
    labels = np.empty(n, dtype=np.int64)
    row = 0
    for cls, count in enumerate(class_counts):
        pts = _sample_class_points(spec, cls, int(count), rng)
        features[row : row + count, : spec.num_informative] = pts
        labels[row : row + count] = cls
        row += count
    if with_noise and spec.num_noise:
        features[:, spec.num_informative :] = rng.normal(
            spec.noise_means, spec.noise_stds, size=(n, spec.num_noise)
        )
    perm = rng.permutation(n)
    return features[perm], labels[perm]


def generate(spec: GmmSpec, n_per_split: int, seed: int) -> tuple[Dataset, Dataset]:
    """Draw independent train and test splits of ``n_per_split`` samples each.

    The two splits use seeds spawned from the master seed, so they are
    independent yet fully reproducible.
    """
    if n_per_split < 1:
        raise DomainError("n_per_split must be >= 1")
    train_ss, test_ss = np.random.SeedSequence(seed).spawn(2)
    names = tuple(f"x{i}" for i in range(spec.num_features))
    splits = []
    for ss in (train_ss, test_ss):
        rng = np.random.default_rng(ss)
        features, labels = _sample_joint(spec, n_per_split, rng, with_noise=True)
        splits.append(
            Dataset(
                features=features,
                labels=labels,
                num_classes=spec.num_classes,
                feature_names=names,
            )
        )
    return splits[0], splits[1]


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def _class_log_density(spec: GmmSpec, x_inf: np.ndarray) -> np.ndarray:
    """Log class-conditional densities over the informative block, (N, K)."""
    n = x_inf.shape[0]
    r = spec.num_informative
    const = -0.5 * r * np.log(2.0 * np.pi)
    out = np.empty((n, spec.num_classes))
    for cls in range(spec.num_classes):
        m = spec.component_means[cls].shape[0]
        comp_log = np.empty((n, m))
        for comp in range(m):
            cov = spec.component_covs[cls][comp]
            chol = np.linalg.cholesky(cov)
            diff = (x_inf - spec.component_means[cls][comp]).T
            sol = np.linalg.solve(chol, diff)
            quad = (sol**2).sum(axis=0)
            logdet = np.log(np.diag(chol)).sum()
            comp_log[:, comp] = (
                const - logdet - 0.5 * quad + np.log(spec.component_weights[cls][comp])
            )
        out[:, cls] = logsumexp(comp_log, axis=1)
    return out


def bayes_posterior(spec: GmmSpec, x) -> np.ndarray:
    """Exact class posterior at ``x`` (one point or a batch of rows).

    Only the informative block of coordinates enters: the shared noise
    densities cancel between numerator and denominator, so extra columns are
    ignored by construction rather than by approximation. All density math is
    done in log space.
    """
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.shape[1] < spec.num_informative:
        raise DomainError(
            f"points need at least {spec.num_informative} coordinates"
        )
    if not np.isfinite(pts[:, : spec.num_informative]).all():
        raise DomainError("points must be finite")
    log_joint = _class_log_density(spec, pts[:, : spec.num_informative]) + np.log(
        spec.class_priors
    )
    posterior = np.exp(log_joint - logsumexp(log_joint, axis=1)[:, None])
    return posterior[0] if single else posterior


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    stderr: float
    n: int


def oracle_ber(
    spec: GmmSpec,
    region: np.ndarray | None = None,
    n_mc: int = 100_000,
    seed: int = 0,
) -> OracleEstimate:
    """Ground-truth Bayes error, globally or conditioned on a point set.

    With ``region`` given (for example the points of one cluster), averages
    the point-wise error 1 - max_k posterior over those points; otherwise
    draws ``n_mc`` fresh samples from the marginal. The standard error of the
    average is reported alongside.
    """
    if region is not None:
        pts = np.asarray(region, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
    else:
        if n_mc < 1:
            raise DomainError("n_mc must be >= 1")
        rng = np.random.default_rng(seed)
        pts, _ = _sample_joint(spec, n_mc, rng, with_noise=False)
    pointwise = 1.0 - bayes_posterior(spec, pts).max(axis=1)
    n = pointwise.size
    stderr = float(pointwise.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return OracleEstimate(value=float(pointwise.mean()), stderr=stderr, n=n)


@dataclass(frozen=True)
class BiasEstimate:
    empirical: float
    empirical_stderr: float
    analytic: float
    analytic_stderr: float


def simulate_bias(
    spec: GmmSpec,
    alpha_hat,
    n_mc: int = 100_000,
    seed: int = 0,
) -> BiasEstimate:
    """Estimate the smoothing-induced Bayes-error bias two independent ways.

    Empirical route: draw labeled samples, flip each label to a uniformly
    chosen other class with probability a(x), and measure how much the
    Bayes-optimal classifier's error rate rises on the flipped labels.
    Analytic route: average the closed-form point-wise bias over the same
    draws. ``alpha_hat`` is a constant or a callable mapping an (n, r) array
    of informative coordinates to per-point strengths. The two estimates
    agree within Monte Carlo error.
    """
    from .smoothing import pointwise_bias

    if n_mc < 1:
        raise DomainError("n_mc must be >= 1")
    rng = np.random.default_rng(seed)
    pts, labels = _sample_joint(spec, n_mc, rng, with_noise=False)
    k = spec.num_classes
    limit = (k - 1) / k
    if callable(alpha_hat):
        strengths = np.asarray(alpha_hat(pts), dtype=np.float64)
        if strengths.shape != (n_mc,):
            raise DomainError("alpha_hat callable must return one strength per point")
    else:
        strengths = np.full(n_mc, float(alpha_hat))
    if (strengths < 0).any() or (strengths >= limit).any():
        raise DomainError(f"all strengths must lie in [0, {limit})")

    posterior = bayes_posterior(spec, pts)
    prediction = posterior.argmax(axis=1)
    flip = rng.random(n_mc) < strengths
    offsets = rng.integers(1, k, size=n_mc)
    flipped_labels = np.where(flip, (labels + offsets) % k, labels)
    # paired per-sample error difference between flipped and original labels
    diff = (flipped_labels != prediction).astype(np.float64) - (
        labels != prediction
    ).astype(np.float64)
    empirical = float(abs(diff.mean()))
    empirical_stderr = float(diff.std(ddof=1) / np.sqrt(n_mc))
    analytic_points = pointwise_bias(posterior, strengths)
    analytic = float(analytic_points.mean())
    analytic_stderr = float(analytic_points.std(ddof=1) / np.sqrt(n_mc))
    return BiasEstimate(
        empirical=empirical,
        empirical_stderr=empirical_stderr,
        analytic=analytic,
        analytic_stderr=analytic_stderr,
    )

"""Shared data model for the smoothing pipeline.

Every pipeline stage exchanges one of the types defined here. All types are
immutable after construction (array fields are marked read-only) and carry
explicit serialization to CSV/JSON so that stage artifacts are plain files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

__all__ = [
    "DomainError",
    "NumericalError",
    "Dataset",
    "Clustering",
    "ClusterBerEstimate",
    "SmoothingPlan",
    "SoftLabelMatrix",
    "validate_dataset",
    "class_priors",
    "epsilon_to_alpha",
    "alpha_to_epsilon",
    "clustering_from_assignments",
    "save_dataset_csv",
    "load_dataset_csv",
    "dataset_meta_path",
]

PLAN_MODES = ("none", "uniform", "structural", "reversed-structural")


class DomainError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (divergence, collapse, non-finite result)."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _json_dump(obj, path: Path | str) -> None:
    # sort_keys + fixed separators keep artifact bytes reproducible run to run
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _json_load(path: Path | str):
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """A labeled feature matrix with a fixed class count.

    ``features`` is N x d float64, ``labels`` is length-N integer class
    indices expected to lie in [0, num_classes). Content-level invariants are
    checked by :func:`validate_dataset`, not by the constructor, so that
    malformed data can be loaded and diagnosed.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: tuple[str, ...] | None = None
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise DomainError(f"features must be 2-D, got shape {feats.shape}")
        if labs.ndim != 1:
            raise DomainError(f"labels must be 1-D, got shape {labs.shape}")
        if feats.shape[0] != labs.shape[0]:
            raise DomainError(
                f"features has {feats.shape[0]} rows but labels has {labs.shape[0]}"
            )
        if self.feature_names is not None and len(self.feature_names) != feats.shape[1]:
            raise DomainError("feature_names length does not match feature count")
        object.__setattr__(self, "features", _readonly(feats))
        object.__setattr__(self, "labels", _readonly(labs))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.label_names is not None:
            object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def validate_dataset(ds: Dataset) -> list[str]:
    """Return all invariant violations of ``ds``, empty when well formed.

    Violations are values, not exceptions; each message names the offending
    field and row.
    """
    violations: list[str] = []
    if ds.num_samples < 1:
        violations.append("features: dataset has no samples (N >= 1 required)")
    if ds.num_features < 1:
        violations.append("features: dataset has no columns (d >= 1 required)")
    if ds.num_classes < 2:
        violations.append(f"num_classes: {ds.num_classes} (K >= 2 required)")
    bad = np.flatnonzero(~np.isfinite(ds.features).all(axis=1))
    for row in bad:
        cols = np.flatnonzero(~np.isfinite(ds.features[row]))
        violations.append(
            f"features[{row}]: non-finite value in column(s) {cols.tolist()}"
        )
    out = np.flatnonzero((ds.labels < 0) | (ds.labels >= ds.num_classes))
    for row in out:
        violations.append(
            f"labels[{row}]: value {ds.labels[row]} outside [0, {ds.num_classes})"
        )
    return violations


def class_priors(ds: Dataset) -> np.ndarray:
    """Empirical class prior vector, ``prior_k = count(label==k) / N``."""
    if ds.num_samples == 0:
        raise DomainError("cannot compute class priors of an empty dataset")
    counts = np.bincount(ds.labels, minlength=ds.num_classes).astype(np.float64)
    return counts / ds.num_samples


def epsilon_to_alpha(epsilon: float, num_classes: int) -> float:
    """Convert a label-smoothing strength to its label-flipping probability.

    Mixing the one-hot target with the uniform distribution at rate
    ``epsilon`` produces the same expected label distribution as flipping the
    label to a uniformly chosen other class with probability
    ``alpha = epsilon * (K - 1) / K``.
    """
    if num_classes < 2:
        raise DomainError(f"num_classes must be >= 2, got {num_classes}")
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return epsilon * (num_classes - 1) / num_classes


def alpha_to_epsilon(alpha: float, num_classes: int) -> float:
    """Inverse of :func:`epsilon_to_alpha`."""
    if num_classes < 2:
        raise DomainError(f"num_classes must be >= 2, got {num_classes}")
    limit = (num_classes - 1) / num_classes
    if not (0.0 < alpha < limit):
        raise DomainError(f"alpha must lie in (0, {limit}), got {alpha}")
    return alpha * num_classes / (num_classes - 1)


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Clustering:
    """A partition of N samples into C non-empty clusters with weights n_c/N."""

    assignments: np.ndarray
    num_clusters: int
    weights: np.ndarray
    algorithm: str = ""
    seed: int | None = None
    preprocessing: dict = field(default_factory=dict)

    def __post_init__(self):
        assign = np.asarray(self.assignments, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if assign.ndim != 1 or assign.size == 0:
            raise DomainError("assignments must be a non-empty 1-D vector")
        if assign.min() < 0 or assign.max() >= self.num_clusters:
            raise DomainError(
                f"cluster ids must lie in [0, {self.num_clusters})"
            )
        counts = np.bincount(assign, minlength=self.num_clusters)
        if (counts == 0).any():
            empty = np.flatnonzero(counts == 0).tolist()
            raise DomainError(f"clusters {empty} are empty; every id must occur")
        if weights.shape != (self.num_clusters,):
            raise DomainError("weights length must equal num_clusters")
        expected = counts / assign.size
        if np.abs(weights - expected).max() > 1e-12:
            raise DomainError("weights do not equal cluster counts / N")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must sum to 1")
        object.__setattr__(self, "assignments", _readonly(assign))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def num_samples(self) -> int:
        return self.assignments.shape[0]

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.num_clusters)


def clustering_from_assignments(
    assignments,
    num_clusters: int | None = None,
    algorithm: str = "",
    seed: int | None = None,
    preprocessing: dict | None = None,
) -> Clustering:
    """Build a :class:`Clustering`, deriving weights from assignment counts."""
    assign = np.asarray(assignments, dtype=np.int64)
    if num_clusters is None:
        num_clusters = int(assign.max()) + 1 if assign.size else 0
    counts = np.bincount(assign, minlength=num_clusters)
    weights = counts / assign.size
    return Clustering(
        assignments=assign,
        num_clusters=num_clusters,
        weights=weights,
        algorithm=algorithm,
        seed=seed,
        preprocessing=dict(preprocessing or {}),
    )


def save_clustering_json(clustering: Clustering, path: Path | str) -> None:
    _json_dump(
        {
            "num_clusters": clustering.num_clusters,
            "assignments": clustering.assignments.tolist(),
            "weights": clustering.weights.tolist(),
            "algorithm": clustering.algorithm,
            "seed": clustering.seed,
            "preprocessing": clustering.preprocessing,
        },
        path,
    )


def load_clustering_json(path: Path | str) -> Clustering:
    raw = _json_load(path)
    try:
        return Clustering(
            assignments=np.asarray(raw["assignments"], dtype=np.int64),
            num_clusters=int(raw["num_clusters"]),
            weights=np.asarray(raw["weights"], dtype=np.float64),
            algorithm=raw.get("algorithm", ""),
            seed=raw.get("seed"),
            preprocessing=raw.get("preprocessing", {}),
        )
    except KeyError as exc:
        raise DomainError(f"clustering file {path} is missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Per-cluster BER bound estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterBerEstimate:
    """Per-cluster lower/upper Bayes-error bounds with their edge statistics.

    ``cross_edges[c]`` is the K x K symmetric matrix of spanning-tree edge
    counts inside cluster c (diagonal = within-class edges) and
    ``class_counts[c]`` the per-class sample counts of the cluster.
    """

    num_clusters: int
    num_classes: int
    lower: np.ndarray
    upper: np.ndarray
    sizes: np.ndarray
    class_counts: np.ndarray
    cross_edges: np.ndarray
    delta_estimator: str = "halved"
    feature_space: str = "raw"
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        limit = (self.num_classes - 1) / self.num_classes
        if lower.shape != (self.num_clusters,) or upper.shape != (self.num_clusters,):
            raise DomainError("bound vectors must have one entry per cluster")
        if (lower < -1e-12).any() or (upper > limit + 1e-12).any():
            raise DomainError(f"bounds must lie in [0, {limit}] after clamping")
        if (lower > upper + 1e-12).any():
            raise DomainError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", _readonly(lower))
        object.__setattr__(self, "upper", _readonly(upper))
        object.__setattr__(
            self, "sizes", _readonly(np.asarray(self.sizes, dtype=np.int64))
        )
        object.__setattr__(
            self,
            "class_counts",
            _readonly(np.asarray(self.class_counts, dtype=np.int64)),
        )
        object.__setattr__(
            self,
            "cross_edges",
            _readonly(np.asarray(self.cross_edges, dtype=np.int64)),
        )
        object.__setattr__(self, "warnings", tuple(self.warnings))


def save_estimate_json(est: ClusterBerEstimate, path: Path | str) -> None:
    clusters = [
        {
            "lower": float(est.lower[c]),
            "upper": float(est.upper[c]),
            "size": int(est.sizes[c]),
            "class_counts": est.class_counts[c].tolist(),
            "cross_edges": est.cross_edges[c].tolist(),
        }
        for c in range(est.num_clusters)
    ]
    _json_dump(
        {
            "num_clusters": est.num_clusters,
            "num_classes": est.num_classes,
            "delta_estimator": est.delta_estimator,
            "feature_space": est.feature_space,
            "warnings": list(est.warnings),
            "clusters": clusters,
        },
        path,
    )


def load_estimate_json(path: Path | str) -> ClusterBerEstimate:
    raw = _json_load(path)
    try:
        clusters = raw["clusters"]
        return ClusterBerEstimate(
            num_clusters=int(raw["num_clusters"]),
            num_classes=int(raw["num_classes"]),
            lower=np.array([c["lower"] for c in clusters]),
            upper=np.array([c["upper"] for c in clusters]),
            sizes=np.array([c["size"] for c in clusters]),
            class_counts=np.array([c["class_counts"] for c in clusters]),
            cross_edges=np.array([c["cross_edges"] for c in clusters]),
            delta_estimator=raw.get("delta_estimator", "halved"),
            feature_space=raw.get("feature_space", "raw"),
            warnings=tuple(raw.get("warnings", ())),
        )
    except KeyError as exc:
        raise DomainError(f"estimate file {path} is missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Smoothing plans and soft labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothingPlan:
    """Per-cluster smoothing strengths with the global settings that made them.

    ``weighted_mean_before``/``after`` record the weighted mean strength
    before and after clamping (or before and after rank reversal), so that
    any drift from the requested average is visible rather than silently
    renormalized away.
    """

    mode: str
    alpha: float
    beta: float
    strengths: np.ndarray
    num_classes: int
    clamped_clusters: tuple[int, ...] = ()
    weighted_mean_before: float = math.nan
    weighted_mean_after: float = math.nan

    def __post_init__(self):
        if self.mode not in PLAN_MODES:
            raise DomainError(f"mode must be one of {PLAN_MODES}, got {self.mode!r}")
        if self.num_classes < 2:
            raise DomainError("num_classes must be >= 2")
        strengths = np.asarray(self.strengths, dtype=np.float64)
        limit = (self.num_classes - 1) / self.num_classes
        if strengths.ndim != 1 or strengths.size == 0:
            raise DomainError("strengths must be a non-empty 1-D vector")
        if not np.isfinite(strengths).all():
            raise DomainError("strengths must be finite")
        if (strengths < 0).any() or (strengths >= limit).any():
            raise DomainError(f"every strength must lie in [0, {limit})")
        object.__setattr__(self, "strengths", _readonly(strengths))
        object.__setattr__(self, "clamped_clusters", tuple(self.clamped_clusters))

    @property
    def num_clusters(self) -> int:
        return self.strengths.shape[0]


def save_plan_json(plan: SmoothingPlan, path: Path | str) -> None:
    _json_dump(
        {
            "mode": plan.mode,
            "alpha": plan.alpha,
            "beta": plan.beta,
            "num_classes": plan.num_classes,
            "strengths": plan.strengths.tolist(),
            "clamped_clusters": list(plan.clamped_clusters),
            "weighted_mean_before": plan.weighted_mean_before,
            "weighted_mean_after": plan.weighted_mean_after,
        },
        path,
    )


def load_plan_json(path: Path | str) -> SmoothingPlan:
    raw = _json_load(path)
    try:
        return SmoothingPlan(
            mode=raw["mode"],
            alpha=float(raw["alpha"]),
            beta=float(raw["beta"]),
            strengths=np.asarray(raw["strengths"], dtype=np.float64),
            num_classes=int(raw["num_classes"]),
            clamped_clusters=tuple(raw.get("clamped_clusters", ())),
            weighted_mean_before=raw.get("weighted_mean_before", math.nan),
            weighted_mean_after=raw.get("weighted_mean_after", math.nan),
        )
    except KeyError as exc:
        raise DomainError(f"plan file {path} is missing field {exc}") from exc


@dataclass(frozen=True)
class SoftLabelMatrix:
    """Row-stochastic N x K matrix of training targets."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DomainError("soft labels must be a 2-D matrix")
        if (values < -1e-12).any() or (values > 1 + 1e-12).any():
            raise DomainError("soft label entries must lie in [0, 1]")
        rows = values.sum(axis=1)
        if np.abs(rows - 1.0).max() > 1e-9:
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise DomainError(f"row {bad} sums to {rows[bad]}, expected 1")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    @property
    def num_classes(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# CSV serialization (datasets and soft labels)
# ---------------------------------------------------------------------------


def dataset_meta_path(csv_path: Path | str) -> Path:
    return Path(csv_path).with_suffix(".meta.json")


def _format_float_csv(matrix: np.ndarray, columns: list[str]) -> str:
    # repr() of a float64 is the shortest string that parses back bit-exactly
    lines = [",".join(columns)]
    for row in matrix:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def save_dataset_csv(
    ds: Dataset,
    path: Path | str,
    seed: int | None = None,
    extra_meta: dict | None = None,
) -> None:
    """Write ``ds`` as a CSV (features + final ``label`` column) plus sidecar JSON."""
    path = Path(path)
    names = list(ds.feature_names or (f"x{i}" for i in range(ds.num_features)))
    lines = [",".join(names + ["label"])]
    for row, lab in zip(ds.features, ds.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(lab)}")
    path.write_text("\n".join(lines) + "\n")
    label_names = ds.label_names or tuple(str(k) for k in range(ds.num_classes))
    meta = {
        "num_samples": ds.num_samples,
        "num_features": ds.num_features,
        "num_classes": ds.num_classes,
        "label_dictionary": {name: k for k, name in enumerate(label_names)},
        "seed": seed,
    }
    meta.update(extra_meta or {})
    _json_dump(meta, dataset_meta_path(path))


def load_dataset_csv(path: Path | str) -> Dataset:
    """Read a dataset CSV written by :func:`save_dataset_csv` or a foreign one.

    The final column must be named ``label``. String labels are mapped to
    dense indices via the sidecar label dictionary when present, otherwise by
    sorted order of the distinct values.
    """
    path = Path(path)
    frame = pd.read_csv(path, float_precision="round_trip")
    if frame.shape[1] < 2:
        raise DomainError(f"{path}: need at least one feature column plus 'label'")
    if frame.columns[-1] != "label":
        raise DomainError(f"{path}: final column must be named 'label'")
    meta_path = dataset_meta_path(path)
    meta = _json_load(meta_path) if meta_path.exists() else {}
    label_col = frame["label"]
    label_dict = meta.get("label_dictionary")
    if label_dict is not None and not pd.api.types.is_integer_dtype(label_col):
        try:
            labels = label_col.astype(str).map(label_dict).to_numpy(dtype=np.int64)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"{path}: label not in label dictionary") from exc
        label_names = tuple(sorted(label_dict, key=label_dict.get))
    elif pd.api.types.is_integer_dtype(label_col):
        labels = label_col.to_numpy(dtype=np.int64)
        if label_dict is not None:
            label_names = tuple(sorted(label_dict, key=label_dict.get))
        else:
            label_names = None
    else:
        distinct = sorted(label_col.astype(str).unique())
        mapping = {name: k for k, name in enumerate(distinct)}
        labels = label_col.astype(str).map(mapping).to_numpy(dtype=np.int64)
        label_names = tuple(distinct)
    num_classes = int(meta.get("num_classes", labels.max() + 1 if labels.size else 0))
    features = frame.iloc[:, :-1].to_numpy(dtype=np.float64)
    return Dataset(
        features=features,
        labels=labels,
        num_classes=num_classes,
        feature_names=tuple(frame.columns[:-1]),
        label_names=label_names,
    )


def save_soft_labels_csv(
    labels: SoftLabelMatrix, path: Path | str, meta: dict | None = None
) -> None:
    path = Path(path)
    columns = [f"p{k}" for k in range(labels.num_classes)]
    path.write_text(_format_float_csv(labels.values, columns))
    info = {
        "num_samples": labels.num_samples,
        "num_classes": labels.num_classes,
    }
    info.update(meta or {})
    _json_dump(info, dataset_meta_path(path))


def load_soft_labels_csv(path: Path | str) -> tuple[SoftLabelMatrix, dict]:
    path = Path(path)
    frame = pd.read_csv(path, float_precision="round_trip")
    meta_path = dataset_meta_path(path)
    meta = _json_load(meta_path) if meta_path.exists() else {}
    return SoftLabelMatrix(frame.to_numpy(dtype=np.float64)), meta

"""Plain-numpy MLP with soft-label cross-entropy and minibatch SGD.

One hidden ReLU layer by default (arbitrary depth supported), softmax output,
deterministic seeded initialization and shuffling. Targets are row-stochastic
matrices, so hard labels, uniformly smoothed labels, and cluster-dependent
soft labels all train through the same loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, DomainError, NumericalError, SoftLabelMatrix

__all__ = [
    "MlpModel",
    "TrainConfig",
    "init_mlp",
    "forward",
    "cross_entropy",
    "train",
    "gradient_check",
    "evaluate",
    "save_model",
    "load_model",
    "write_metrics_jsonl",
]

PREDICTION_FLOOR = 1e-12


@dataclass
class MlpModel:
    """Weights and biases of a ReLU MLP with a softmax output layer."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def num_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings for plain SGD with optional momentum.

    ``lr_schedule`` is an optional piecewise-constant schedule given as
    (start_epoch, learning_rate) pairs; absent entries fall back to
    ``learning_rate``.
    """

    epochs: int
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.0
    seed: int = 0
    lr_schedule: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError("momentum must lie in [0, 1)")
        if self.lr_schedule is not None:
            for epoch, lr in self.lr_schedule:
                if lr <= 0:
                    raise DomainError("scheduled learning rates must be positive")

    def lr_at(self, epoch: int) -> float:
        lr = self.learning_rate
        if self.lr_schedule:
            for start, value in sorted(self.lr_schedule):
                if epoch >= start:
                    lr = value
        return lr


def init_mlp(layer_sizes, seed: int = 0) -> MlpModel:
    """Uniform Glorot initialization, +-sqrt(6 / (fan_in + fan_out))."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise DomainError("layer_sizes needs at least input and output sizes >= 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _forward_cached(model: MlpModel, x: np.ndarray):
    activations = [x]
    h = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        activations.append(h)
    probs = _softmax(h @ model.weights[-1] + model.biases[-1])
    return probs, activations


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for a batch of inputs; rows sum to 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return _forward_cached(model, x[None, :])[0][0]
    return _forward_cached(model, x)[0]


def cross_entropy(targets, predictions) -> float:
    """Mean soft-target cross-entropy, -(1/N) sum_n sum_k q log p.

    Predictions are floored at 1e-12 inside the log so a confidently wrong
    output yields a large finite loss instead of an infinity.
    """
    q = targets.values if isinstance(targets, SoftLabelMatrix) else np.asarray(targets)
    p = np.asarray(predictions, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if p.ndim == 1:
        p = p[None, :]
    if q.shape != p.shape:
        raise DomainError(f"target shape {q.shape} != prediction shape {p.shape}")
    return float(-(q * np.log(np.maximum(p, PREDICTION_FLOOR))).sum() / q.shape[0])


def _backward(model: MlpModel, x: np.ndarray, q: np.ndarray):
    """Gradients of the mean cross-entropy w.r.t. every weight and bias."""
    probs, activations = _forward_cached(model, x)
    n = x.shape[0]
    delta = (probs - q) / n
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (activations[layer] > 0)
    return grads_w, grads_b, probs


def train(
    model: MlpModel,
    features,
    targets,
    config: TrainConfig,
    eval_dataset: Dataset | None = None,
) -> list[dict]:
    """Minibatch SGD in place; returns one metrics record per epoch.

    Shuffling is re-seeded per epoch from (config.seed, epoch), so a rerun
    with the same seed reproduces the trajectory exactly. Raises
    :class:`NumericalError` naming the epoch if the loss stops being finite.
    """
    x = np.asarray(features, dtype=np.float64)
    q = targets.values if isinstance(targets, SoftLabelMatrix) else np.asarray(targets)
    if x.ndim != 2 or q.ndim != 2 or x.shape[0] != q.shape[0]:
        raise DomainError("features and targets must be matrices with equal row count")
    if x.shape[1] != model.layer_sizes[0] or q.shape[1] != model.layer_sizes[-1]:
        raise DomainError("feature/target widths do not match the model layers")
    n = x.shape[0]
    velocity_w = [np.zeros_like(w) for w in model.weights]
    velocity_b = [np.zeros_like(b) for b in model.biases]
    metrics: list[dict] = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng([config.seed, epoch])
        order = rng.permutation(n)
        lr = config.lr_at(epoch)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            grads_w, grads_b, probs = _backward(model, x[batch], q[batch])
            batch_loss = cross_entropy(q[batch], probs)
            epoch_loss += batch_loss * batch.size
            for layer in range(len(model.weights)):
                velocity_w[layer] = (
                    config.momentum * velocity_w[layer] - lr * grads_w[layer]
                )
                velocity_b[layer] = (
                    config.momentum * velocity_b[layer] - lr * grads_b[layer]
                )
                model.weights[layer] += velocity_w[layer]
                model.biases[layer] += velocity_b[layer]
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise NumericalError(f"training diverged at epoch {epoch}: loss={epoch_loss}")
        record = {"epoch": epoch, "train_loss": epoch_loss}
        if eval_dataset is not None:
            error, ce = evaluate(model, eval_dataset)
            record["test_error"] = error
            record["test_ce"] = ce
        metrics.append(record)
    return metrics


def gradient_check(model: MlpModel, features, targets, step: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    Intended for small models (a few thousand parameters); every parameter is
    perturbed individually.
    """
    x = np.asarray(features, dtype=np.float64)
    q = targets.values if isinstance(targets, SoftLabelMatrix) else np.asarray(targets)
    grads_w, grads_b, _ = _backward(model, x, q)
    analytic = grads_w + grads_b
    worst = 0.0
    for param, grad in zip(model.weights + model.biases, analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            up = cross_entropy(q, forward(model, x))
            flat[idx] = original - step
            down = cross_entropy(q, forward(model, x))
            flat[idx] = original
            numeric = (up - down) / (2.0 * step)
            scale = max(abs(numeric), abs(gflat[idx]), 1e-8)
            worst = max(worst, abs(numeric - gflat[idx]) / scale)
    return worst


def evaluate(model: MlpModel, dataset: Dataset) -> tuple[float, float]:
    """(0/1 error rate of argmax predictions, cross-entropy vs true labels)."""
    probs = forward(model, dataset.features)
    predictions = probs.argmax(axis=1)
    error = float((predictions != dataset.labels).mean())
    true_prob = probs[np.arange(dataset.num_samples), dataset.labels]
    ce = float(-np.log(np.maximum(true_prob, PREDICTION_FLOOR)).mean())
    return error, ce


def save_model(model: MlpModel, path: Path | str) -> None:
    """JSON header line plus the concatenated row-major float64 parameters."""
    header = json.dumps(
        {
            "layer_sizes": list(model.layer_sizes),
            "activation": "relu",
            "output": "softmax",
            "dtype": "float64",
        },
        sort_keys=True,
    )
    blob = b"".join(
        np.ascontiguousarray(arr, dtype=np.float64).tobytes()
        for pair in zip(model.weights, model.biases)
        for arr in pair
    )
    Path(path).write_bytes(header.encode() + b"\n" + blob)


def load_model(path: Path | str) -> MlpModel:
    raw = Path(path).read_bytes()
    newline = raw.index(b"\n")
    header = json.loads(raw[:newline].decode())
    sizes = tuple(int(s) for s in header["layer_sizes"])
    flat = np.frombuffer(raw[newline + 1 :], dtype=np.float64)
    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out).copy())
        offset += fan_in * fan_out
        biases.append(flat[offset : offset + fan_out].copy())
        offset += fan_out
    if offset != flat.size:
        raise DomainError(f"model file {path} has {flat.size - offset} extra values")
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases)


def write_metrics_jsonl(metrics: list[dict], path: Path | str) -> None:
    lines = [json.dumps(record, sort_keys=True) for record in metrics]
    Path(path).write_text("\n".join(lines) + "\n")

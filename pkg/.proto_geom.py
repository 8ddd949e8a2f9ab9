"""Probe learnability vs line span for the shipped spec geometry."""
import numpy as np

import slsmooth as s
from slsmooth.datagen import GmmSpec
from slsmooth.clustering import standardize


def ramp_spec(gap, deltas, num_noise=126):
    deltas = np.asarray(deltas, float)
    if np.isscalar(gap):
        gaps = np.full(len(deltas) - 1, float(gap))
    else:
        gaps = np.asarray(gap, float)
    starts = np.concatenate([[0.0], np.cumsum(deltas[:-1] + gaps)])
    span = starts[-1] + deltas[-1]
    pos0 = starts - span / 2.0
    pos1 = pos0 + deltas
    diag = np.array([1.0, 1.0]) / np.sqrt(2.0)
    eye = np.broadcast_to(np.eye(2), (6, 2, 2)).copy()
    sixth = np.full(6, 1.0 / 6.0)
    return GmmSpec(
        class_priors=np.array([0.5, 0.5]),
        component_means=(pos0[:, None] * diag, pos1[:, None] * diag),
        component_covs=(eye, eye.copy()),
        component_weights=(sixth, sixth.copy()),
        noise_means=np.zeros(num_noise),
        noise_stds=np.ones(num_noise),
    )


VARIANTS = {
    "A_gap6_wide": ramp_spec(6.0, [0.15, 0.3, 0.6, 1.2, 2.4, 4.8]),
    "B_gap3": ramp_spec(3.0, [0.2, 0.5, 0.9, 1.5, 2.4, 3.6]),
    "C_gap2": ramp_spec(2.0, [0.2, 0.5, 0.9, 1.5, 2.4, 3.6]),
    "D_tapered": ramp_spec([2.2, 2.4, 2.8, 3.4, 4.2], [0.2, 0.5, 0.9, 1.5, 2.4, 3.6]),
}

for name, spec in VARIANTS.items():
    bayes = s.oracle_ber(spec, n_mc=50000, seed=9).value
    train, test = s.generate(spec, 2000, seed=20240101)
    xtr, mean, scale = standardize(train.features)
    xte = (test.features - mean) / scale
    test_std = s.Dataset(features=xte, labels=test.labels, num_classes=2)
    targets = s.soft_labels(train, None, s.none_plan(1, 2))
    mlp = s.init_mlp([train.num_features, 256, 2], seed=0)
    cfg = s.TrainConfig(epochs=300, batch_size=128, learning_rate=0.01, seed=0)
    metrics = s.train(mlp, xtr, targets, cfg, eval_dataset=test_std)
    best = min(m["test_error"] for m in metrics)
    print(f"{name:12s} bayes={100*bayes:.1f}% final={100*metrics[-1]['test_error']:.1f}% "
          f"best={100*best:.1f}%", flush=True)

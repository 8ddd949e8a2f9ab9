"""Isolate why nothing learns: trainer sanity, noise dims, N, lr."""
import numpy as np

import slsmooth as s
from slsmooth.datagen import GmmSpec
from slsmooth.clustering import standardize


def ramp_spec(gap, deltas, num_noise=126):
    deltas = np.asarray(deltas, float)
    gaps = np.full(len(deltas) - 1, float(gap))
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


def probe(tag, spec, n, epochs, lr, hidden=256):
    train, test = s.generate(spec, n, seed=20240101)
    xtr, mean, scale = standardize(train.features)
    xte = (test.features - mean) / scale
    test_std = s.Dataset(features=xte, labels=test.labels, num_classes=2)
    targets = s.soft_labels(train, None, s.none_plan(1, 2))
    mlp = s.init_mlp([train.num_features, hidden, 2], seed=0)
    cfg = s.TrainConfig(epochs=epochs, batch_size=128, learning_rate=lr, seed=0)
    metrics = s.train(mlp, xtr, targets, cfg, eval_dataset=test_std)
    print(f"{tag:28s} final={100*metrics[-1]['test_error']:.1f}% "
          f"best={100*min(m['test_error'] for m in metrics):.1f}% "
          f"trainloss={metrics[-1]['train_loss']:.3f}", flush=True)


# sanity: two separated blobs in 2-D
rng = np.random.default_rng(0)
xa = rng.normal([-2, 0], 1, (500, 2))
xb = rng.normal([2, 0], 1, (500, 2))
x = np.vstack([xa, xb])
y = np.repeat([0, 1], 500)
ds = s.Dataset(features=x, labels=y, num_classes=2)
targets = s.soft_labels(ds, None, s.none_plan(1, 2))
mlp = s.init_mlp([2, 16, 2], seed=0)
cfg = s.TrainConfig(epochs=50, batch_size=32, learning_rate=0.1, seed=0)
metrics = s.train(mlp, x, targets, cfg, eval_dataset=ds)
print("blob sanity final err:", metrics[-1]["test_error"])

spec_c = ramp_spec(2.0, [0.2, 0.5, 0.9, 1.5, 2.4, 3.6])
spec_c0 = ramp_spec(2.0, [0.2, 0.5, 0.9, 1.5, 2.4, 3.6], num_noise=0)
print("bayes C:", round(100 * s.oracle_ber(spec_c, n_mc=50000, seed=9).value, 1))

probe("C no-noise n2000 lr.01", spec_c0, 2000, 300, 0.01)
probe("C noise    n2000 lr.1", spec_c, 2000, 300, 0.1)
probe("C noise    n2000 lr.3", spec_c, 2000, 300, 0.3)
probe("C noise    n12000 lr.01", spec_c, 12000, 300, 0.01)
probe("C noise    n12000 lr.1", spec_c, 12000, 300, 0.1)

"""Validate the mirror-design spec: learnability + bound correlation."""
import numpy as np

import slsmooth as s
from slsmooth.datagen import GmmSpec
from slsmooth.clustering import standardize, preprocess_features, fit_gmm, gmm_assign


def mirror_spec(q, num_noise=126):
    q = np.asarray(q, float)
    diag = np.array([1.0, 1.0]) / np.sqrt(2.0)
    means0 = (-q)[:, None] * diag
    means1 = q[:, None] * diag
    eye = np.broadcast_to(np.eye(2), (len(q), 2, 2)).copy()
    w = np.full(len(q), 1.0 / len(q))
    return GmmSpec(
        class_priors=np.array([0.5, 0.5]),
        component_means=(means0, means1),
        component_covs=(eye, eye.copy()),
        component_weights=(w, w.copy()),
        noise_means=np.zeros(num_noise),
        noise_stds=np.ones(num_noise),
    )


spec = mirror_spec([0.2, 0.5, 1.0, 1.8, 3.2, 9.0])
bayes = s.oracle_ber(spec, n_mc=100000, seed=9)
print(f"bayes error: {100*bayes.value:.2f}% +- {100*bayes.stderr:.2f}")

# learnability at smoke scale
train, test = s.generate(spec, 2000, seed=20240101)
xtr, mean, scale = standardize(train.features)
xte = (test.features - mean) / scale
test_std = s.Dataset(features=xte, labels=test.labels, num_classes=2)
targets = s.soft_labels(train, None, s.none_plan(1, 2))
mlp = s.init_mlp([train.num_features, 256, 2], seed=0)
cfg = s.TrainConfig(epochs=300, batch_size=128, learning_rate=0.01, seed=0)
metrics = s.train(mlp, xtr, targets, cfg, eval_dataset=test_std)
for rec in metrics[::60] + [metrics[-1]]:
    print(rec["epoch"], round(rec["train_loss"], 4), f"{100*rec['test_error']:.1f}%")

# criterion-6 style correlation, 3 seed combos
train12, _ = s.generate(spec, 12000, seed=20240101)
for sd, sc in ((20240101, 7), (1, 0), (3, 7)):
    tr, _ = s.generate(spec, 12000, seed=sd)
    pts, _ = preprocess_features(tr.features, do_standardize=True, pca_dim=2)
    gm = fit_gmm(pts, 32, seed=sc)
    cl = gmm_assign(gm, pts)
    est = s.cluster_ber(tr, cl, points=pts)
    oracle = np.array([
        s.oracle_ber(spec, region=tr.features[cl.assignments == c]).value
        for c in range(32)
    ])
    print(f"corr data={sd} clus={sc}: {np.corrcoef(est.lower, oracle)[0,1]:.3f}",
          f"minsize={np.bincount(cl.assignments, minlength=32).min()}", flush=True)

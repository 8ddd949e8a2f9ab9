"""Mirror spec: criterion 7 smoke ordering test."""
import time

import numpy as np

import slsmooth as s
from slsmooth.datagen import GmmSpec
from slsmooth.clustering import standardize, preprocess_features, fit_gmm, gmm_assign


def mirror_spec(q, num_noise=126):
    q = np.asarray(q, float)
    diag = np.array([1.0, 1.0]) / np.sqrt(2.0)
    eye = np.broadcast_to(np.eye(2), (len(q), 2, 2)).copy()
    w = np.full(len(q), 1.0 / len(q))
    return GmmSpec(
        class_priors=np.array([0.5, 0.5]),
        component_means=((-q)[:, None] * diag, q[:, None] * diag),
        component_covs=(eye, eye.copy()),
        component_weights=(w, w.copy()),
        noise_means=np.zeros(num_noise),
        noise_stds=np.ones(num_noise),
    )


ALPHA, BETA, N, EPOCHS = 0.2, 0.4, 2000, 300
spec = mirror_spec([0.2, 0.5, 1.0, 1.8, 3.2, 9.0])
train, test = s.generate(spec, N, seed=20240101)
pts, _ = preprocess_features(train.features, do_standardize=True, pca_dim=2)
gm = fit_gmm(pts, 32, seed=7)
clustering = gmm_assign(gm, pts)
est = s.cluster_ber(train, clustering, points=pts)
config = s.SmoothingConfig(alpha=ALPHA, beta=BETA, num_classes=2)
plan_sls = s.solve_strengths(est, clustering.weights, config)
plan_rev = s.reverse_plan(plan_sls, clustering.weights)
plans = {
    "none": s.none_plan(32, 2),
    "uls": s.uniform_plan(ALPHA, 32, 2),
    "sls": plan_sls,
    "revsls": plan_rev,
}
print("sls strengths range:", plan_sls.strengths.min(), plan_sls.strengths.max())

xtr, mean, scale = standardize(train.features)
xte = (test.features - mean) / scale
test_std = s.Dataset(features=xte, labels=test.labels, num_classes=2)

results = {name: [] for name in plans}
t0 = time.time()
for seed in range(5):
    for name, plan in plans.items():
        targets = s.soft_labels(train, clustering, plan)
        mlp = s.init_mlp([train.num_features, 256, 2], seed=seed)
        cfg = s.TrainConfig(epochs=EPOCHS, batch_size=128, learning_rate=0.01, seed=seed)
        metrics = s.train(mlp, xtr, targets, cfg, eval_dataset=test_std)
        results[name].append(metrics[-1]["test_error"])
    print(f"seed{seed}: " + " ".join(f"{k}={100*results[k][-1]:.2f}%" for k in plans),
          flush=True)
print("time", time.time() - t0)
m = {k: float(np.mean(v)) for k, v in results.items()}
sdv = {k: float(np.std(v, ddof=1)) for k, v in results.items()}
for k in plans:
    print(f"{k:7s} mean={100*m[k]:.3f}% std={100*sdv[k]:.3f}%")
print(f"None-ULS: {100*(m['none']-m['uls']):+.3f}pp  ULS-SLS: {100*(m['uls']-m['sls']):+.3f}pp  "
      f"RevSLS-ULS: {100*(m['revsls']-m['uls']):+.3f}pp  (all want >= -0.1)")

"""Prototype: criterion 7 smoke ordering (N=2000, 300 epochs, 5 seeds)."""
import time

import numpy as np

import slsmooth as s
from slsmooth.clustering import preprocess_features, fit_gmm, gmm_assign

ALPHA = 0.2
BETA = 0.4
N = 2000
EPOCHS = 300
SEEDS = [0, 1, 2, 3, 4]

spec = s.default_spec()
train, test = s.generate(spec, N, seed=20240101)
pts, _ = preprocess_features(train.features, do_standardize=True, pca_dim=2)
model = fit_gmm(pts, 32, seed=7)
clustering = gmm_assign(model, pts)
est = s.cluster_ber(train, clustering, points=pts)
config = s.SmoothingConfig(alpha=ALPHA, beta=BETA, num_classes=2)
plan_sls = s.solve_strengths(est, clustering.weights, config)
plan_rev = s.reverse_plan(plan_sls, clustering.weights)
plan_uls = s.uniform_plan(ALPHA, 32, 2)
plan_none = s.none_plan(32, 2)
print("sls strengths:", np.round(plan_sls.strengths, 3))
print("weighted mean after clamp:", plan_sls.weighted_mean_after)

plans = {"none": plan_none, "uls": plan_uls, "sls": plan_sls, "revsls": plan_rev}
results = {name: [] for name in plans}
t0 = time.time()
for seed in SEEDS:
    for name, plan in plans.items():
        targets = s.soft_labels(train, clustering, plan)
        mlp = s.init_mlp([train.num_features, 256, 2], seed=seed)
        cfg = s.TrainConfig(epochs=EPOCHS, batch_size=128, learning_rate=0.01, seed=seed)
        metrics = s.train(mlp, train.features, targets, cfg, eval_dataset=test)
        err = metrics[-1]["test_error"]
        results[name].append(err)
        print(f"seed{seed} {name:7s} err={100*err:.2f}%", flush=True)
print("total time", time.time() - t0)
for name, errs in results.items():
    errs = np.array(errs)
    print(f"{name:7s} mean={100*errs.mean():.2f}% std={100*errs.std(ddof=1):.2f}%")
m = {k: np.mean(v) for k, v in results.items()}
print(f"None-ULS gap: {100*(m['none']-m['uls']):+.2f}pp (want >= -0.1)")
print(f"ULS-SLS gap:  {100*(m['uls']-m['sls']):+.2f}pp (want >= -0.1)")
print(f"RevSLS-ULS:   {100*(m['revsls']-m['uls']):+.2f}pp (want >= -0.1)")

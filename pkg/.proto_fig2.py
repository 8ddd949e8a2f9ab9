"""Prototype: criterion 6 (bound-vs-oracle correlation with PCA+GMM 32 clusters)."""
import time

import numpy as np

import slsmooth as s
from slsmooth.clustering import preprocess_features, fit_gmm, gmm_assign

t0 = time.time()
spec = s.default_spec()
train, test = s.generate(spec, 12000, seed=20240101)
print("gen", time.time() - t0)

t0 = time.time()
pts, desc = preprocess_features(train.features, do_standardize=True, pca_dim=2)
print("preprocess", time.time() - t0, desc)

t0 = time.time()
model = fit_gmm(pts, 32, seed=7)
clustering = gmm_assign(model, pts)
print("gmm", time.time() - t0, "iters", len(model.log_likelihood_path))
print("cluster sizes", np.bincount(clustering.assignments, minlength=32))

t0 = time.time()
est = s.cluster_ber(train, clustering, points=pts, feature_space="standardize+pca2")
print("estimate", time.time() - t0)

oracle = np.array([
    s.oracle_ber(spec, region=train.features[clustering.assignments == c]).value
    for c in range(32)
])
corr = np.corrcoef(est.lower, oracle)[0, 1]
print("lower bounds ", np.round(est.lower, 3))
print("oracle BER   ", np.round(oracle, 3))
print("PEARSON CORR", corr)

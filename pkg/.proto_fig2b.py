"""Variations on criterion 6 to find robustness margin."""
import numpy as np

import slsmooth as s
from slsmooth.clustering import preprocess_features, fit_gmm, gmm_assign, kmeans

spec = s.default_spec()


def run(seed_data, seed_cluster, algo="gmm", r=2, est_r=None):
    train, _ = s.generate(spec, 12000, seed=seed_data)
    pts, _ = preprocess_features(train.features, do_standardize=True, pca_dim=r)
    if algo == "gmm":
        model = fit_gmm(pts, 32, seed=seed_cluster, max_iters=500, tol=1e-6)
        clustering = gmm_assign(model, pts)
    else:
        clustering = kmeans(pts, 32, seed=seed_cluster)
    est_pts = pts if est_r is None else pts[:, :est_r]
    est = s.cluster_ber(train, clustering, points=est_pts)
    oracle = np.array([
        s.oracle_ber(spec, region=train.features[clustering.assignments == c]).value
        for c in range(32)
    ])
    return np.corrcoef(est.lower, oracle)[0, 1]


for sd in (20240101, 1, 2):
    for sc in (7, 0):
        print(f"gmm r2  data={sd} clus={sc} corr={run(sd, sc):.3f}", flush=True)

print()
for sd in (20240101, 1, 2):
    print(f"gmm r2 est_r1 data={sd} corr={run(sd, 7, est_r=1):.3f}", flush=True)

print()
for sd in (20240101, 1, 2):
    print(f"kmeans r2 data={sd} corr={run(sd, 7, algo='kmeans'):.3f}", flush=True)

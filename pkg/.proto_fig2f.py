"""Floor 0.05 vs 0.1, with and without best-of-3 restarts."""
import numpy as np

import slsmooth as s
from slsmooth.clustering import preprocess_features, fit_gmm, gmm_assign

spec = s.default_spec()


def run(seed_data, seed_cluster, frac, restarts=1):
    train, _ = s.generate(spec, 12000, seed=seed_data)
    pts, _ = preprocess_features(train.features, do_standardize=True, pca_dim=2)
    best = None
    for k in range(restarts):
        model = fit_gmm(pts, 32, seed=seed_cluster + 1000 * k, var_floor_frac=frac)
        ll = model.log_likelihood_path[-1]
        if best is None or ll > best[0]:
            best = (ll, model)
    clustering = gmm_assign(best[1], pts)
    est = s.cluster_ber(train, clustering, points=pts)
    oracle = np.array([
        s.oracle_ber(spec, region=train.features[clustering.assignments == c]).value
        for c in range(32)
    ])
    sizes = np.bincount(clustering.assignments, minlength=32)
    return np.corrcoef(est.lower, oracle)[0, 1], sizes.min()


for frac, restarts in ((0.1, 1), (0.05, 3), (0.1, 3)):
    vals, minsizes = [], []
    for sd in (20240101, 1, 2, 3, 4):
        for sc in (7, 0):
            c, ms = run(sd, sc, frac, restarts)
            vals.append(c)
            minsizes.append(ms)
    print(f"frac={frac} restarts={restarts}: min={min(vals):.3f} mean={np.mean(vals):.3f} "
          f"minsize={min(minsizes)} all={[round(v,3) for v in vals]}", flush=True)

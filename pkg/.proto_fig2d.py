"""Inspect a low-correlation run cluster by cluster."""
import numpy as np

import slsmooth as s
from slsmooth.clustering import preprocess_features, fit_gmm, gmm_assign

spec = s.default_spec()
train, _ = s.generate(spec, 12000, seed=4)
pts, _ = preprocess_features(train.features, do_standardize=True, pca_dim=2)
model = fit_gmm(pts, 32, seed=7)
clustering = gmm_assign(model, pts)
est = s.cluster_ber(train, clustering, points=pts)
oracle = np.array([
    s.oracle_ber(spec, region=train.features[clustering.assignments == c]).value
    for c in range(32)
])
sizes = np.bincount(clustering.assignments, minlength=32)
order = np.argsort(oracle)
print(" c   size  bound  oracle   diff   pc1_lo  pc1_hi  pc2sd")
for c in order:
    m = clustering.assignments == c
    print(f"{c:3d} {sizes[c]:6d} {est.lower[c]:6.3f} {oracle[c]:7.3f} "
          f"{est.lower[c]-oracle[c]:+7.3f} {pts[m,0].min():7.2f} {pts[m,0].max():7.2f} "
          f"{pts[m,1].std():6.2f}")
print("corr", np.corrcoef(est.lower, oracle)[0, 1])
w = sizes / sizes.sum()
mw = ((est.lower - est.lower.mean()) * (oracle - oracle.mean()) * w).sum() / np.sqrt(
    (((est.lower - est.lower.mean()) ** 2 * w).sum()) * (((oracle - oracle.mean()) ** 2 * w).sum())
)
print("size-weighted corr", mw)

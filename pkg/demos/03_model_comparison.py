"""
Comparing the block model against its hybrid extensions
=======================================================

The class-distance model (CDM) shifts each block pair's connection
propensity by the distance between cluster-level latent positions; the
class-bilinear model (CBM) uses an inner product instead. On a small
planted-partition network all three recover the structure; the WAIC
column shows the fit ranking. The `blockforge compare` subcommand runs
the full 3 models x 4 priors grid and writes a CSV of this table.
"""

import numpy as np

import blockforge as bf

g, truth, _ = bf.generate(bf.ScenarioSpec(n=50, K=3, seed=3))
prior = bf.elicit("dp", g.n, g.mean_degree())
cfg = bf.ChainConfig(burn_in=3000, n_samples=500, thin=4, seed=0)

print(f"n={g.n}, 3 planted communities, DP alpha={prior.alpha:.3f}\n")
print(f"{'model':6s} {'H':>3s} {'ARI':>6s} {'VI':>6s} {'WAIC':>8s} {'AUC':>6s}")
for name, kind in (("cm", bf.CM()), ("cdm", bf.CDM(Q=4)), ("cbm", bf.CBM(Q=4))):
    samples = bf.run_chain(kind, g, prior, cfg)
    rep = bf.fit_report(samples, truth=truth)
    print(f"{name:6s} {rep.H_median:3d} {rep.ari:6.3f} {rep.vi_to_truth:6.3f} "
          f"{rep.waic:8.1f} {rep.auc:6.3f}")

# the hybrid state also exposes the latent positions of the last draw,
# useful for diagnosing how far apart the recovered blocks sit
samples = bf.run_chain(bf.CDM(Q=2), g, prior, cfg)
est = bf.point_estimate(samples.partitions())
print(f"\nCDM(Q=2) point estimate has {est.k_star} clusters; "
      f"credible ball radius {bf.credible_ball_radius(samples.partitions(), est):.3f} bits")

"""
Clustering priors: allocation rules, partition masses, elicitation
==================================================================

The four priors (Dirichlet-multinomial, Dirichlet process, Pitman-Yor,
Gnedin) share one interface: sequential allocation weights for the
Gibbs sweep and a closed-form partition mass. This script walks through
both, then elicits each prior's parameters so that the expected number
of clusters matches a target derived from the mean degree.
"""

import math

import numpy as np

import blockforge as bf
from blockforge import prior_allocation, log_partition_mass

# ---- allocation weights --------------------------------------------------
# three occupied clusters of sizes 3, 2, 1; where does node 7 go?
counts = [3, 2, 1]

for prior in (bf.DM(alpha=2.0, K=8), bf.DP(alpha=1.0),
              bf.PYP(alpha=0.5, sigma=0.3), bf.GNP(gamma=0.5)):
    w = prior_allocation(prior, counts, n_excl=6, K_star=3)
    probs = w.normalized()
    name = type(prior).__name__
    print(f"{name:4s} join probabilities {np.round(probs[:3], 3).tolist()}"
          f"  new cluster {probs[3] if probs.size == 4 else 0:.3f}")

# ---- partition masses ------------------------------------------------------
# the DP mass of the all-together partition of n items is 1/n... times
# nothing else at alpha=1, a quick sanity anchor
n = 6
print(f"\nDP(1) mass of [{n}] = {math.exp(log_partition_mass(bf.DP(alpha=1.0), [n], n)):.4f}"
      f" (expect {1 / n:.4f})")

# Pitman-Yor with sigma=0 collapses to the DP
m_pyp = log_partition_mass(bf.PYP(alpha=1.0, sigma=0.0), [3, 2, 1], 6)
m_dp = log_partition_mass(bf.DP(alpha=1.0), [3, 2, 1], 6)
print(f"PYP(sigma=0) == DP: {math.isclose(m_pyp, m_dp)}")

# ---- elicitation ------------------------------------------------------------
# target cluster count = n / mean degree, then each family's parameter
# is solved so the prior expected cluster count hits the target
g, truth, _ = bf.generate(bf.ScenarioSpec(n=100, K=5, seed=1))
print(f"\nnetwork mean degree {g.mean_degree():.1f} "
      f"-> target K* = {max(int(g.n // g.mean_degree()), 1)}")
for fam in ("dm", "dp", "pyp", "gnp"):
    prior = bf.elicit(fam, g.n, g.mean_degree(), K_dm=50)
    print(f"  {fam:4s} {prior}")

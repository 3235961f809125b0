"""Gibbs-type clustering priors: allocation rules, partition masses, elicitation.

Four families share one interface. DM is parametric with a hard cap of K
clusters; DP, PYP and GNP are nonparametric with sequential CRP-style
allocation rules. All masses are over label vectors (DM) or unordered
partitions (the rest) and are exchangeable, so sequential products along
any insertion order reproduce the mass of the final partition.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class DM:
    """Dirichlet-Multinomial prior: symmetric Dirichlet(alpha/K) over K slots."""

    alpha: float
    K: int
    tag = "dm"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("DM requires alpha > 0")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("DM requires integer K >= 1")
        object.__setattr__(self, "K", int(self.K))


@dataclass(frozen=True)
class DP:
    """Dirichlet process prior with concentration alpha (CRP allocation)."""

    alpha: float
    tag = "dp"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("DP requires alpha > 0")


@dataclass(frozen=True)
class PYP:
    """Pitman-Yor process prior: concentration alpha, discount sigma."""

    alpha: float
    sigma: float
    tag = "pyp"

    def __post_init__(self):
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError("PYP requires 0 <= sigma < 1")
        if not self.alpha > -self.sigma:
            raise ValueError("PYP requires alpha > -sigma")


@dataclass(frozen=True)
class GNP:
    """Gnedin process prior with parameter gamma in (0, 1).

    Induces a random but almost-surely finite number of clusters;
    allocation follows the Gnedin urn rule.
    """

    gamma: float
    tag = "gnp"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("GNP requires 0 < gamma < 1")


PRIOR_KINDS = {"dm": DM, "dp": DP, "pyp": PYP, "gnp": GNP}


def prior_to_dict(prior):
    """Serialize a prior to the flat JSON form used by run configs."""
    if isinstance(prior, DM):
        return {"prior": "dm", "alpha": prior.alpha, "K": prior.K}
    if isinstance(prior, DP):
        return {"prior": "dp", "alpha": prior.alpha}
    if isinstance(prior, PYP):
        return {"prior": "pyp", "alpha": prior.alpha, "sigma": prior.sigma}
    if isinstance(prior, GNP):
        return {"prior": "gnp", "gamma": prior.gamma}
    raise TypeError(f"not a clustering prior: {prior!r}")


def prior_from_dict(d):
    tag = d.get("prior")
    if tag == "dm":
        return DM(alpha=float(d["alpha"]), K=int(d["K"]))
    if tag == "dp":
        return DP(alpha=float(d["alpha"]))
    if tag == "pyp":
        return PYP(alpha=float(d["alpha"]), sigma=float(d["sigma"]))
    if tag == "gnp":
        return GNP(gamma=float(d["gamma"]))
    raise ValueError(f"unknown prior tag: {tag!r}")


@dataclass(frozen=True)
class AllocationWeights:
    """Unnormalized sequential-allocation weights for one node.

    `existing` has one entry per occupied cluster; `new` is the weight of
    opening a cluster (None for DM when all K slots are occupied).
    """

    existing: np.ndarray
    new: float | None

    def normalized(self):
        w = self.existing if self.new is None else np.append(self.existing, self.new)
        total = w.sum()
        if total <= 0:
            raise ValueError("zero total allocation weight")
        return w / total


def prior_allocation(prior, counts, n_excl, K_star):
    """Unnormalized allocation weights for the next node given occupied counts.

    `counts` holds the sizes of the K_star occupied clusters with the
    current node removed; `n_excl` is their sum.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size != K_star:
        raise ValueError("counts length must equal K_star")
    if counts.size and counts.min() <= 0:
        raise ValueError("occupied counts must be positive")
    if counts.sum() != n_excl:
        raise ValueError("counts must sum to n_excl")

    if isinstance(prior, DM):
        if K_star > prior.K:
            raise ValueError("K_star exceeds the DM cap K")
        rate = prior.alpha / prior.K
        new = None if K_star == prior.K else (prior.K - K_star) * rate
        return AllocationWeights(existing=counts + rate, new=new)
    if isinstance(prior, DP):
        return AllocationWeights(existing=counts.copy(), new=prior.alpha)
    if isinstance(prior, PYP):
        return AllocationWeights(
            existing=counts - prior.sigma, new=K_star * prior.sigma + prior.alpha
        )
    if isinstance(prior, GNP):
        g = prior.gamma
        existing = (counts + 1.0) * (n_excl - K_star + g)
        new = K_star * (K_star - g)
        if existing.sum() + new <= 0:
            raise ValueError("zero total allocation weight")
        return AllocationWeights(existing=existing, new=new)
    raise TypeError(f"not a clustering prior: {prior!r}")


def log_partition_mass(prior, sizes, n):
    """Log prior mass of a partition with the given occupied cluster sizes.

    For DM this is the mass of one label vector (summing over all K^n label
    vectors gives 1); for DP/PYP/GNP it is the EPPF of the unordered
    partition.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0 or sizes.min() <= 0:
        raise ValueError("sizes must be positive")
    if sizes.sum() != n:
        raise ValueError("sizes must sum to n")
    k = sizes.size

    if isinstance(prior, DM):
        if k > prior.K:
            raise ValueError("more occupied clusters than DM slots")
        rate = prior.alpha / prior.K
        return float(
            gammaln(prior.alpha)
            - gammaln(n + prior.alpha)
            + np.sum(gammaln(sizes + rate) - gammaln(rate))
        )
    if isinstance(prior, DP):
        a = prior.alpha
        return float(gammaln(a) - gammaln(a + n) + k * math.log(a) + np.sum(gammaln(sizes)))
    if isinstance(prior, PYP):
        a, s = prior.alpha, prior.sigma
        if s == 0.0:
            return log_partition_mass(DP(alpha=a), sizes, n)
        lead = sum(math.log(a + i * s) for i in range(1, k))
        return float(
            lead
            + gammaln(a + 1)
            - gammaln(a + n)
            + np.sum(gammaln(sizes - s) - gammaln(1 - s))
        )
    if isinstance(prior, GNP):
        # closed form of the urn-rule product:
        #   (K-1)! (1-g)_{K-1} (g)_{n-K} prod n_k! / [(n-1)! (1+g)_{n-1}]
        g = prior.gamma
        return float(
            gammaln(k)
            + gammaln(k - g)
            - gammaln(1 - g)
            + gammaln(n - k + g)
            - gammaln(g)
            + np.sum(gammaln(sizes + 1))
            - gammaln(n)
            - gammaln(n + g)
            + gammaln(1 + g)
        )
    raise TypeError(f"not a clustering prior: {prior!r}")


def _dm_alpha_identity(alpha, n):
    # expected occupied-cluster count under the log identity used for tuning
    return alpha * math.log((alpha + n) / alpha)


def elicit(kind, n, mean_degree, K_dm=None):
    """Choose prior hyperparameters so the expected cluster count hits n/mean_degree.

    The target is floor(n / mean_degree), clamped to [1, n]. DM solves
    alpha * log((alpha+n)/alpha) = target by bisection; DP, PYP and GNP use
    their closed-form asymptotic inversions.
    """
    if n <= 1:
        raise ValueError("elicitation needs n > 1")
    if not mean_degree > 0:
        raise ValueError("mean_degree must be positive")
    target = min(max(int(n // mean_degree), 1), n)
    log_n = math.log(n)

    kind = kind.lower()
    if kind == "dm":
        if K_dm is None:
            raise ValueError("DM elicitation needs K_dm")
        lo, hi = 1e-8, 1e8
        f_lo = _dm_alpha_identity(lo, n) - target
        f_hi = _dm_alpha_identity(hi, n) - target
        if f_lo > 0 or f_hi < 0:
            raise ValueError(f"DM bisection bracket failure for target {target}")
        # bisect on log-alpha; the identity is monotone increasing in alpha
        llo, lhi = math.log(lo), math.log(hi)
        for _ in range(200):
            mid = 0.5 * (llo + lhi)
            if _dm_alpha_identity(math.exp(mid), n) < target:
                llo = mid
            else:
                lhi = mid
            if lhi - llo < 1e-10:
                break
        return DM(alpha=math.exp(0.5 * (llo + lhi)), K=int(K_dm))
    if kind == "dp":
        return DP(alpha=target / log_n)
    if kind == "pyp":
        if target == 1 or target == n:
            raise ValueError(f"PYP elicitation degenerate at target K* = {target}")
        sigma = math.log(target) / log_n
        return PYP(alpha=sigma * target / n**sigma, sigma=sigma)
    if kind == "gnp":
        return GNP(gamma=target / (target + log_n))
    raise ValueError(f"unknown prior kind: {kind!r}")

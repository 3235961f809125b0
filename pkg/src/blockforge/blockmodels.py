"""Block-level likelihoods under a probit link, for three model classes.

CM gives every cluster pair (k, l) a free block parameter eta_{k,l}. The
hybrid classes derive the block matrix from cluster-level latent vectors:
CDM through negative Euclidean distances from a global intercept, CBM
through a bilinear form added to it. Edge probabilities are Phi(eta).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr


@dataclass(frozen=True)
class CM:
    """Class model: unconstrained symmetric block parameter matrix."""

    tag = "cm"


@dataclass(frozen=True)
class CDM:
    """Class-distance model: eta_{k,l} = eta - ||u_k - u_l||."""

    Q: int = 4
    tag = "cdm"

    def __post_init__(self):
        if int(self.Q) != self.Q or self.Q < 1:
            raise ValueError("CDM requires integer Q >= 1")
        object.__setattr__(self, "Q", int(self.Q))


@dataclass(frozen=True)
class CBM:
    """Class-bilinear model: eta_{k,l} = eta + u_k . u_l."""

    Q: int = 4
    tag = "cbm"

    def __post_init__(self):
        if int(self.Q) != self.Q or self.Q < 1:
            raise ValueError("CBM requires integer Q >= 1")
        object.__setattr__(self, "Q", int(self.Q))


MODEL_KINDS = {"cm": CM, "cdm": CDM, "cbm": CBM}


@dataclass
class CmState:
    """Sampler state for CM: block matrix plus its Gaussian hyperparameters."""

    eta_block: np.ndarray
    zeta: float
    tau2: float

    def __post_init__(self):
        e = np.asarray(self.eta_block, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("eta_block must be square")
        if not np.allclose(e, e.T):
            raise ValueError("eta_block must be symmetric")
        if not self.tau2 > 0:
            raise ValueError("tau2 must be positive")
        self.eta_block = e

    @property
    def K(self):
        return self.eta_block.shape[0]

    def copy(self):
        return CmState(self.eta_block.copy(), self.zeta, self.tau2)


@dataclass
class HybridState:
    """Sampler state for CDM/CBM: latent positions, intercept, variances.

    tau2 is the variance of the intercept's prior; it is itself updated
    under the hierarchical variant and held fixed under the fixed-variance
    variant.
    """

    U: np.ndarray
    eta: float
    sigma2: float
    tau2: float

    def __post_init__(self):
        u = np.asarray(self.U, dtype=np.float64)
        if u.ndim != 2:
            raise ValueError("U must be a K x Q matrix")
        if not self.sigma2 > 0 or not self.tau2 > 0:
            raise ValueError("sigma2 and tau2 must be positive")
        self.U = u

    @property
    def K(self):
        return self.U.shape[0]

    @property
    def Q(self):
        return self.U.shape[1]

    def copy(self):
        return HybridState(self.U.copy(), self.eta, self.sigma2, self.tau2)


@dataclass(frozen=True)
class BlockStats:
    """Upper-triangular success and total counts per cluster pair.

    s[k, l] counts edges among pairs with endpoint clusters {k, l} (k <= l);
    m[k, l] counts all such pairs. Entries below the diagonal are zero.
    """

    s: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.int64)
        m = np.asarray(self.m, dtype=np.int64)
        if s.shape != m.shape or s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("s and m must be square matrices of equal shape")
        if np.any(s < 0) or np.any(s > m):
            raise ValueError("need 0 <= s <= m cellwise")
        if np.any(np.tril(s, -1)) or np.any(np.tril(m, -1)):
            raise ValueError("s and m must be upper triangular")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "m", m)

    @property
    def K(self):
        return self.s.shape[0]


def block_stats(g, z):
    """Aggregate a network's edges into per-cluster-pair sufficient statistics.

    Pair (i, j) with i < j lands in cell (min(xi_i, xi_j), max(xi_i, xi_j)).
    """
    lab = z.zero_based() if hasattr(z, "zero_based") else np.asarray(z, dtype=np.int64) - 1
    if lab.size != g.n:
        raise ValueError("partition length must match the node count")
    K = int(lab.max()) + 1
    onehot = np.zeros((g.n, K), dtype=np.int64)
    onehot[np.arange(g.n), lab] = 1
    cross = onehot.T @ g.adj.astype(np.int64) @ onehot
    sizes = onehot.sum(axis=0)
    s = np.triu(cross, 1) + np.diag(np.diag(cross) // 2)
    m = np.triu(np.outer(sizes, sizes), 1) + np.diag(sizes * (sizes - 1) // 2)
    return BlockStats(s=s, m=m)


def probit(x):
    """Standard normal CDF, the link from block parameters to probabilities."""
    return ndtr(x)


def log_probit(x):
    """log Phi(x), stable deep into the lower tail."""
    return log_ndtr(x)


def log_one_minus_probit(x):
    """log(1 - Phi(x)) computed as log Phi(-x); stable in the upper tail."""
    return log_ndtr(np.negative(x))


def eta_matrix(kind, state):
    """Materialize the symmetric K x K block parameter matrix for a model."""
    if isinstance(kind, CM):
        if not isinstance(state, CmState):
            raise TypeError("CM needs a CmState")
        return state.eta_block
    if isinstance(kind, (CDM, CBM)):
        if not isinstance(state, HybridState):
            raise TypeError(f"{kind.tag} needs a HybridState")
        if state.Q != kind.Q:
            raise ValueError(f"state has Q={state.Q}, kind expects Q={kind.Q}")
        U = state.U
        if isinstance(kind, CDM):
            diff = U[:, None, :] - U[None, :, :]
            return state.eta - np.sqrt((diff * diff).sum(axis=-1))
        return state.eta + U @ U.T
    raise TypeError(f"not a model kind: {kind!r}")


def log_likelihood(stats, etas):
    """Block-Binomial log-likelihood summed over cluster pairs k <= l."""
    etas = np.asarray(etas, dtype=np.float64)
    if etas.shape != stats.s.shape:
        raise ValueError("eta matrix dimension mismatch")
    iu = np.triu_indices(stats.K)
    s = stats.s[iu]
    m = stats.m[iu]
    e = etas[iu]
    return float(np.sum(s * log_ndtr(e) + (m - s) * log_ndtr(-e)))


def edge_prob_matrix(kind, state, z):
    """Per-pair edge probabilities Phi(eta_{xi_i, xi_j}); zero diagonal."""
    lab = z.zero_based() if hasattr(z, "zero_based") else np.asarray(z, dtype=np.int64) - 1
    etas = eta_matrix(kind, state)
    if int(lab.max()) + 1 > etas.shape[0]:
        raise ValueError("partition refers to clusters beyond the state dimension")
    P = ndtr(etas)[np.ix_(lab, lab)]
    np.fill_diagonal(P, 0.0)
    return P

"""MCMC engine: Gibbs and Metropolis kernels plus the chain driver.

One sweep updates the block parameters (CM: every eta cell by random-walk
Metropolis, then zeta and tau2 by conjugate Gibbs; hybrids: each latent
position by Metropolis, then the global intercept, then sigma2 and the
intercept variance) and then reassigns every node in turn. Nonparametric
priors use an auxiliary-variable scheme with a single auxiliary cluster
per node update; a node sitting in a singleton reuses its own parameters
as the auxiliary candidate instead of drawing fresh ones. The DM prior
keeps a fixed number of slots and an explicit weight vector omega,
redrawn from its Dirichlet full conditional after each sweep.

The chain maintains full-symmetric success/total matrices (diagonal =
within-cluster counts, off-diagonal mirrored) updated incrementally on
every move, birth, and death; tests compare them against from-scratch
recomputation.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .blockmodels import CBM, CDM, CM, BlockStats, CmState, HybridState, block_stats, eta_matrix
from .graph import Network
from .partition import Partition
from .priors import DM, DP, GNP, PYP

LOG_2PI = math.log(2.0 * math.pi)


class NumericalFailure(RuntimeError):
    """Raised when every candidate weight for a node underflows to zero."""

    def __init__(self, node, message=None):
        self.node = int(node)
        super().__init__(message or f"assignment weights underflowed at node {node}")


@dataclass(frozen=True)
class Hyper:
    """Fixed hyperparameters of the Gaussian and inverse-gamma layers."""

    mu_zeta: float = 0.0
    s2_zeta: float = 3.0
    a_tau: float = 3.0
    b_tau: float = 2.0
    a_sigma: float = 3.0
    b_sigma: float = 2.0

    def __post_init__(self):
        for name in ("s2_zeta", "a_tau", "b_tau", "a_sigma", "b_sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ChainConfig:
    """Chain length, step sizes, hyperparameters, and reproducibility knobs.

    init_K of None means the initial cluster count is elicited from the
    network's mean degree. literal_new_cluster_factor is a debug switch
    that multiplies the new-cluster candidate weight by the prior density
    of its freshly drawn parameters instead of cancelling it.
    """

    burn_in: int = 10000
    n_samples: int = 2000
    thin: int = 10
    seed: int = 0
    mh_step_eta: float = 0.5
    mh_step_u: float = 0.5
    adapt: bool = True
    hyper: Hyper = field(default_factory=Hyper)
    init_K: int | None = None
    random_scan: bool = False
    fixed_eta_variance: bool = False
    literal_new_cluster_factor: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.n_samples < 0:
            raise ValueError("burn_in and n_samples must be nonnegative")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.mh_step_eta > 0 and self.mh_step_u > 0):
            raise ValueError("step sizes must be positive")
        if self.init_K is not None and self.init_K < 1:
            raise ValueError("init_K must be >= 1")


@dataclass(frozen=True)
class DmWeights:
    """Explicit cluster probabilities omega under the DM prior."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=np.float64)
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-8:
            raise ValueError("omega must be a probability vector")
        object.__setattr__(self, "omega", w)


@dataclass
class PosteriorSamples:
    """Retained draws plus the context needed to evaluate them.

    labels are canonical 1..K* vectors; eta_blocks are the matching K*xK*
    block matrices; cell_loglik holds each draw's per-cell Binomial
    log-likelihood terms (flat upper triangle) for information criteria.
    """

    labels: list
    eta_blocks: list
    k_star: np.ndarray
    loglik: np.ndarray
    cell_loglik: list
    trace: dict
    config: ChainConfig
    kind: object
    prior: object
    network: Network

    @property
    def n_draws(self):
        return len(self.labels)

    def partitions(self):
        return [Partition(lab) for lab in self.labels]


def _log_binom_terms(e, s, m):
    """s*log Phi(e) + (m-s)*log(1-Phi(e)), elementwise and tail-stable."""
    return s * log_ndtr(e) + (m - s) * log_ndtr(np.negative(e))


def _inv_gamma(rng, shape, rate):
    return rate / rng.gamma(shape)


def _normal_logpdf_sum(x, mean, var):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return float(-0.5 * (x.size * (LOG_2PI + math.log(var)) + ((x - mean) ** 2).sum() / var))


def update_eta_block(state, stats, rng, step):
    """Random-walk Metropolis on every block cell at once (CM only).

    Cells are conditionally independent given zeta and tau2, so a joint
    pass with independent accept/reject per cell is a valid kernel. Cells
    with no pairs still move, against the prior alone.
    Returns (state, accepted count, proposed count).
    """
    K = state.K
    iu = np.triu_indices(K)
    e = state.eta_block[iu]
    s = stats.s[iu].astype(np.float64)
    m = stats.m[iu].astype(np.float64)
    prop = e + step * rng.standard_normal(e.size)
    delta = (
        _log_binom_terms(prop, s, m)
        - _log_binom_terms(e, s, m)
        - ((prop - state.zeta) ** 2 - (e - state.zeta) ** 2) / (2.0 * state.tau2)
    )
    acc = np.log(rng.random(e.size)) < delta
    kept = np.where(acc, prop, e)
    new = np.zeros((K, K))
    new[iu] = kept
    state.eta_block = new + np.triu(new, 1).T
    return state, int(acc.sum()), int(acc.size)


def update_zeta(state, rng, hyper=Hyper()):
    """Conjugate Gibbs draw of the block-parameter mean (CM only)."""
    K = state.K
    M = K * (K + 1) / 2.0
    total = state.eta_block[np.triu_indices(K)].sum()
    v2 = 1.0 / (1.0 / hyper.s2_zeta + M / state.tau2)
    mean = v2 * (hyper.mu_zeta / hyper.s2_zeta + total / state.tau2)
    state.zeta = mean + math.sqrt(v2) * rng.standard_normal()
    return state


def update_tau2_cm(state, rng, hyper=Hyper()):
    """Conjugate inverse-gamma draw of the block-parameter variance (CM only)."""
    K = state.K
    resid = state.eta_block[np.triu_indices(K)] - state.zeta
    c = hyper.a_tau + K * (K + 1) / 4.0
    d = hyper.b_tau + 0.5 * float(resid @ resid)
    state.tau2 = _inv_gamma(rng, c, d)
    return state


def _full_sym(stats):
    # mirror upper-triangular stats; diagonal stays the within-cluster count
    s = stats.s + np.triu(stats.s, 1).T
    m = stats.m + np.triu(stats.m, 1).T
    return s, m


def _eta_row(kind, state, u, k):
    """Block-parameter row for latent position u occupying slot k."""
    if isinstance(kind, CDM):
        row = state.eta - np.sqrt(((state.U - u) ** 2).sum(axis=1))
        row[k] = state.eta
    else:
        row = state.eta + state.U @ u
        row[k] = state.eta + float(u @ u)
    return row


def _eta_row_new(kind, state, u):
    """Block-parameter row of a brand-new cluster at u against existing ones."""
    if isinstance(kind, CDM):
        return state.eta - np.sqrt(((state.U - u) ** 2).sum(axis=1))
    return state.eta + state.U @ u


def update_latent_positions(state, kind, g, z, rng, step, stats_full=None):
    """Sequential random-walk Metropolis over the latent position rows.

    Each row's target is the Bernoulli log-likelihood of the pairs incident
    to its cluster plus the Gaussian prior. stats_full, when given, is the
    (s, m) full-symmetric pair and g/z may then be None.
    Returns (state, accepted count, proposed count).
    """
    if stats_full is None:
        stats_full = _full_sym(block_stats(g, z))
    s, m = stats_full
    accepted = 0
    for k in range(state.K):
        u = state.U[k].copy()
        prop = u + step * rng.standard_normal(state.Q)
        cur = _eta_row(kind, state, u, k)
        new = _eta_row(kind, state, prop, k)
        sk = s[k].astype(np.float64)
        mk = m[k].astype(np.float64)
        dlik = float(np.sum(_log_binom_terms(new, sk, mk) - _log_binom_terms(cur, sk, mk)))
        dpri = -(float(prop @ prop) - float(u @ u)) / (2.0 * state.sigma2)
        if math.log(rng.random()) < dlik + dpri:
            state.U[k] = prop
            accepted += 1
    return state, accepted, state.K


def update_global_eta(state, kind, stats, rng, step):
    """Random-walk Metropolis on the intercept; shifts every block cell."""
    iu = np.triu_indices(state.K)
    e = eta_matrix(kind, state)[iu]
    s = stats.s[iu].astype(np.float64)
    m = stats.m[iu].astype(np.float64)
    shift = step * rng.standard_normal()
    eta_new = state.eta + shift
    dlik = float(np.sum(_log_binom_terms(e + shift, s, m) - _log_binom_terms(e, s, m)))
    dpri = -(eta_new**2 - state.eta**2) / (2.0 * state.tau2)
    acc = math.log(rng.random()) < dlik + dpri
    if acc:
        state.eta = eta_new
    return state, int(acc), 1


def update_sigma2(state, rng, hyper=Hyper()):
    """Conjugate inverse-gamma draw of the latent-position variance."""
    c = hyper.a_sigma + state.K * state.Q / 2.0
    d = hyper.b_sigma + 0.5 * float((state.U * state.U).sum())
    state.sigma2 = _inv_gamma(rng, c, d)
    return state


def update_eta_variance(state, rng, hyper=Hyper()):
    """Conjugate inverse-gamma draw of the intercept's prior variance."""
    c = hyper.a_tau + 0.5
    d = hyper.b_tau + 0.5 * state.eta**2
    state.tau2 = _inv_gamma(rng, c, d)
    return state


def _canonical_map(labels0):
    """0-based slot labels -> (1-based canonical labels, occupied slots in order)."""
    slots, first, inv = np.unique(labels0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty(slots.size, dtype=np.int64)
    rank[order] = np.arange(slots.size)
    return (rank[inv] + 1).astype(np.int64), slots[order]


class Chain:
    """Single-owner MCMC chain over (labels, block parameters, hyperparameters).

    Never share an instance across threads; clone the config and build a
    second chain instead.
    """

    def __init__(self, kind, g, prior, cfg, rng=None):
        self.kind = kind
        self.prior = prior
        self.cfg = cfg
        self.hyper = cfg.hyper
        self.is_dm = isinstance(prior, DM)
        self.rng = np.random.default_rng(cfg.seed) if rng is None else rng
        self.step_eta = cfg.mh_step_eta
        self.step_u = cfg.mh_step_u
        self.acc_eta = self.prop_eta = self.acc_u = self.prop_u = 0
        self.win_acc_eta = self.win_prop_eta = self.win_acc_u = self.win_prop_u = 0
        self._set_network_arrays(g)
        self._init_labels()
        self._init_params()
        self._rebuild_stats()
        self._refresh_cache()

    # ---- construction and bookkeeping -------------------------------------

    def _set_network_arrays(self, g):
        self.g = g
        self.A = g.adj.astype(np.int64)
        self.nbrs = [np.flatnonzero(self.A[i]) for i in range(g.n)]

    def _init_labels(self):
        n = self.g.n
        if self.cfg.init_K is not None:
            k0 = min(self.cfg.init_K, n)
        else:
            db = self.g.mean_degree()
            k0 = n if db == 0 else min(max(int(n // db), 1), n)
        if self.is_dm:
            k0 = min(k0, self.prior.K)
        labels = self.rng.integers(0, k0, size=n)
        if self.is_dm:
            self.labels = labels.astype(np.int64)
            self.K_slots = self.prior.K
        else:
            # nonparametric state tracks occupied clusters only
            _, inv = np.unique(labels, return_inverse=True)
            self.labels = inv.astype(np.int64)
            self.K_slots = int(inv.max()) + 1

    def _init_params(self):
        h, rng, K = self.hyper, self.rng, self.K_slots
        if isinstance(self.kind, CM):
            tau2 = _inv_gamma(rng, h.a_tau, h.b_tau)
            zeta = h.mu_zeta + math.sqrt(h.s2_zeta) * rng.standard_normal()
            iu = np.triu_indices(K)
            e = np.zeros((K, K))
            e[iu] = zeta + math.sqrt(tau2) * rng.standard_normal(iu[0].size)
            self.state = CmState(eta_block=e + np.triu(e, 1).T, zeta=zeta, tau2=tau2)
        else:
            sigma2 = _inv_gamma(rng, h.a_sigma, h.b_sigma)
            tau2 = 3.0 if self.cfg.fixed_eta_variance else _inv_gamma(rng, h.a_tau, h.b_tau)
            eta = math.sqrt(tau2) * rng.standard_normal()
            U = math.sqrt(sigma2) * rng.standard_normal((K, self.kind.Q))
            self.state = HybridState(U=U, eta=eta, sigma2=sigma2, tau2=tau2)
        if self.is_dm:
            self.omega = rng.dirichlet(np.full(self.prior.K, self.prior.alpha / self.prior.K))

    def _rebuild_stats(self):
        n, K = self.g.n, self.K_slots
        onehot = np.zeros((n, K), dtype=np.int64)
        onehot[np.arange(n), self.labels] = 1
        self.counts = onehot.sum(axis=0)
        self.R = self.A @ onehot
        cross = onehot.T @ self.A @ onehot
        s = cross.copy()
        np.fill_diagonal(s, np.diag(cross) // 2)
        m = np.outer(self.counts, self.counts)
        np.fill_diagonal(m, self.counts * (self.counts - 1) // 2)
        self.s, self.m = s, m

    def _refresh_cache(self):
        self.E = np.asarray(eta_matrix(self.kind, self.state), dtype=np.float64)
        self.LP = log_ndtr(self.E)
        self.LM = log_ndtr(-self.E)

    def _stats_ut(self):
        return BlockStats(s=np.triu(self.s), m=np.triu(self.m))

    def set_network(self, g):
        """Swap the observed network, keeping parameters and labels."""
        if g.n != self.labels.size:
            raise ValueError("replacement network must have the same node count")
        self._set_network_arrays(g)
        self._rebuild_stats()

    def resample_network(self):
        """Redraw every edge from the current edge probabilities.

        Turns the chain into a sampler of the joint (parameters, data) law,
        which is what joint-distribution validation drives.
        """
        P = ndtr(self.E)[np.ix_(self.labels, self.labels)]
        n = self.g.n
        iu = np.triu_indices(n, 1)
        draw = self.rng.random(iu[0].size) < P[iu]
        adj = np.zeros((n, n), dtype=bool)
        adj[iu] = draw
        self.set_network(Network(adj | adj.T))

    def load(self, z, state, omega=None):
        """Overwrite assignments and parameters, then rebuild derived arrays."""
        lab = z.zero_based() if hasattr(z, "zero_based") else np.asarray(z, dtype=np.int64) - 1
        if lab.size != self.g.n:
            raise ValueError("label vector length must match the node count")
        self.labels = lab.astype(np.int64).copy()
        self.state = state
        self.K_slots = state.K
        if self.is_dm:
            if state.K != self.prior.K:
                raise ValueError("DM state dimension must equal the prior's K")
            if omega is None:
                post = self.prior.alpha / self.prior.K + np.bincount(lab, minlength=self.prior.K)
                omega = self.rng.dirichlet(post)
            self.omega = np.asarray(omega, dtype=np.float64)
        else:
            if np.unique(lab).size != state.K or int(lab.max()) + 1 != state.K:
                raise ValueError("labels must occupy exactly the state's K clusters")
        self._rebuild_stats()
        self._refresh_cache()

    # ---- derived quantities ------------------------------------------------

    @property
    def k_star(self):
        return int(np.count_nonzero(self.counts)) if self.is_dm else self.K_slots

    def partition(self):
        lab1, _ = _canonical_map(self.labels)
        return Partition(lab1)

    @property
    def dm_weights(self):
        return DmWeights(self.omega.copy()) if self.is_dm else None

    def loglik(self):
        iu = np.triu_indices(self.K_slots)
        s = self.s[iu]
        m = self.m[iu]
        return float(np.sum(s * self.LP[iu] + (m - s) * self.LM[iu]))

    def accept_rates(self):
        out = {}
        out["eta"] = self.acc_eta / self.prop_eta if self.prop_eta else math.nan
        out["u"] = self.acc_u / self.prop_u if self.prop_u else math.nan
        return out

    # ---- kernels -----------------------------------------------------------

    def sweep(self):
        """One full MCMC iteration: parameter kernels, then assignments."""
        h = self.hyper
        if isinstance(self.kind, CM):
            _, a, p = update_eta_block(self.state, self._stats_ut(), self.rng, self.step_eta)
            self.acc_eta += a
            self.prop_eta += p
            self.win_acc_eta += a
            self.win_prop_eta += p
            update_zeta(self.state, self.rng, h)
            update_tau2_cm(self.state, self.rng, h)
        else:
            _, a, p = update_latent_positions(
                self.state, self.kind, None, None, self.rng, self.step_u,
                stats_full=(self.s, self.m),
            )
            self.acc_u += a
            self.prop_u += p
            self.win_acc_u += a
            self.win_prop_u += p
            _, a, p = update_global_eta(
                self.state, self.kind, self._stats_ut(), self.rng, self.step_eta
            )
            self.acc_eta += a
            self.prop_eta += p
            self.win_acc_eta += a
            self.win_prop_eta += p
            update_sigma2(self.state, self.rng, h)
            if not self.cfg.fixed_eta_variance:
                update_eta_variance(self.state, self.rng, h)
        self._refresh_cache()
        self.update_assignments()

    def adapt_steps(self):
        """Multiplicative step tuning toward acceptance rates in [0.30, 0.45]."""
        if self.win_prop_eta:
            rate = self.win_acc_eta / self.win_prop_eta
            if rate < 0.30:
                self.step_eta *= 0.9
            elif rate > 0.45:
                self.step_eta *= 1.1
        if self.win_prop_u:
            rate = self.win_acc_u / self.win_prop_u
            if rate < 0.30:
                self.step_u *= 0.9
            elif rate > 0.45:
                self.step_u *= 1.1
        self.win_acc_eta = self.win_prop_eta = 0
        self.win_acc_u = self.win_prop_u = 0

    def update_assignments(self):
        """Reassign every node; returns (partition, state, K*)."""
        n = self.g.n
        order = self.rng.permutation(n) if self.cfg.random_scan else range(n)
        for i in order:
            if self.is_dm:
                self._update_node_dm(int(i))
            else:
                self._update_node_np(int(i))
        if self.is_dm:
            post = self.prior.alpha / self.prior.K + self.counts
            self.omega = self.rng.dirichlet(post)
        return self.partition(), self.state, self.k_star

    def _pick(self, logits, i):
        mx = logits.max()
        if not np.isfinite(mx):
            raise NumericalFailure(i)
        p = np.exp(logits - mx)
        c = np.cumsum(p)
        if not (c[-1] > 0 and np.isfinite(c[-1])):
            raise NumericalFailure(i)
        b = int(np.searchsorted(c, self.rng.random() * c[-1], side="right"))
        return min(b, logits.size - 1)

    def _update_node_dm(self, i):
        a = int(self.labels[i])
        r = self.R[i]
        cnt = self.counts.copy()
        cnt[a] -= 1
        base = self.LP @ r + self.LM @ (cnt - r)
        with np.errstate(divide="ignore"):
            logits = base + np.log(self.omega)
        b = self._pick(logits, i)
        if b != a:
            self._move(i, a, b, r, cnt)

    def _prior_logw(self, cnt_cand, k_occ, new_idx):
        """Log allocation weights per candidate slot; new_idx gets the new-cluster weight."""
        p = self.prior
        n_excl = self.g.n - 1
        w = np.full(cnt_cand.size, -np.inf)
        occ = cnt_cand > 0
        c = cnt_cand[occ].astype(np.float64)
        if isinstance(p, DP):
            w[occ] = np.log(c)
            new_w = math.log(p.alpha)
        elif isinstance(p, PYP):
            w[occ] = np.log(c - p.sigma)
            new_w = math.log(k_occ * p.sigma + p.alpha)
        elif isinstance(p, GNP):
            w[occ] = np.log((c + 1.0) * (n_excl - k_occ + p.gamma))
            new_w = math.log(k_occ * (k_occ - p.gamma))
        else:
            raise TypeError(f"no sequential allocation rule for {p!r}")
        w[new_idx] = new_w
        return w

    def _update_node_np(self, i):
        a = int(self.labels[i])
        r = self.R[i]
        cnt = self.counts.copy()
        cnt[a] -= 1
        K = self.K_slots

        if cnt[a] == 0:
            # singleton: its own parameters serve as the new-cluster candidate
            base = self.LP @ r + self.LM @ (cnt - r)
            w = self._prior_logw(cnt, K - 1, new_idx=a)
            if self.cfg.literal_new_cluster_factor:
                w[a] += self._slot_prior_logpdf(a)
            b = self._pick(base + w, i)
            if b == a:
                return
            self._move(i, a, b, r, cnt)
            self._kill_slot(a)
            return

        # occupied elsewhere: draw one auxiliary cluster from the prior
        aux_params, aux_lp, aux_lm, aux_logpdf = self._draw_aux()
        base = np.append(self.LP @ r + self.LM @ (cnt - r), aux_lp @ r + aux_lm @ (cnt - r))
        w = self._prior_logw(np.append(cnt, 0), K, new_idx=K)
        if self.cfg.literal_new_cluster_factor:
            w[K] += aux_logpdf
        b = self._pick(base + w, i)
        if b == K:
            self._birth(i, a, r, cnt, aux_params)
        elif b != a:
            self._move(i, a, b, r, cnt)

    def _draw_aux(self):
        """Fresh prior draw of one cluster's parameters plus its likelihood rows."""
        K = self.K_slots
        if isinstance(self.kind, CM):
            row = self.state.zeta + math.sqrt(self.state.tau2) * self.rng.standard_normal(K + 1)
            lp, lm = log_ndtr(row[:K]), log_ndtr(-row[:K])
            logpdf = _normal_logpdf_sum(row, self.state.zeta, self.state.tau2)
            return row, lp, lm, logpdf
        u = math.sqrt(self.state.sigma2) * self.rng.standard_normal(self.kind.Q)
        erow = _eta_row_new(self.kind, self.state, u)
        logpdf = _normal_logpdf_sum(u, 0.0, self.state.sigma2)
        return u, log_ndtr(erow), log_ndtr(-erow), logpdf

    def _slot_prior_logpdf(self, k):
        if isinstance(self.kind, CM):
            return _normal_logpdf_sum(self.state.eta_block[k], self.state.zeta, self.state.tau2)
        return _normal_logpdf_sum(self.state.U[k], 0.0, self.state.sigma2)

    def _move(self, i, a, b, r, cnt):
        """Relocate node i from slot a to slot b; cnt excludes i throughout."""
        s, m = self.s, self.m
        # row+col updates double-hit the diagonal, hence the compensations
        s[a, :] -= r
        s[:, a] -= r
        s[a, a] += r[a]
        m[a, :] -= cnt
        m[:, a] -= cnt
        m[a, a] += cnt[a]
        s[b, :] += r
        s[:, b] += r
        s[b, b] -= r[b]
        m[b, :] += cnt
        m[:, b] += cnt
        m[b, b] -= cnt[b]
        nb = self.nbrs[i]
        self.R[nb, a] -= 1
        self.R[nb, b] += 1
        self.counts[a] -= 1
        self.counts[b] += 1
        self.labels[i] = b

    def _birth(self, i, a, r, cnt, params):
        """Append the auxiliary cluster as slot K, then move node i into it."""
        K = self.K_slots
        n = self.g.n
        if isinstance(self.kind, CM):
            e = np.zeros((K + 1, K + 1))
            e[:K, :K] = self.state.eta_block
            e[K, :] = params
            e[:K, K] = params[:K]
            self.state.eta_block = e
        else:
            self.state.U = np.vstack([self.state.U, params])
        self.counts = np.append(self.counts, 0)
        self.R = np.hstack([self.R, np.zeros((n, 1), dtype=np.int64)])
        self.s = np.pad(self.s, ((0, 1), (0, 1)))
        self.m = np.pad(self.m, ((0, 1), (0, 1)))
        self.K_slots = K + 1
        self._move(i, a, K, np.append(r, 0), np.append(cnt, 0))
        self._refresh_cache()

    def _kill_slot(self, a):
        """Remove the now-empty slot a and compact labels above it."""
        self.counts = np.delete(self.counts, a)
        self.R = np.delete(self.R, a, axis=1)
        self.s = np.delete(np.delete(self.s, a, 0), a, 1)
        self.m = np.delete(np.delete(self.m, a, 0), a, 1)
        self.labels[self.labels > a] -= 1
        if isinstance(self.kind, CM):
            self.state.eta_block = np.delete(np.delete(self.state.eta_block, a, 0), a, 1)
        else:
            self.state.U = np.delete(self.state.U, a, axis=0)
        self.K_slots -= 1
        self._refresh_cache()

    # ---- retention ----------------------------------------------------------

    def retain(self):
        """Canonical snapshot: (labels, eta block, K*, loglik, cell terms)."""
        lab1, slots = _canonical_map(self.labels)
        sub = np.ix_(slots, slots)
        eta_c = self.E[sub].copy()
        iu = np.triu_indices(slots.size)
        s_c = self.s[sub][iu]
        m_c = self.m[sub][iu]
        cell = s_c * self.LP[sub][iu] + (m_c - s_c) * self.LM[sub][iu]
        return lab1, eta_c, slots.size, float(cell.sum()), cell


def update_assignments(kind, state, g, z, prior, rng, omega=None,
                       literal_new_cluster_factor=False):
    """One assignment pass over all nodes; returns (z', state', K*').

    For the DM prior, omega defaults to a fresh draw from its full
    conditional given z.
    """
    cfg = ChainConfig(burn_in=0, n_samples=0,
                      literal_new_cluster_factor=literal_new_cluster_factor)
    chain = Chain(kind, g, prior, cfg)
    chain.rng = rng
    chain.load(z, state, omega=omega)
    return chain.update_assignments()


def run_chain(kind, g, prior, cfg):
    """Burn in, then retain every thin-th sweep until n_samples draws."""
    chain = Chain(kind, g, prior, cfg)
    for t in range(cfg.burn_in):
        chain.sweep()
        if cfg.adapt and (t + 1) % 100 == 0:
            chain.adapt_steps()

    labels, etas, cells = [], [], []
    kstars, logliks = [], []
    trace = {k: [] for k in ("iter", "k_star", "loglik", "accept_eta", "accept_u")}
    it = cfg.burn_in
    for _ in range(cfg.n_samples):
        ae, pe, au, pu = chain.acc_eta, chain.prop_eta, chain.acc_u, chain.prop_u
        for _ in range(cfg.thin):
            chain.sweep()
        it += cfg.thin
        lab1, eta_c, k, ll, cell = chain.retain()
        labels.append(lab1)
        etas.append(eta_c)
        kstars.append(k)
        logliks.append(ll)
        cells.append(cell)
        de, du = chain.prop_eta - pe, chain.prop_u - pu
        trace["iter"].append(it)
        trace["k_star"].append(k)
        trace["loglik"].append(ll)
        trace["accept_eta"].append((chain.acc_eta - ae) / de if de else math.nan)
        trace["accept_u"].append((chain.acc_u - au) / du if du else math.nan)

    trace = {k: np.asarray(v) for k, v in trace.items()}
    return PosteriorSamples(
        labels=labels, eta_blocks=etas, k_star=np.asarray(kstars, dtype=np.int64),
        loglik=np.asarray(logliks), cell_loglik=cells, trace=trace,
        config=cfg, kind=kind, prior=prior, network=g,
    )


def cell_terms(g, labels, eta_block):
    """Per-cell log-likelihood terms of one draw, flat upper triangle.

    Matches the layout retained during sampling, so checkpointed draws can
    be reloaded without storing the terms themselves.
    """
    st = block_stats(g, labels)
    iu = np.triu_indices(st.K)
    s = st.s[iu]
    m = st.m[iu]
    e = np.asarray(eta_block, dtype=np.float64)[iu]
    return s * log_ndtr(e) + (m - s) * log_ndtr(-e)


def save_checkpoints(samples, path):
    """One JSON record per draw: iter, K*, labels, flat upper-tri eta, loglik."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for b in range(samples.n_draws):
            k = int(samples.k_star[b])
            rec = {
                "iter": int(samples.trace["iter"][b]),
                "k_star": k,
                "labels": [int(v) for v in samples.labels[b]],
                "eta": [float(v) for v in samples.eta_blocks[b][np.triu_indices(k)]],
                "loglik": float(samples.loglik[b]),
            }
            fh.write(json.dumps(rec) + "\n")


def load_checkpoints(path):
    """Read save_checkpoints output; returns (labels, etas, k_star, loglik, iters)."""
    labels, etas, kstars, logliks, iters = [], [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            k = int(rec["k_star"])
            e = np.zeros((k, k))
            e[np.triu_indices(k)] = np.asarray(rec["eta"], dtype=np.float64)
            labels.append(np.asarray(rec["labels"], dtype=np.int64))
            etas.append(e + np.triu(e, 1).T)
            kstars.append(k)
            logliks.append(float(rec["loglik"]))
            iters.append(int(rec["iter"]))
    return (labels, etas, np.asarray(kstars, dtype=np.int64),
            np.asarray(logliks), np.asarray(iters, dtype=np.int64))


def save_trace(samples, path):
    """Per-draw trace CSV: iter, K*, loglik, windowed acceptance rates."""
    t = samples.trace
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,k_star,loglik,accept_eta,accept_u\n")
        for b in range(len(t["iter"])):
            fh.write(
                f"{int(t['iter'][b])},{int(t['k_star'][b])},{float(t['loglik'][b])!r},"
                f"{float(t['accept_eta'][b])!r},{float(t['accept_u'][b])!r}\n"
            )

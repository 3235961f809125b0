"""Posterior summaries, predictive metrics, WAIC, and predictive checks."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr
from scipy.stats import rankdata

from .graph import STAT_NAMES, Network, network_stats
from .partition import (
    Partition,
    ari,
    credible_ball_radius,
    fdr_fnr,
    nearest_rank,
    point_estimate,
    vi_distance,
)

PROB_EPS = 1e-12


@dataclass(frozen=True)
class FitReport:
    """One fitted model's evaluation row.

    The truth-relative fields (vi_to_truth, ari, fdr, fnr) are None unless
    a ground-truth partition was supplied.
    """

    vi_to_truth: float | None
    vi_ball_radius: float
    H_median: int
    H_iqr: tuple
    ari: float | None
    fdr: float | None
    fnr: float | None
    waic: float
    auc: float
    mse: float
    logloss: float

    def as_dict(self):
        return {
            "vi_to_truth": self.vi_to_truth,
            "vi_ball_radius": self.vi_ball_radius,
            "H_median": self.H_median,
            "H_q25": self.H_iqr[0],
            "H_q75": self.H_iqr[1],
            "ari": self.ari,
            "fdr": self.fdr,
            "fnr": self.fnr,
            "waic": self.waic,
            "auc": self.auc,
            "mse": self.mse,
            "logloss": self.logloss,
        }


@dataclass(frozen=True)
class PpcEntry:
    observed: float
    median: float
    lo95: float
    hi95: float
    lo99: float
    hi99: float
    dropped: int


@dataclass(frozen=True)
class PpcReport:
    """Posterior predictive check results per network statistic.

    entries maps statistic name to its summary; replicates keeps the raw
    per-replicate values (NaN where a statistic was undefined on a
    simulated network) for external plotting.
    """

    entries: dict
    replicates: dict
    n_replicates: int

    def as_dict(self):
        return {
            name: {
                "observed": e.observed,
                "median": e.median,
                "lo95": e.lo95,
                "hi95": e.hi95,
                "lo99": e.lo99,
                "hi99": e.hi99,
                "dropped": e.dropped,
            }
            for name, e in self.entries.items()
        }


def _draw_edge_probs(labels1, eta_block, n):
    lab0 = np.asarray(labels1, dtype=np.int64) - 1
    if lab0.size != n:
        raise ValueError("draw labels do not match the network size")
    P = ndtr(eta_block)[np.ix_(lab0, lab0)]
    np.fill_diagonal(P, 0.0)
    return P


def posterior_edge_probs(samples):
    """Posterior mean edge probability matrix, averaged over retained draws."""
    if samples.n_draws == 0:
        raise ValueError("no retained draws")
    n = samples.network.n
    acc = np.zeros((n, n))
    for lab, eta in zip(samples.labels, samples.eta_blocks):
        acc += _draw_edge_probs(lab, eta, n)
    return acc / samples.n_draws


def predictive_metrics(P, g):
    """In-sample (AUC, MSE, log-loss) of an edge probability matrix.

    Probabilities are clamped away from 0 and 1 first. AUC counts ties as
    one half (the Mann-Whitney convention) and is NaN when the network has
    no edges or no non-edges.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.shape != (g.n, g.n):
        raise ValueError("probability matrix must be n x n")
    iu = np.triu_indices(g.n, 1)
    p = np.clip(P[iu], PROB_EPS, 1.0 - PROB_EPS)
    y = g.adj[iu].astype(np.float64)
    mse = float(np.mean((y - p) ** 2))
    logloss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return math.nan, mse, logloss
    ranks = rankdata(p)
    auc = float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
    return auc, mse, logloss


def waic(samples):
    """Widely applicable information criterion over unordered node pairs.

    Per pair: lppd contribution log mean_b exp(l_b) minus the sample
    variance of l_b across draws, where l_b is the Bernoulli log-pmf of
    that pair under draw b. Streamed, so memory stays O(pairs).
    """
    B = samples.n_draws
    if B < 2:
        raise ValueError("WAIC needs at least 2 draws")
    g = samples.network
    iu = np.triu_indices(g.n, 1)
    y = g.adj[iu]
    li = None
    # online logsumexp (running max) and Welford variance per pair
    for b, (lab, eta) in enumerate(zip(samples.labels, samples.eta_blocks)):
        lab0 = np.asarray(lab, dtype=np.int64) - 1
        ep = eta[lab0[iu[0]], lab0[iu[1]]]
        lb = np.where(y, log_ndtr(ep), log_ndtr(-ep))
        if li is None:
            mx = lb.copy()
            sumexp = np.ones_like(lb)
            mean = lb.copy()
            m2 = np.zeros_like(lb)
            li = True
        else:
            new_mx = np.maximum(mx, lb)
            sumexp = sumexp * np.exp(mx - new_mx) + np.exp(lb - new_mx)
            mx = new_mx
            delta = lb - mean
            mean += delta / (b + 1)
            m2 += delta * (lb - mean)
    lppd = mx + np.log(sumexp) - math.log(B)
    p_waic = m2 / (B - 1)
    return float(-2.0 * np.sum(lppd - p_waic))


def ppc(samples, g, rng, draws_per_sample=1):
    """Simulate replicate networks from each draw and compare their statistics.

    Each replicate gets its own spawned RNG stream, so results do not
    depend on evaluation order. Undefined statistics on a replicate are
    dropped from that statistic's intervals, with the drop count reported.
    """
    if samples.n_draws == 0:
        raise ValueError("no retained draws")
    if draws_per_sample < 1:
        raise ValueError("draws_per_sample must be >= 1")
    n = g.n
    iu = np.triu_indices(n, 1)
    total = samples.n_draws * draws_per_sample
    streams = rng.spawn(total)
    values = {name: np.empty(total) for name in STAT_NAMES}
    idx = 0
    for lab, eta in zip(samples.labels, samples.eta_blocks):
        P = _draw_edge_probs(lab, eta, n)
        pu = P[iu]
        for _ in range(draws_per_sample):
            draw = streams[idx].random(pu.size) < pu
            adj = np.zeros((n, n), dtype=bool)
            adj[iu] = draw
            rep = network_stats(Network(adj | adj.T))
            for name, val in rep.as_dict().items():
                values[name][idx] = val
            idx += 1

    observed = network_stats(g).as_dict()
    entries = {}
    for name in STAT_NAMES:
        v = values[name]
        kept = v[~np.isnan(v)]
        dropped = int(v.size - kept.size)
        if kept.size == 0:
            entries[name] = PpcEntry(observed[name], math.nan, math.nan, math.nan,
                                     math.nan, math.nan, dropped)
            continue
        lo99, lo95, med, hi95, hi99 = np.quantile(
            kept, [0.005, 0.025, 0.5, 0.975, 0.995]
        )
        entries[name] = PpcEntry(observed[name], float(med), float(lo95), float(hi95),
                                 float(lo99), float(hi99), dropped)
    return PpcReport(entries=entries, replicates=values, n_replicates=total)


def cluster_count_summary(samples):
    """Median and (25th, 75th) percentiles of the per-draw cluster count.

    Lower-nearest-rank convention: the reported quantile is always one of
    the sampled values.
    """
    ks = samples.k_star if hasattr(samples, "k_star") else np.asarray(samples)
    if ks.size == 0:
        raise ValueError("no draws")
    srt = np.sort(ks)
    med = int(nearest_rank(srt, 0.5))
    return med, (int(nearest_rank(srt, 0.25)), int(nearest_rank(srt, 0.75)))


def fit_report(samples, truth=None, level=0.95):
    """Assemble the standard evaluation row for one fitted model."""
    parts = samples.partitions()
    center = point_estimate(parts)
    radius = credible_ball_radius(parts, center, level=level)
    h_med, h_iqr = cluster_count_summary(samples)
    P = posterior_edge_probs(samples)
    auc, mse, logloss = predictive_metrics(P, samples.network)
    w = waic(samples) if samples.n_draws >= 2 else math.nan

    vi_t = ari_t = fdr_t = fnr_t = None
    if truth is not None:
        truth = truth if isinstance(truth, Partition) else Partition(truth)
        vi_t = vi_distance(center, truth)
        ari_t = ari(center, truth)
        fdr_t, fnr_t = fdr_fnr(center, truth)
    return FitReport(
        vi_to_truth=vi_t, vi_ball_radius=radius, H_median=h_med, H_iqr=h_iqr,
        ari=ari_t, fdr=fdr_t, fnr=fnr_t, waic=w, auc=auc, mse=mse, logloss=logloss,
    )

"""Fit evaluation: WAIC, predictive metrics, posterior predictive checks."""

import math

import numpy as np
import pytest

import oracles
from blockforge import (
    CM,
    ChainConfig,
    DP,
    Network,
    Partition,
    cluster_count_summary,
    fit_report,
    generate,
    posterior_edge_probs,
    ppc,
    predictive_metrics,
    run_chain,
    waic,
)
from blockforge import ScenarioSpec
from blockforge.graph import STAT_NAMES, network_stats


def small_samples(seed=0, n=12, draws=30):
    rng = np.random.default_rng(seed)
    a = np.triu((rng.random((n, n)) < 0.35).astype(np.int64), 1)
    g = Network(a + a.T)
    cfg = ChainConfig(burn_in=80, n_samples=draws, thin=2, seed=seed)
    return g, run_chain(CM(), g, DP(alpha=1.0), cfg)


# ---- WAIC ---------------------------------------------------------------------


def test_waic_two_draw_example():
    # one pair with an edge; draws put probit(eta) at 0.5 and 0.25:
    # lppd = log((0.5+0.25)/2), p_waic = sample variance of the two
    # log-densities; known closed-form total
    g = Network.from_edges(2, [(0, 1)])
    eta_half = np.array([[0.0]])
    eta_quarter = np.array([[-0.6744897501960817]])  # probit^-1(0.25)
    s = run_chain(CM(), g, DP(alpha=1.0), ChainConfig(burn_in=5, n_samples=2, thin=1, seed=0))
    s.labels = [np.array([1, 1]), np.array([1, 1])]
    s.eta_blocks = [eta_half, eta_quarter]
    got = waic(s)
    lppd = math.log(0.375)
    lp = [math.log(0.5), math.log(0.25)]
    mu = (lp[0] + lp[1]) / 2
    p_w = (lp[0] - mu) ** 2 + (lp[1] - mu) ** 2  # ddof=1 over two draws
    want = -2.0 * (lppd - p_w)
    assert math.isclose(got, want, rel_tol=1e-12)
    assert math.isclose(got, 2.4421115199416538, rel_tol=1e-12)


def test_waic_matches_naive_oracle():
    g, s = small_samples(seed=1)
    pair_ll = oracles.pair_loglik_matrix(g.adj.astype(int), s.labels, s.eta_blocks)
    assert math.isclose(waic(s), oracles.waic_naive(pair_ll), rel_tol=1e-10)


def test_waic_needs_two_draws():
    g, s = small_samples(seed=2, draws=1)
    with pytest.raises(ValueError):
        waic(s)


# ---- edge probabilities and predictive metrics -----------------------------------


def test_posterior_edge_probs_average_the_draws():
    g, s = small_samples(seed=3, draws=10)
    P = posterior_edge_probs(s)
    want = np.mean([oracles.pairwise_edge_probs(lab, eta)
                    for lab, eta in zip(s.labels, s.eta_blocks)], axis=0)
    np.testing.assert_allclose(P, want, atol=1e-12)
    assert np.all(np.diag(P) == 0.0)
    np.testing.assert_allclose(P, P.T)


def test_predictive_metrics_match_oracles():
    rng = np.random.default_rng(8)
    n = 14
    a = np.triu((rng.random((n, n)) < 0.4).astype(np.int64), 1)
    g = Network(a + a.T)
    P = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    P[iu] = rng.random(iu[0].size)
    P = P + P.T
    auc, mse, logloss = predictive_metrics(P, g)
    p_flat = P[iu]
    y_flat = g.adj[iu].astype(int)
    mse_o, ll_o = oracles.mse_logloss_oracle(p_flat, y_flat)
    assert math.isclose(mse, mse_o, rel_tol=1e-12)
    assert math.isclose(logloss, ll_o, rel_tol=1e-12)
    assert math.isclose(auc, oracles.auc_oracle(p_flat, y_flat), rel_tol=1e-12)


def test_predictive_metrics_tie_handling():
    g = Network.from_edges(3, [(0, 1)])
    P = np.full((3, 3), 0.5)
    np.fill_diagonal(P, 0.0)
    assert predictive_metrics(P, g)[0] == 0.5  # all tied: chance


def test_auc_undefined_without_both_classes():
    g = Network(np.zeros((3, 3), dtype=int))
    P = np.full((3, 3), 0.2)
    np.fill_diagonal(P, 0.0)
    auc, _, logloss = predictive_metrics(P, g)
    assert math.isnan(auc)
    assert math.isfinite(logloss)  # clamp keeps the log finite


def test_extreme_probabilities_are_clamped():
    g = Network.from_edges(2, [(0, 1)])
    P = np.array([[0.0, 0.0], [0.0, 0.0]])  # confident miss on an edge
    assert math.isfinite(predictive_metrics(P, g)[2])


# ---- cluster count summary ---------------------------------------------------------


def test_cluster_count_summary_nearest_rank():
    med, iqr = cluster_count_summary([4, 5, 5, 6])
    assert med == 5
    assert iqr == (4, 5)
    med, iqr = cluster_count_summary([3])
    assert med == 3 and iqr == (3, 3)


# ---- posterior predictive checks ----------------------------------------------------


def test_ppc_report_shape_and_intervals():
    g, s = small_samples(seed=4, draws=25)
    rep = ppc(s, g, np.random.default_rng(0), draws_per_sample=2)
    assert rep.n_replicates == 50
    assert set(rep.entries) == set(STAT_NAMES)
    obs = network_stats(g).as_dict()
    for name, e in rep.entries.items():
        assert e.lo99 <= e.lo95 <= e.median <= e.hi95 <= e.hi99
        assert e.dropped + sum(~np.isnan(rep.replicates[name])) == rep.n_replicates \
            or e.dropped == int(np.isnan(rep.replicates[name]).sum())
        if not math.isnan(obs[name]):
            assert math.isclose(e.observed, obs[name], rel_tol=1e-12)


def test_ppc_is_deterministic_given_rng_seed():
    g, s = small_samples(seed=5, draws=10)
    a = ppc(s, g, np.random.default_rng(42))
    b = ppc(s, g, np.random.default_rng(42))
    for name in STAT_NAMES:
        np.testing.assert_array_equal(a.replicates[name], b.replicates[name])


def test_ppc_covers_self_generated_statistics():
    # fitting the generating class: observed density must sit inside the
    # central 95% band (probabilistic, generous seed-stable margin)
    g, truth, _ = generate(ScenarioSpec(n=40, K=2, within_pool=(0.7,),
                                        between_pool=(0.1,), seed=9))
    s = run_chain(CM(), g, DP(alpha=1.0),
                  ChainConfig(burn_in=600, n_samples=150, thin=2, seed=3))
    rep = ppc(s, g, np.random.default_rng(1))
    e = rep.entries["density"]
    assert e.lo95 <= e.observed <= e.hi95


# ---- fit report ----------------------------------------------------------------------


def test_fit_report_fields():
    g, s = small_samples(seed=6, draws=20)
    truth = Partition(np.repeat([1, 2], 6))
    rep = fit_report(s, truth=truth)
    d = rep.as_dict()
    assert set(d) == {"vi_to_truth", "vi_ball_radius", "H_median", "H_q25",
                      "H_q75", "ari", "fdr", "fnr", "waic", "auc", "mse", "logloss"}
    assert rep.vi_to_truth is not None and rep.ari is not None
    assert 0.0 <= rep.fdr <= 1.0 and 0.0 <= rep.fnr <= 1.0
    assert rep.H_iqr[0] <= rep.H_median <= rep.H_iqr[1]
    assert math.isfinite(rep.waic)

    rep_blind = fit_report(s)
    assert rep_blind.vi_to_truth is None and rep_blind.ari is None
    assert rep_blind.fdr is None and rep_blind.fnr is None
    # truth-independent fields do not depend on whether truth was given
    assert rep_blind.waic == rep.waic
    assert rep_blind.H_median == rep.H_median


def test_fit_report_single_draw_has_nan_waic():
    g, s = small_samples(seed=7, draws=1)
    rep = fit_report(s)
    assert math.isnan(rep.waic)

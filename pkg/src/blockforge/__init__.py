"""Bayesian community detection in undirected binary networks.

Stochastic block models (plain, class-distance, class-bilinear) under
Gibbs-type clustering priors (Dirichlet-multinomial, Dirichlet process,
Pitman-Yor, Gnedin), with full MCMC inference, partition and predictive
metrics, posterior predictive checks, and a batch CLI.
"""

__version__ = "0.1.0"

from .graph import Network, NetworkStats, load_network, save_network, network_stats
from .partition import (
    Partition,
    canonicalize,
    co_clustering_matrix,
    vi_distance,
    ari,
    fdr_fnr,
    point_estimate,
    credible_ball_radius,
)
from .priors import DM, DP, PYP, GNP, prior_allocation, log_partition_mass, elicit
from .blockmodels import (
    CM,
    CDM,
    CBM,
    CmState,
    HybridState,
    BlockStats,
    block_stats,
    probit,
    log_probit,
    log_one_minus_probit,
    eta_matrix,
    log_likelihood,
    edge_prob_matrix,
)
from .sampler import ChainConfig, Hyper, Chain, PosteriorSamples, run_chain, NumericalFailure
from .evaluation import (
    FitReport,
    PpcReport,
    posterior_edge_probs,
    predictive_metrics,
    waic,
    ppc,
    cluster_count_summary,
    fit_report,
)
from .synthgen import ScenarioSpec, scenario, generate

__all__ = [name for name in dir() if not name.startswith("_")]

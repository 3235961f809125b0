"""Planted-partition synthetic networks with randomized block sizes and pools."""

from dataclasses import dataclass

import numpy as np

from .graph import Network
from .partition import Partition

WITHIN_POOL = (0.50, 0.52, 0.54, 0.56, 0.58, 0.60)
BETWEEN_POOL = (0.10, 0.11, 0.12, 0.13, 0.14, 0.15)


@dataclass(frozen=True)
class ScenarioSpec:
    """Generator settings: node count, community count, probability pools.

    sizes, when given, pins the community sizes; otherwise they are drawn
    at generation time (uniform over the simplex, largest-remainder
    rounding, every community at least 2 nodes).
    """

    n: int
    K: int
    within_pool: tuple = WITHIN_POOL
    between_pool: tuple = BETWEEN_POOL
    sizes: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.K < 1:
            raise ValueError("need n >= 2 and K >= 1")
        for pool in (self.within_pool, self.between_pool):
            if len(pool) == 0 or any(not 0.0 < p < 1.0 for p in pool):
                raise ValueError("pools must be nonempty with entries in (0, 1)")
        if self.sizes is not None:
            sizes = tuple(int(s) for s in self.sizes)
            if len(sizes) != self.K or any(s < 1 for s in sizes) or sum(sizes) != self.n:
                raise ValueError("sizes must be K positive integers summing to n")
            object.__setattr__(self, "sizes", sizes)


def scenario(number, seed=0):
    """Benchmark presets: 1 is n=100 with K=5, 2 is n=200 with K=10."""
    if number == 1:
        return ScenarioSpec(n=100, K=5, seed=seed)
    if number == 2:
        return ScenarioSpec(n=200, K=10, seed=seed)
    raise ValueError(f"unknown scenario {number!r}")


def _draw_sizes(rng, n, K):
    # uniform over the simplex, rounded by largest remainder, floored at 2
    if 2 * K > n:
        raise ValueError(f"cannot fit {K} communities of size >= 2 into {n} nodes")
    for _ in range(10000):
        raw = rng.dirichlet(np.ones(K)) * n
        base = np.floor(raw).astype(np.int64)
        frac = raw - base
        short = n - int(base.sum())
        if short:
            base[np.argsort(-frac, kind="stable")[:short]] += 1
        if base.min() >= 2:
            return base
    raise ValueError("failed to draw feasible community sizes")


def generate(spec, rng=None):
    """Sample one network: returns (Network, truth Partition, block matrix).

    Each diagonal block probability is drawn from within_pool and each
    off-diagonal one from between_pool, independently with replacement;
    edges are then independent Bernoulli draws.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n, K = spec.n, spec.K
    sizes = np.asarray(spec.sizes, dtype=np.int64) if spec.sizes else _draw_sizes(rng, n, K)

    B = np.zeros((K, K))
    B[np.diag_indices(K)] = rng.choice(spec.within_pool, size=K)
    iu = np.triu_indices(K, 1)
    B[iu] = rng.choice(spec.between_pool, size=iu[0].size)
    B = np.triu(B) + np.triu(B, 1).T

    labels = np.repeat(np.arange(1, K + 1), sizes)
    lab0 = labels - 1
    pu = B[lab0[:, None], lab0[None, :]][np.triu_indices(n, 1)]
    draw = rng.random(pu.size) < pu
    adj = np.zeros((n, n), dtype=bool)
    adj[np.triu_indices(n, 1)] = draw
    return Network(adj | adj.T), Partition(labels), B

"""Cluster assignments and partition-comparison metrics."""

import math

import numpy as np


class Partition:
    """Cluster assignment of n items with canonical labels 1..K* (no gaps)."""

    __slots__ = ("_labels",)

    def __init__(self, labels):
        lab = np.asarray(labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size == 0:
            raise ValueError("labels must be a nonempty 1-d vector")
        k = int(lab.max())
        if lab.min() < 1 or np.unique(lab).size != k:
            raise ValueError("labels must cover 1..K* consecutively with no gaps")
        lab = lab.copy()
        lab.setflags(write=False)
        self._labels = lab

    @property
    def labels(self):
        return self._labels

    @property
    def n(self):
        return self._labels.size

    @property
    def k_star(self):
        return int(self._labels.max())

    @property
    def sizes(self):
        return np.bincount(self._labels, minlength=self.k_star + 1)[1:]

    def zero_based(self):
        return self._labels - 1

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self._labels, other._labels)

    def __repr__(self):
        return f"Partition(n={self.n}, k_star={self.k_star})"


def canonicalize(labels):
    """Renumber a raw label vector to 1..K* by order of first appearance."""
    lab = np.asarray(labels)
    if lab.ndim != 1 or lab.size == 0:
        raise ValueError("labels must be a nonempty 1-d vector")
    _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return Partition(rank[inv] + 1)


def _labels_of(p):
    if isinstance(p, Partition):
        return p.labels
    lab = np.asarray(p, dtype=np.int64)
    if lab.ndim != 1 or lab.size == 0:
        raise ValueError("expected a Partition or a nonempty label vector")
    return lab


def co_clustering_matrix(p):
    """n x n boolean matrix with entry (i, j) true when i and j share a cluster."""
    lab = _labels_of(p)
    return lab[:, None] == lab[None, :]


def _contingency(la, lb):
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    ka = int(ia.max()) + 1
    kb = int(ib.max()) + 1
    return np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb)


def _check_same_n(la, lb):
    if la.size != lb.size:
        raise ValueError(f"partition length mismatch: {la.size} vs {lb.size}")


def vi_distance(a, b):
    """Variation of information between two partitions, in bits (base-2 logs)."""
    la, lb = _labels_of(a), _labels_of(b)
    _check_same_n(la, lb)
    n = la.size
    ct = _contingency(la, lb)
    pij = ct / n
    pa = pij.sum(axis=1)
    pb = pij.sum(axis=0)
    nz = pij > 0
    h_a = -np.sum(pa[pa > 0] * np.log2(pa[pa > 0]))
    h_b = -np.sum(pb[pb > 0] * np.log2(pb[pb > 0]))
    mi = np.sum(pij[nz] * np.log2(pij[nz] / (pa[:, None] * pb[None, :])[nz]))
    return float(max(h_a + h_b - 2.0 * mi, 0.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(a, b):
    """Adjusted Rand index via the pair-counting formula over the contingency table."""
    la, lb = _labels_of(a), _labels_of(b)
    _check_same_n(la, lb)
    ct = _contingency(la, lb)
    sum_cells = _comb2(ct).sum()
    sum_a = _comb2(ct.sum(axis=1)).sum()
    sum_b = _comb2(ct.sum(axis=0)).sum()
    total = _comb2(la.size)
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        # both all-singletons or both one cluster: identical partitions
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def fdr_fnr(est, truth):
    """Pairwise false discovery and false negative rates of an estimated partition.

    Over unordered pairs: FDR is the fraction of co-clustered-in-est pairs
    that are separated in truth (0 when est has no co-clustered pair); FNR is
    the fraction of co-clustered-in-truth pairs separated in est (0 when
    truth has none).
    """
    le, lt = _labels_of(est), _labels_of(truth)
    _check_same_n(le, lt)
    ct = _contingency(le, lt)
    both = _comb2(ct).sum()
    pairs_est = _comb2(ct.sum(axis=1)).sum()
    pairs_truth = _comb2(ct.sum(axis=0)).sum()
    fdr = 0.0 if pairs_est == 0 else float((pairs_est - both) / pairs_est)
    fnr = 0.0 if pairs_truth == 0 else float((pairs_truth - both) / pairs_truth)
    return fdr, fnr


def _canonical_matrix(samples):
    rows = []
    for s in samples:
        lab = _labels_of(s)
        _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
        rank = np.argsort(np.argsort(first))
        rows.append(rank[inv])
    return np.asarray(rows)


def point_estimate(samples):
    """The sampled partition minimizing mean VI distance to all samples.

    Ties go to the earliest sampled partition. Duplicates are collapsed
    before the scan, so the cost is quadratic in distinct partitions only.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")
    M = _canonical_matrix(samples)
    uniq, inv, counts = np.unique(M, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    u = uniq.shape[0]
    first_pos = np.full(u, M.shape[0])
    np.minimum.at(first_pos, inv, np.arange(M.shape[0]))
    if u == 1:
        best = 0
    else:
        dist = np.zeros((u, u))
        for i in range(u):
            for j in range(i + 1, u):
                d = vi_distance(uniq[i] + 1, uniq[j] + 1)
                dist[i, j] = dist[j, i] = d
        mean_vi = dist @ counts / M.shape[0]
        best = min(range(u), key=lambda t: (mean_vi[t], first_pos[t]))
    idx = int(first_pos[best])
    chosen = samples[idx]
    return chosen if isinstance(chosen, Partition) else canonicalize(_labels_of(chosen))


def nearest_rank(sorted_values, level):
    """Lower-nearest-rank quantile: smallest value covering at least `level` mass.

    The rank index uses an epsilon-guarded ceiling so exact boundaries such
    as 0.95 * 20 are not pushed up a rank by float representation.
    """
    b = len(sorted_values)
    k = max(1, math.ceil(level * b - 1e-9))
    return sorted_values[min(k, b) - 1]


def credible_ball_radius(samples, center, level=0.95):
    """Smallest VI radius around `center` covering at least `level` of the samples."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")
    d = sorted(vi_distance(s, center) for s in samples)
    return float(nearest_rank(d, level))


def save_partition(p, path):
    """Write a partition as a single-line CSV of 1-based labels."""
    lab = _labels_of(p)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(str(int(v)) for v in lab) + "\n")


def load_partition(path):
    with open(path, "r", encoding="utf-8") as fh:
        line = fh.readline().strip()
    if not line:
        raise ValueError(f"{path}: empty partition file")
    try:
        labels = [int(v) for v in line.split(",")]
    except ValueError:
        raise ValueError(f"{path}: partition file must be a single CSV line of integers") from None
    return Partition(labels)

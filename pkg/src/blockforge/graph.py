"""Undirected binary networks: representation, file I/O, descriptive statistics."""

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class Network:
    """Undirected binary network on nodes 0..n-1, no self-loops.

    Immutable once built: the adjacency matrix is symmetric boolean with a
    zero diagonal and is write-locked. Node indices are 0-based in memory;
    all file formats use 1-based indices.
    """

    __slots__ = ("_adj",)

    def __init__(self, adjacency):
        A = np.asarray(adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if A.shape[0] < 2:
            raise ValueError("a network needs at least 2 nodes")
        vals = np.unique(A)
        if not np.all(np.isin(vals, (0, 1))):
            raise ValueError("adjacency entries must be 0/1")
        A = A.astype(bool)
        if np.any(np.diagonal(A)):
            raise ValueError("self-loops are not allowed (nonzero diagonal)")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        A = A.copy()
        A.setflags(write=False)
        self._adj = A

    @classmethod
    def from_edges(cls, n, pairs):
        """Build from 0-based (i, j) pairs; duplicates and orderings are normalized."""
        if n < 2:
            raise ValueError("a network needs at least 2 nodes")
        A = np.zeros((n, n), dtype=bool)
        for i, j in pairs:
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) is not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"node index out of range in pair ({i}, {j})")
            A[i, j] = A[j, i] = True
        return cls(A)

    @property
    def n(self):
        return self._adj.shape[0]

    @property
    def adj(self):
        """Symmetric boolean adjacency matrix (read-only view)."""
        return self._adj

    def edge_array(self):
        """Edges as an (E, 2) array of 0-based pairs with i < j."""
        iu = np.triu_indices(self.n, 1)
        mask = self._adj[iu]
        return np.column_stack((iu[0][mask], iu[1][mask]))

    def degrees(self):
        return self._adj.sum(axis=1)

    def n_edges(self):
        return int(self._adj.sum()) // 2

    def density(self):
        n = self.n
        return self.n_edges() / (n * (n - 1) / 2)

    def mean_degree(self):
        return float(self.degrees().mean())

    def __eq__(self, other):
        return isinstance(other, Network) and np.array_equal(self._adj, other._adj)

    def __repr__(self):
        return f"Network(n={self.n}, edges={self.n_edges()})"


@dataclass(frozen=True)
class NetworkStats:
    """Descriptive statistics used in posterior predictive checks.

    Undefined values (assortativity on a regular graph, mean distance with
    no reachable pair) are reported as NaN.
    """

    density: float
    transitivity: float
    assortativity: float
    mean_degree: float
    sd_degree: float
    mean_distance: float

    def as_dict(self):
        return dataclasses.asdict(self)


STAT_NAMES = ("density", "transitivity", "assortativity", "mean_degree", "sd_degree", "mean_distance")


def network_stats(g):
    """Compute the six replicate-comparison statistics of a network.

    density: edge fraction over unordered pairs.
    transitivity: 3 * triangles / connected triples (0 when no triples).
    assortativity: Pearson correlation of degrees over ordered edge
        endpoints; NaN when endpoint degree variance is zero or no edges.
    mean_degree, sd_degree: mean and population SD of the degree sequence.
    mean_distance: mean shortest-path length over reachable ordered pairs;
        NaN when no pair is reachable.
    """
    A = g.adj.astype(np.int64)
    n = g.n
    deg = A.sum(axis=1)
    n_pairs = n * (n - 1) // 2
    density = float(A.sum()) / 2.0 / n_pairs

    # trace(A^3) = 6 * triangles; sum d(d-1) = 2 * connected triples
    tri6 = float(np.trace(A @ A @ A))
    triples2 = float(np.sum(deg * (deg - 1)))
    transitivity = tri6 / triples2 if triples2 > 0 else 0.0

    ii, jj = np.nonzero(A)
    if ii.size == 0 or np.var(deg[ii]) == 0.0:
        assortativity = float("nan")
    else:
        assortativity = float(np.corrcoef(deg[ii], deg[jj])[0, 1])

    D = shortest_path(csr_matrix(A), method="D", directed=False, unweighted=True)
    off = D[~np.eye(n, dtype=bool)]
    finite = off[np.isfinite(off)]
    mean_distance = float(finite.mean()) if finite.size else float("nan")

    return NetworkStats(
        density=density,
        transitivity=float(transitivity),
        assortativity=assortativity,
        mean_degree=float(deg.mean()),
        sd_degree=float(deg.std()),
        mean_distance=mean_distance,
    )


def sniff_edge_list_header(path):
    """True when the first non-blank line is a single integer (a node-count header)."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) == 1:
                try:
                    int(parts[0])
                    return True
                except ValueError:
                    return False
            return False
    return False


def _parse_edge_list(path, n=None, header=False):
    edges = []
    n_header = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    start = 0
    if header:
        for k, line in enumerate(lines):
            if line.split():
                start = k + 1
                parts = line.split()
                if len(parts) != 1:
                    raise ValueError(f"{path}: header line must be a single node count, got {line.strip()!r}")
                try:
                    n_header = int(parts[0])
                except ValueError:
                    raise ValueError(f"{path}: header line must be a single node count, got {line.strip()!r}") from None
                break
        else:
            raise ValueError(f"{path}: empty file, expected a header line")
    if n is None:
        n = n_header
    elif n_header is not None and n_header != n:
        raise ValueError(f"{path}: header node count {n_header} disagrees with n={n}")
    if n is None:
        raise ValueError("edge-list input needs a node count: pass n or use a header line")
    for lineno, line in enumerate(lines[start:], start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: malformed row {line.strip()!r}, expected 'i j'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line.strip()!r}, expected integers") from None
        if i == j:
            raise ValueError(f"{path}:{lineno}: self-loop '{i} {j}' is not allowed")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"{path}:{lineno}: node index out of range 1..{n} in '{i} {j}'")
        edges.append((i - 1, j - 1))
    return Network.from_edges(n, edges)


def _parse_dense(path):
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: could not parse dense 0/1 CSV matrix: {exc}") from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{path}: dense matrix must be square, got shape {A.shape}")
    if not np.all(np.isin(A, (0.0, 1.0))):
        raise ValueError(f"{path}: dense matrix entries must be 0/1")
    if np.any(np.diagonal(A) != 0):
        raise ValueError(f"{path}: dense matrix must have a zero diagonal")
    if not np.array_equal(A, A.T):
        raise ValueError(f"{path}: dense matrix must be symmetric")
    return Network(A.astype(bool))


FORMATS = ("edge-list", "dense-matrix")


def load_network(path, format="edge-list", n=None, header=False):
    """Load a network from an edge list or a dense 0/1 CSV matrix.

    Edge lists are 1-based "i j" rows; the node count comes from `n` or,
    with header=True, from a first line holding a single integer.
    """
    if format == "edge-list":
        return _parse_edge_list(path, n=n, header=header)
    if format == "dense-matrix":
        return _parse_dense(path)
    raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")


def save_network(g, path, format="edge-list", header=True):
    """Write a network; the edge-list form is 1-based with an optional node-count header."""
    if format == "edge-list":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if header:
                fh.write(f"{g.n}\n")
            for i, j in g.edge_array():
                fh.write(f"{i + 1} {j + 1}\n")
    elif format == "dense-matrix":
        np.savetxt(path, g.adj.astype(int), fmt="%d", delimiter=",", newline="\n")
    else:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")

"""Network construction, file round trips, and the six summary statistics."""

import math

import numpy as np
import pytest

import oracles
from blockforge import Network, load_network, network_stats, save_network
from blockforge.graph import sniff_edge_list_header


def random_adj(rng, n, p=0.3):
    a = np.triu((rng.random((n, n)) < p).astype(np.int64), 1)
    return a + a.T


# ---- construction -----------------------------------------------------------


def test_rejects_self_loops_and_asymmetry():
    with pytest.raises(ValueError):
        Network(np.eye(3, dtype=int))
    bad = np.zeros((3, 3), dtype=int)
    bad[0, 1] = 1  # missing the mirrored entry
    with pytest.raises(ValueError):
        Network(bad)
    with pytest.raises(ValueError):
        Network(np.zeros((1, 1), dtype=int))
    with pytest.raises(ValueError):
        Network(2 * np.ones((3, 3), dtype=int))


def test_from_edges_normalizes():
    g = Network.from_edges(4, [(1, 0), (0, 1), (2, 3)])
    assert g.n_edges() == 2
    assert g.adj[0, 1] and g.adj[1, 0]
    with pytest.raises(ValueError):
        Network.from_edges(3, [(0, 0)])
    with pytest.raises(ValueError):
        Network.from_edges(3, [(0, 7)])


def test_adjacency_is_write_locked():
    g = Network.from_edges(3, [(0, 1)])
    with pytest.raises(ValueError):
        g.adj[0, 2] = True


# ---- file formats -----------------------------------------------------------


def test_edge_list_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    g = Network(random_adj(rng, 17, 0.25))
    for header in (True, False):
        path = tmp_path / f"h{header}.txt"
        save_network(g, path, format="edge-list", header=header)
        back = load_network(path, format="edge-list",
                            header=header, n=None if header else 17)
        assert back == g
        assert sniff_edge_list_header(path) is header


def test_dense_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    g = Network(random_adj(rng, 9, 0.4))
    path = tmp_path / "dense.csv"
    save_network(g, path, format="dense-matrix")
    assert load_network(path, format="dense-matrix") == g


def test_edge_list_is_one_based(tmp_path):
    path = tmp_path / "g.txt"
    save_network(Network.from_edges(3, [(0, 2)]), path, header=True)
    lines = path.read_text().split()
    assert lines == ["3", "1", "3"]


def test_parse_errors_carry_line_numbers(tmp_path):
    cases = [
        ("3\n1 1\n", "self-loop"),      # self-loop
        ("3\n1 9\n", "range"),          # out of range
        ("3\n1 two\n", "parse"),        # malformed token
        ("3\n1\n", "parse"),            # wrong arity
    ]
    for text, _ in cases:
        p = tmp_path / "bad.txt"
        p.write_text(text)
        with pytest.raises(ValueError) as err:
            load_network(p, header=True)
        assert ":2" in str(err.value)  # offending line is named


# ---- statistics -------------------------------------------------------------


def test_triangle_stats():
    g = Network(np.ones((3, 3), dtype=int) - np.eye(3, dtype=int))
    st = network_stats(g)
    assert st.density == 1.0
    assert st.transitivity == 1.0
    assert st.mean_degree == 2.0
    assert st.sd_degree == 0.0
    assert st.mean_distance == 1.0


def test_path_graph_stats():
    g = Network.from_edges(3, [(0, 1), (1, 2)])
    st = network_stats(g)
    assert st.transitivity == 0.0
    assert math.isclose(st.density, 2 / 3)
    # 6 ordered pairs at distances {1,1,1,1,2,2}
    assert math.isclose(st.mean_distance, 4 / 3)


def test_regular_graph_assortativity_undefined():
    # 4-cycle: every degree 2, endpoint degree variance 0
    g = Network.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert math.isnan(network_stats(g).assortativity)


def test_empty_graph_distance_undefined():
    g = Network(np.zeros((4, 4), dtype=int))
    st = network_stats(g)
    assert math.isnan(st.mean_distance)
    assert st.density == 0.0 and st.transitivity == 0.0


def test_stats_match_oracle_on_random_graphs():
    rng = np.random.default_rng(21)
    for trial in range(25):
        n = int(rng.integers(4, 14))
        p = float(rng.uniform(0.05, 0.8))  # includes disconnected graphs
        adj = random_adj(rng, n, p)
        st = network_stats(Network(adj)).as_dict()
        ref = oracles.stats_oracle(adj)
        for name, want in ref.items():
            got = st[name]
            if want is None:
                assert math.isnan(got), (trial, name)
            else:
                assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12), (trial, name)


def test_density_and_transitivity_in_unit_interval():
    rng = np.random.default_rng(22)
    for _ in range(40):
        st = network_stats(Network(random_adj(rng, 10, rng.uniform(0, 1))))
        assert 0.0 <= st.density <= 1.0
        assert 0.0 <= st.transitivity <= 1.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlcp.errors import InputError
from graphlcp.graph import (
    SparseGraph,
    clustering_coefficient,
    clustering_coefficients,
    graph_homophily,
    load_graph,
    node_homophily,
    node_homophily_classification,
    node_homophily_regression,
)

from oracles import random_connected_graph, triangle_clustering


def test_load_symmetrizes():
    g = load_graph([(0, 1)], 2)
    assert g.weighted_degrees.tolist() == [1.0, 1.0]
    assert g.weight(1, 0) == 1.0
    assert g.weight(0, 1) == 1.0


def test_load_collapses_duplicates():
    a = load_graph([(0, 1)], 2)
    b = load_graph([(0, 1), (1, 0), (0, 1)], 2)
    assert np.array_equal(a.indptr, b.indptr)
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.weights, b.weights)


def test_load_empty():
    g = load_graph([], 3)
    assert g.weighted_degrees.tolist() == [0.0, 0.0, 0.0]
    assert g.num_entries == 0


def test_load_rejects_out_of_range_and_names_row():
    with pytest.raises(InputError, match="row 1"):
        load_graph([(0, 1), (1, 5)], 3)


def test_self_loop_kept_only_if_given():
    g = load_graph([(0, 0), (0, 1)], 2)
    assert g.weight(0, 0) == 1.0
    assert g.weight(1, 1) == 0.0


edges_strategy = st.lists(st.tuples(st.integers(0, 19), st.integers(0, 19)), max_size=60)


@settings(max_examples=60, deadline=None)
@given(edges_strategy)
def test_symmetry_and_degree_consistency(edges):
    g = load_graph(edges, 20)
    for i in range(20):
        for j, w in zip(g.neighbors(i), g.neighbor_weights(i)):
            assert g.weight(int(j), i) == w
    src, dst, w = g.edge_list()
    # self-loops are stored once and counted once in both sums
    loops = src == dst
    edge_total = 2 * w[~loops].sum() + w[loops].sum()
    assert math.isclose(g.weighted_degrees.sum(), edge_total, rel_tol=1e-9, abs_tol=1e-12)
    keys = g.row_ids() * 20 + g.indices
    assert np.unique(keys).size == keys.size


# ---------------------------------------------------------------------------
# homophily
# ---------------------------------------------------------------------------


def star(leaves: int):
    return load_graph([(0, k) for k in range(1, leaves + 1)], leaves + 1)


def test_classification_homophily_all_match():
    g = star(4)
    assert node_homophily_classification(g, [1, 1, 1, 1, 1], 0) == 1.0


def test_classification_homophily_half():
    g = star(4)
    assert node_homophily_classification(g, [1, 1, 1, 0, 0], 0) == 0.5


def test_classification_homophily_isolated_undefined():
    g = load_graph([(0, 1)], 3)
    assert math.isnan(node_homophily_classification(g, [0, 0, 0], 2))


def test_classification_homophily_missing_label():
    g = load_graph([(0, 1)], 2)
    with pytest.raises(InputError):
        node_homophily_classification(g, [np.nan, 0], 0)


def test_regression_homophily_constant_targets():
    g = load_graph([(0, 1), (1, 2)], 3)
    assert node_homophily_regression(g, [3.0, 3.0, 3.0], 1) == 1.0


def test_regression_homophily_path():
    # max edge gap 1; middle node sees gaps 1 and 1
    g = load_graph([(0, 1), (1, 2)], 3)
    assert node_homophily_regression(g, [0.0, 1.0, 2.0], 1) == 0.0


def test_regression_homophily_half_gap():
    # edges (0,1) gap 1 and (2,3) gap 2; node 0's only neighbour differs by half the max
    g = load_graph([(0, 1), (2, 3)], 4)
    assert node_homophily_regression(g, [0.0, 1.0, 0.0, 2.0], 0) == 0.5


def test_vector_and_scalar_homophily_agree():
    rng = np.random.default_rng(3)
    g = load_graph(random_connected_graph(rng, 30, 40), 30)
    labels = rng.integers(0, 3, 30).astype(float)
    targets = rng.normal(size=30)
    hc = node_homophily(g, labels, "classification")
    hr = node_homophily(g, targets, "regression")
    for u in range(30):
        assert hc[u] == pytest.approx(node_homophily_classification(g, labels, u), abs=1e-15)
        assert hr[u] == pytest.approx(node_homophily_regression(g, targets, u), abs=1e-12)


def test_graph_homophily_two_nodes():
    g = load_graph([(0, 1)], 2)
    assert graph_homophily(g, [1, 1], "classification") == 1.0
    assert graph_homophily(g, [0, 1], "classification") == 0.0


def test_graph_homophily_requires_edges():
    with pytest.raises(InputError):
        graph_homophily(load_graph([], 3), [0, 0, 0], "classification")


def test_graph_homophily_sbm_matches_enumeration():
    from graphlcp.synth import SbmSpec, generate_sbm

    g, _, labels = generate_sbm(SbmSpec(num_nodes=200, intra_prob=0.1, inter_prob=0.01, seed=5))
    per_node = []
    for u in range(g.num_nodes):
        nb = [int(v) for v in g.neighbors(u) if v != u]
        if nb:
            per_node.append(sum(labels[v] == labels[u] for v in nb) / len(nb))
    assert graph_homophily(g, labels, "classification") == pytest.approx(np.mean(per_node), abs=1e-12)
    # planted agreement rate: expected same-block share of a node's edges
    size = 50
    agree = 0.1 * (size - 1) / (0.1 * (size - 1) + 0.01 * 150)
    assert graph_homophily(g, labels, "classification") == pytest.approx(agree, abs=0.08)


@settings(max_examples=40, deadline=None)
@given(edges_strategy, st.lists(st.floats(-5, 5), min_size=20, max_size=20))
def test_homophily_bounds(edges, targets):
    g = load_graph(edges, 20)
    for task, vals in (("classification", np.round(targets)), ("regression", targets)):
        h = node_homophily(g, vals, task)
        ok = ~np.isnan(h)
        assert np.all((h[ok] >= -1e-12) & (h[ok] <= 1 + 1e-12))
        # undefined exactly for nodes without non-loop neighbours
        has_nbr = np.array([np.any(g.neighbors(u) != u) for u in range(20)])
        assert np.array_equal(ok, has_nbr)


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------


def test_clustering_triangle():
    g = load_graph([(0, 1), (1, 2), (0, 2)], 3)
    assert clustering_coefficients(g).tolist() == [1.0, 1.0, 1.0]


def test_clustering_star_center():
    assert clustering_coefficient(star(3), 0) == 0.0


def test_clustering_clique_minus_edge():
    edges = [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]  # K4 without (0, 1)
    g = load_graph(edges, 4)
    # oracle: node 0 has neighbours {2, 3}, which are adjacent -> 1.0;
    # node 2 has {0, 1, 3} with 2 of 3 pairs closed -> 2/3
    assert triangle_clustering(g, 0) == 1.0
    assert triangle_clustering(g, 2) == pytest.approx(2 / 3)
    assert clustering_coefficient(g, 0) == 1.0
    assert clustering_coefficient(g, 2) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_clustering_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = 200 if seed == 0 else 60
    g = load_graph(random_connected_graph(rng, n, 3 * n), n)
    cc = clustering_coefficients(g)
    for u in range(n):
        assert cc[u] == pytest.approx(triangle_clustering(g, u), abs=1e-12)


def test_sparse_graph_is_immutable():
    g = load_graph([(0, 1)], 2)
    with pytest.raises(ValueError):
        g.weights[0] = 3.0
    assert isinstance(g, SparseGraph)

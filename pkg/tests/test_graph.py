import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_graph
from oracles import closure_connected, edge_list, naive_cut
from nagp.errors import InvalidArgument, UndefinedRatio
from nagp.graph import (
    Graph,
    Partition,
    build_laplacian,
    edge_cut,
    edge_cut_ratio,
    is_connected,
    random_bisection,
)
from nagp.synthetic import complete_graph, path_graph


def test_from_edges_normalizes_input():
    g = Graph.from_edges(4, [(1, 0), (0, 1), (2, 2), (3, 1)])
    assert g.num_edges == 2
    assert g.neighbors(1).tolist() == [0, 3]
    assert g.neighbors(2).tolist() == []
    assert g.edge_weights.tolist() == [2.0, 2.0, 1.0, 1.0]


def test_constructor_rejects_asymmetric_csr():
    with pytest.raises(InvalidArgument):
        Graph([0, 1, 1], [1])


def test_constructor_rejects_self_loop_and_unsorted():
    with pytest.raises(InvalidArgument):
        Graph([0, 1], [0])
    with pytest.raises(InvalidArgument):
        Graph([0, 2, 3, 4], [2, 1, 0, 0])


def test_graph_arrays_are_immutable():
    g = path_graph(3)
    with pytest.raises(ValueError):
        g.indices[0] = 2


@pytest.mark.parametrize(
    "g, expected",
    [
        (path_graph(3), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]),
        (Graph.from_edges(1, []), [[0]]),
        (complete_graph(4), 4 * np.eye(4) - np.ones((4, 4))),
    ],
)
def test_laplacian_examples(g, expected):
    np.testing.assert_array_equal(build_laplacian(g), np.asarray(expected, dtype=float))


def test_laplacian_ignores_weights():
    g = Graph.from_edges(2, [(0, 1)], weights=[7.5])
    np.testing.assert_array_equal(build_laplacian(g), [[1, -1], [-1, 1]])


def test_laplacian_invariants_many_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        g = random_graph(rng, n, float(rng.uniform(0, 0.5)))
        lap = build_laplacian(g)
        np.testing.assert_array_equal(lap, lap.T)
        assert np.all(lap.sum(axis=1) == 0)
        np.testing.assert_array_equal(np.diag(lap), g.degrees())
        off = lap[~np.eye(n, dtype=bool)]
        assert set(np.unique(off)) <= {0.0, -1.0}


def test_laplacian_psd_and_null_vector():
    rng = np.random.default_rng(3)
    for _ in range(50):
        g = random_graph(rng, 20, 0.3)
        lap = build_laplacian(g)
        assert np.linalg.eigvalsh(lap).min() >= -1e-10
        assert np.abs(lap @ np.ones(20)).max() == 0


def test_edge_cut_examples():
    assert edge_cut(complete_graph(4), Partition([0, 0, 1, 1])) == 4
    assert edge_cut(path_graph(4), Partition([0, 0, 1, 1])) == 1


def test_edge_cut_matches_double_loop():
    rng = np.random.default_rng(11)
    for _ in range(200):
        g = random_graph(rng, 10, 0.4)
        p = random_bisection(g, int(rng.integers(1 << 30)))
        edges = set(edge_list(g))
        assert edge_cut(g, p) == naive_cut(10, edges, p.assignment.tolist())


def test_edge_cut_length_mismatch():
    with pytest.raises(InvalidArgument):
        edge_cut(path_graph(4), Partition([0, 1, 0]))


def test_edge_cut_ratio():
    assert edge_cut_ratio(path_graph(4), Partition([0, 0, 1, 1])) == pytest.approx(1 / 3)
    assert edge_cut_ratio(path_graph(4), Partition([0, 0, 0, 0])) == 0.0
    with pytest.raises(UndefinedRatio):
        edge_cut_ratio(Graph.from_edges(3, []), Partition([0, 1, 0]))


def test_edge_cut_ratio_reported_value():
    # 15 cut edges over 423 reported as 0.035
    assert round(15 / 423, 3) == 0.035


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30), st.floats(0, 1), st.integers(0, 2**31 - 1))
def test_cut_bounds_and_label_symmetry(n, p, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p)
    part = random_bisection(g, seed)
    ec = edge_cut(g, part)
    assert 0 <= ec <= g.num_edges
    assert edge_cut(g, part.swapped()) == ec
    if g.num_edges:
        assert edge_cut_ratio(g, part) == ec / g.num_edges


def test_is_connected_examples():
    assert is_connected(path_graph(4))
    assert not is_connected(Graph.from_edges(2, []))
    assert is_connected(Graph.from_edges(1, []))
    assert is_connected(Graph.from_edges(0, []))


def test_is_connected_matches_closure_oracle():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n = int(rng.integers(1, 13))
        g = random_graph(rng, n, float(rng.uniform(0, 0.5)))
        assert is_connected(g) == closure_connected(g.dense_adjacency())


@pytest.mark.parametrize("n, sizes", [(4, {(2, 2)}), (5, {(2, 3), (3, 2)})])
def test_random_bisection_balance(n, sizes):
    g = Graph.from_edges(n, [])
    for seed in range(20):
        p = random_bisection(g, seed)
        assert (p.size0, p.size1) in sizes


def test_random_bisection_deterministic():
    g = path_graph(50)
    assert random_bisection(g, 9) == random_bisection(g, 9)
    assert random_bisection(g, 9) != random_bisection(g, 10)


def test_partition_rejects_bad_labels():
    with pytest.raises(InvalidArgument):
        Partition([0, 2, 1])

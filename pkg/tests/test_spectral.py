import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import connected_graph, random_graph
from oracles import brute_force_min_bisection, closure_connected, edge_list, jacobi_eigh
from nagp.errors import DegenerateSpectrum, InvalidArgument
from nagp.graph import Graph, build_laplacian, edge_cut
from nagp.spectral import canonical_sign, compute_fiedler, median_split, spectral_bisect
from nagp.synthetic import cycle_graph, grid_graph, path_graph, random_connected

S = 1 / math.sqrt(2)


def test_p2_closed_form():
    res = compute_fiedler(build_laplacian(path_graph(2)))
    assert res.lambda2 == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(res.fiedler, [S, -S], atol=1e-12)


def test_p3_characteristic_polynomial():
    # det(L - x I) = -x (x - 1) (x - 3) for the 3-vertex path
    lap = build_laplacian(path_graph(3))
    roots = np.sort(np.roots(np.poly(lap)).real)
    np.testing.assert_allclose(roots, [0, 1, 3], atol=1e-9)
    res = compute_fiedler(lap)
    assert res.lambda2 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(res.fiedler, [S, 0, -S], atol=1e-12)


@pytest.mark.parametrize("n", [4, 8, 16, 128])
def test_path_lambda2_closed_form(n):
    res = compute_fiedler(build_laplacian(path_graph(n)))
    assert abs(res.lambda2 - 2 * (1 - math.cos(math.pi / n))) <= 1e-8


@pytest.mark.parametrize("n", [4, 8, 16])
def test_path_spectrum_matches_jacobi(n):
    lap = build_laplacian(path_graph(n))
    vals, _ = jacobi_eigh(lap)
    assert compute_fiedler(lap).lambda2 == pytest.approx(vals[1], abs=1e-10)


def test_result_invariants_random_graphs():
    rng = np.random.default_rng(21)
    for _ in range(60):
        n = int(rng.integers(2, 257))
        g = random_connected(n, min(1.0, 6 / n), rng)
        lap = build_laplacian(g)
        res = compute_fiedler(lap)
        v = res.fiedler
        assert np.linalg.norm(lap @ v - res.lambda2 * v) <= 1e-8 * max(1, res.lambda2)
        assert abs(v.sum()) <= 1e-8
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        k = int(np.argmax(np.abs(v)))
        assert v[k] > 0


def test_lambda2_positive_iff_connected():
    rng = np.random.default_rng(22)
    for _ in range(300):
        n = int(rng.integers(2, 13))
        g = random_graph(rng, n, float(rng.uniform(0.1, 0.6)))
        connected = closure_connected(g.dense_adjacency())
        lap = build_laplacian(g)
        if connected:
            assert compute_fiedler(lap).lambda2 > 1e-8
        else:
            with pytest.raises(DegenerateSpectrum):
                compute_fiedler(lap)


def test_rejects_single_vertex():
    with pytest.raises(InvalidArgument):
        compute_fiedler(np.zeros((1, 1)))


def test_canonical_sign_ties_use_lowest_index():
    np.testing.assert_array_equal(canonical_sign(np.array([-0.5, 0.5])), [0.5, -0.5])
    np.testing.assert_array_equal(canonical_sign(np.array([0.1, -0.9, 0.2])), [-0.1, 0.9, -0.2])


def test_median_split_examples():
    p = median_split([0.9, 0.1, -0.1, -0.9])
    assert p.side(0).tolist() == [2, 3] and p.side(1).tolist() == [0, 1]
    p = median_split([0.3, 0.3, 0.3, 0.3])
    assert p.side(0).tolist() == [0, 1] and p.side(1).tolist() == [2, 3]


def test_median_split_path128():
    p = median_split(compute_fiedler(build_laplacian(path_graph(128))).fiedler)
    g = path_graph(128)
    assert edge_cut(g, p) == 1
    halves = {tuple(p.side(0).tolist()), tuple(p.side(1).tolist())}
    assert halves == {tuple(range(64)), tuple(range(64, 128))}


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(-50, 50), min_size=2, max_size=40),
    st.integers(-100, 100),
    st.integers(1, 7),
)
def test_median_split_affine_invariance(vals, shift, scale):
    v = np.asarray(vals, dtype=np.float64)
    base = median_split(v)
    assert median_split(v + shift) == base
    assert median_split(v * scale) == base
    assert base.imbalance <= 1
    # with distinct values and even n, negation exactly swaps the halves
    if len(set(vals)) == len(vals) and len(v) % 2 == 0:
        flipped = median_split(-v)
        assert flipped == base.swapped()
        g = Graph.from_edges(len(v), [(i, i + 1) for i in range(len(v) - 1)])
        assert edge_cut(g, flipped) == edge_cut(g, base)


def test_spectral_bisect_path_and_cycle():
    assert edge_cut(path_graph(128), spectral_bisect(path_graph(128))) == 1
    assert edge_cut(cycle_graph(128), spectral_bisect(cycle_graph(128))) == 2


def test_cycle_min_bisection_is_two():
    g = cycle_graph(8)
    assert brute_force_min_bisection(8, edge_list(g)) == 2
    assert edge_cut(g, spectral_bisect(g)) >= 2


def test_grid_bisection():
    small = grid_graph(4, 4)
    assert brute_force_min_bisection(16, edge_list(small)) == 4
    g = grid_graph(8, 16)
    p = spectral_bisect(g)
    assert p.imbalance == 0
    assert edge_cut(g, p) == 8


def test_spectral_never_beats_exhaustive_minimum():
    rng = np.random.default_rng(23)
    for _ in range(150):
        g = connected_graph(rng, 2, 12)
        p = spectral_bisect(g)
        assert p.is_balanced()
        assert edge_cut(g, p) >= brute_force_min_bisection(g.num_vertices, edge_list(g))

import numpy as np

from nagp.graph import Graph
from nagp.synthetic import random_connected


def random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def connected_graph(rng, n_lo=2, n_hi=10):
    n = int(rng.integers(n_lo, n_hi + 1))
    return random_connected(n, float(rng.uniform(0.3, 0.8)), rng)


def same_structure(a, b):
    """Equal vertex count and edge set, ignoring all weights."""
    return (
        a.num_vertices == b.num_vertices
        and np.array_equal(a.indptr, b.indptr)
        and np.array_equal(a.indices, b.indices)
    )

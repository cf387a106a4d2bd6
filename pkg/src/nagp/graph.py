"""Sparse undirected graphs, Laplacians, bisections and cut metrics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidArgument, UndefinedRatio

#: Largest order for which a dense Laplacian is materialized.
DENSE_LIMIT = 4096


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Graph:
    """Immutable undirected graph in CSR form.

    Every undirected edge is stored once per direction. Neighbor lists are
    sorted ascending and free of self-loops and duplicates. Edge weights
    default to 1 and node weights default to 1; only heavy-edge matching
    looks at them.
    """

    __slots__ = ("_indptr", "_indices", "_weights", "_node_weights")

    def __init__(self, indptr, indices, weights=None, node_weights=None, *, check=True):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        if weights is None:
            weights = np.ones(len(indices), dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        n = len(indptr) - 1
        if node_weights is None:
            node_weights = np.ones(n, dtype=np.int64)
        node_weights = np.asarray(node_weights, dtype=np.int64)
        self._indptr = _frozen(indptr)
        self._indices = _frozen(indices)
        self._weights = _frozen(weights)
        self._node_weights = _frozen(node_weights)
        if check:
            self._validate()

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable,
        weights: Optional[Iterable[float]] = None,
        node_weights: Optional[Iterable[int]] = None,
    ) -> "Graph":
        """Build a graph from undirected edge pairs.

        Edges may be listed in either or both directions. Self-loops are
        dropped and repeated pairs are merged by summing their weights.
        """
        if n < 0:
            raise InvalidArgument("vertex count must be nonnegative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if weights is None:
            w = np.ones(len(e), dtype=np.float64)
        else:
            w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=np.float64)
            if len(w) != len(e):
                raise InvalidArgument("weights must align with edges")
            if np.any(w <= 0):
                raise InvalidArgument("edge weights must be positive")
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise InvalidArgument("edge endpoint out of range")
        keep = e[:, 0] != e[:, 1]
        e, w = e[keep], w[keep]
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = lo * max(n, 1) + hi
        uniq, inv = np.unique(key, return_inverse=True)
        wsum = np.zeros(len(uniq), dtype=np.float64)
        np.add.at(wsum, inv, w)
        lo, hi = uniq // max(n, 1), uniq % max(n, 1)
        return cls._from_unique_pairs(n, lo, hi, wsum, node_weights)

    @classmethod
    def _from_unique_pairs(cls, n, lo, hi, w, node_weights=None) -> "Graph":
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        ww = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, ww, node_weights, check=False)

    @classmethod
    def from_dense(cls, adjacency) -> "Graph":
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument("adjacency must be square")
        i, j = np.nonzero((a != 0) | (a.T != 0))
        sel = i < j
        return cls.from_edges(a.shape[0], np.stack([i[sel], j[sel]], axis=1))

    def _validate(self) -> None:
        n = self.num_vertices
        p, idx, w = self._indptr, self._indices, self._weights
        if n < 0 or p[0] != 0 or np.any(np.diff(p) < 0) or p[-1] != len(idx):
            raise InvalidArgument("malformed CSR offsets")
        if len(w) != len(idx) or len(self._node_weights) != n:
            raise InvalidArgument("weight arrays do not align")
        if len(idx) and (idx.min() < 0 or idx.max() >= n):
            raise InvalidArgument("neighbor index out of range")
        rows = np.repeat(np.arange(n), np.diff(p))
        if np.any(rows == idx):
            raise InvalidArgument("self-loops are not allowed")
        steps = np.diff(idx)
        same_row = rows[1:] == rows[:-1]
        if np.any(steps[same_row] <= 0):
            raise InvalidArgument("neighbor lists must be sorted and duplicate-free")
        fwd = rows * max(n, 1) + idx
        rev = idx * max(n, 1) + rows
        of, orr = np.argsort(fwd), np.argsort(rev)
        if not (np.array_equal(fwd[of], rev[orr]) and np.array_equal(w[of], w[orr])):
            raise InvalidArgument("adjacency is not symmetric")
        if np.any(w <= 0) or np.any(self._node_weights <= 0):
            raise InvalidArgument("weights must be positive")

    @property
    def num_vertices(self) -> int:
        return len(self._indptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self._indices) // 2

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def edge_weights(self) -> np.ndarray:
        return self._weights

    @property
    def node_weights(self) -> np.ndarray:
        return self._node_weights

    def unweighted(self) -> "Graph":
        """Same structure with unit edge and node weights."""
        return Graph(self._indptr, self._indices, None, None, check=False)

    def neighbors(self, v: int) -> np.ndarray:
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        return self._weights[self._indptr[v]:self._indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an (|E|, 2) array with ``u < v``, sorted."""
        rows = np.repeat(np.arange(self.num_vertices), self.degrees())
        sel = rows < self._indices
        return np.stack([rows[sel], self._indices[sel]], axis=1)

    def edge_weight_array(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.num_vertices), self.degrees())
        return self._weights[rows < self._indices]

    def total_edge_weight(self) -> float:
        return float(self._weights.sum() / 2)

    def adjacency_lists(self) -> list:
        p, idx = self._indptr, self._indices.tolist()
        return [idx[p[v]:p[v + 1]] for v in range(self.num_vertices)]

    def dense_adjacency(self) -> np.ndarray:
        n = self.num_vertices
        a = np.zeros((n, n), dtype=np.float64)
        rows = np.repeat(np.arange(n), self.degrees())
        a[rows, self._indices] = 1.0
        return a

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self._indptr, other._indptr)
            and np.array_equal(self._indices, other._indices)
            and np.array_equal(self._weights, other._weights)
            and np.array_equal(self._node_weights, other._node_weights)
        )

    def __hash__(self):
        return hash((self.num_vertices, self._indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.num_vertices}, m={self.num_edges})"


@dataclass(frozen=True, eq=False)
class Partition:
    """Two-way vertex assignment; ``assignment[v]`` is 0 or 1."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int8).copy()
        if a.ndim != 1:
            raise InvalidArgument("assignment must be one-dimensional")
        if a.size and not np.all((a == 0) | (a == 1)):
            raise InvalidArgument("side labels must be 0 or 1")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    def __len__(self) -> int:
        return len(self.assignment)

    @property
    def size0(self) -> int:
        return int(len(self.assignment) - self.assignment.sum())

    @property
    def size1(self) -> int:
        return int(self.assignment.sum())

    @property
    def imbalance(self) -> int:
        return abs(self.size0 - self.size1)

    def is_balanced(self) -> bool:
        return self.imbalance <= 1

    def swapped(self) -> "Partition":
        return Partition(1 - self.assignment)

    def side(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == s)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash(self.assignment.tobytes())

    def __repr__(self) -> str:
        return f"Partition(sizes=({self.size0}, {self.size1}))"


def build_laplacian(g: Graph) -> np.ndarray:
    """Dense unweighted Laplacian ``D - A``.

    Edge weights are ignored; every stored edge contributes -1.
    """
    n = g.num_vertices
    if n > DENSE_LIMIT:
        raise InvalidArgument(f"dense Laplacian limited to n <= {DENSE_LIMIT}, got {n}")
    lap = -g.dense_adjacency()
    lap[np.diag_indices(n)] = g.degrees()
    return lap


def _check_partition(g: Graph, p: Partition) -> None:
    if len(p) != g.num_vertices:
        raise InvalidArgument(
            f"partition has {len(p)} entries, graph has {g.num_vertices} vertices"
        )


def edge_cut(g: Graph, p: Partition) -> int:
    _check_partition(g, p)
    e = g.edge_array()
    if not len(e):
        return 0
    a = p.assignment
    return int(np.count_nonzero(a[e[:, 0]] != a[e[:, 1]]))


def edge_cut_ratio(g: Graph, p: Partition) -> float:
    if g.num_edges == 0:
        raise UndefinedRatio("edge cut ratio undefined for a graph without edges")
    return edge_cut(g, p) / g.num_edges


def is_connected(g: Graph) -> bool:
    n = g.num_vertices
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    p, idx = g.indptr, g.indices
    count = 1
    while queue:
        v = queue.popleft()
        for u in idx[p[v]:p[v + 1]]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == n


def random_bisection(g: Graph, seed: int) -> Partition:
    """Balanced random split: shuffle vertices, first half goes to side 0."""
    n = g.num_vertices
    order = np.random.default_rng(seed).permutation(n)
    a = np.ones(n, dtype=np.int8)
    a[order[: n // 2]] = 0
    return Partition(a)

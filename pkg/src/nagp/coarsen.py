"""Graph coarsening and projection of coarse partitions back to the fine graph.

Two coarseners are provided. :func:`sliding_window_coarsen` tiles the
adjacency matrix into contiguous index blocks and keeps a coarse edge for
every off-diagonal tile that contains a nonzero. :func:`hem_coarsen` is the
classic heavy-edge matching used by multilevel partitioners.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import CoarseningStalled, InvalidArgument
from .graph import Graph, Partition


class CoarsenKind(str, Enum):
    SLIDING_WINDOW = "sw"
    HEAVY_EDGE_MATCHING = "hem"


@dataclass(frozen=True, eq=False)
class CoarseMap:
    fine_size: int
    coarse_size: int
    group: np.ndarray
    kind: CoarsenKind

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.group == c)

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.group, minlength=self.coarse_size)

    def compose(self, outer: "CoarseMap") -> "CoarseMap":
        """Map fine vertices through ``self`` and then through ``outer``."""
        if outer.fine_size != self.coarse_size:
            raise InvalidArgument("maps do not chain")
        return CoarseMap(self.fine_size, outer.coarse_size, outer.group[self.group], self.kind)


@dataclass(frozen=True, eq=False)
class CoarseGraph:
    graph: Graph
    map: CoarseMap
    stalled: bool = False
    levels: int = 1


def window_steps(n: int, target_size: int):
    """Return ``(high_step, low_step, boundary)`` for tiling ``n`` rows into ``target_size`` groups."""
    high = -(-n // target_size)
    low = n // target_size
    boundary = target_size - (target_size * high - n)
    return high, low, boundary


def window_groups(n: int, target_size: int) -> np.ndarray:
    """Coarse group of each fine index: ``boundary`` blocks of ``high`` rows, then blocks of ``low``."""
    high, low, boundary = window_steps(n, target_size)
    sizes = np.full(target_size, low, dtype=np.int64)
    sizes[:boundary] = high
    return np.repeat(np.arange(target_size, dtype=np.int64), sizes)


def sliding_window_coarsen(g: Graph, target_size: int) -> CoarseGraph:
    n = g.num_vertices
    if not 2 <= target_size <= n:
        raise InvalidArgument(f"target size must lie in [2, {n}], got {target_size}")
    group = window_groups(n, target_size)
    e = g.edge_array()
    cu, cv = group[e[:, 0]], group[e[:, 1]]
    # tiles on the diagonal would become self-loops
    off = cu != cv
    coarse = Graph.from_edges(target_size, np.stack([cu[off], cv[off]], axis=1))
    nw = np.bincount(group, weights=g.node_weights, minlength=target_size).astype(np.int64)
    # unit weights: a coarse edge records presence, not multiplicity
    coarse = Graph(coarse.indptr, coarse.indices, None, nw, check=False)
    cmap = CoarseMap(n, target_size, group, CoarsenKind.SLIDING_WINDOW)
    return CoarseGraph(coarse, cmap)


def match_level(g: Graph, order, max_matches: Optional[int] = None) -> np.ndarray:
    """One heavy-edge matching sweep.

    Vertices are visited in ``order``; each unmatched vertex pairs with its
    unmatched neighbor of largest edge weight (lowest index on ties).
    Returns ``mate`` with ``mate[v] == v`` for unmatched vertices. Stops
    after ``max_matches`` pairs if given.
    """
    n = g.num_vertices
    mate = np.full(n, -1, dtype=np.int64)
    p, idx, w = g.indptr, g.indices, g.edge_weights
    made = 0
    for v in order:
        v = int(v)
        if mate[v] >= 0:
            continue
        if max_matches is not None and made >= max_matches:
            break
        best, best_w = -1, -math.inf
        for k in range(p[v], p[v + 1]):
            u = idx[k]
            # neighbors are sorted, so strict '>' keeps the lowest index on ties
            if mate[u] < 0 and w[k] > best_w:
                best, best_w = u, w[k]
        if best >= 0:
            mate[v], mate[best] = best, v
            made += 1
    unmatched = mate < 0
    mate[unmatched] = np.flatnonzero(unmatched)
    return mate


def contract(g: Graph, group: np.ndarray, m: int) -> Graph:
    """Collapse vertex groups, summing parallel edge weights and node weights."""
    e = g.edge_array()
    w = g.edge_weight_array()
    cu, cv = group[e[:, 0]], group[e[:, 1]]
    off = cu != cv
    nw = np.bincount(group, weights=g.node_weights, minlength=m).astype(np.int64)
    coarse = Graph.from_edges(m, np.stack([cu[off], cv[off]], axis=1), w[off])
    return Graph(coarse.indptr, coarse.indices, coarse.edge_weights, nw, check=False)


def _groups_from_mate(mate: np.ndarray):
    n = len(mate)
    rep = np.minimum(np.arange(n), mate)
    reps, group = np.unique(rep, return_inverse=True)
    return group.astype(np.int64), len(reps)


def hem_coarsen(g: Graph, target_size: int, seed: int = 0) -> CoarseGraph:
    """Repeated heavy-edge matching down to ``target_size`` vertices.

    Matching inside a level stops as soon as the vertex count reaches the
    target, so the result lands exactly on it unless matching stalls. A
    stall emits :class:`CoarseningStalled` and sets ``stalled``.
    """
    n = g.num_vertices
    if not 1 <= target_size < n:
        raise InvalidArgument(f"target size must lie in [1, {n}), got {target_size}")
    rng = np.random.default_rng(seed)
    cap = math.ceil(math.log2(n / target_size)) + 8
    cur = g
    total = CoarseMap(n, n, np.arange(n, dtype=np.int64), CoarsenKind.HEAVY_EDGE_MATCHING)
    levels = 0
    while cur.num_vertices > target_size and levels < cap:
        order = rng.permutation(cur.num_vertices)
        mate = match_level(cur, order, max_matches=cur.num_vertices - target_size)
        group, m = _groups_from_mate(mate)
        if m == cur.num_vertices:
            break
        cur = contract(cur, group, m)
        total = total.compose(CoarseMap(len(group), m, group, CoarsenKind.HEAVY_EDGE_MATCHING))
        levels += 1
    stalled = cur.num_vertices > target_size
    if stalled:
        warnings.warn(
            f"heavy-edge matching stalled at {cur.num_vertices} vertices (target {target_size})",
            CoarseningStalled,
            stacklevel=2,
        )
    return CoarseGraph(cur, total, stalled=stalled, levels=levels)


def interpolate(coarse_partition: Partition, cmap: CoarseMap, order=None) -> Partition:
    """Project a coarse bisection onto the fine graph.

    Each fine vertex takes the side of its group. If the fine sizes then
    differ by more than one, vertices move off the larger side starting with
    the groups nearest the median boundary in ``order`` (the coarse vertex
    order a median split used; defaults to coarse index order), lowest fine
    index first within a group.
    """
    if len(coarse_partition) != cmap.coarse_size:
        raise InvalidArgument(
            f"coarse partition has {len(coarse_partition)} entries, map expects {cmap.coarse_size}"
        )
    cside = coarse_partition.assignment
    fine = cside[cmap.group].astype(np.int8)
    n0 = int(np.count_nonzero(fine == 0))
    n1 = len(fine) - n0
    if abs(n0 - n1) <= 1:
        return Partition(fine)
    big = 0 if n0 > n1 else 1
    need = abs(n0 - n1) // 2
    order = np.arange(cmap.coarse_size) if order is None else np.asarray(order)
    ranked = [c for c in order if cside[c] == big]
    if big == 0:
        ranked = ranked[::-1]
    for c in ranked:
        for v in cmap.members(c):
            if need == 0:
                break
            fine[v] = 1 - big
            need -= 1
        if need == 0:
            break
    return Partition(fine)

"""Fiduccia-Mattheyses refinement for graph bisection."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from .errors import InvalidArgument
from .graph import Graph, Partition, edge_cut

MAX_IMBALANCE = 1
MAX_PASSES = 10


class Move(NamedTuple):
    vertex: int
    gain: int
    cut_after: int
    imbalance_after: int


@dataclass
class FmPassTrace:
    initial_cut: int
    moves: List[Move] = field(default_factory=list)
    best_prefix: int = 0
    gain_updates: int = 0

    @property
    def best_cut(self) -> int:
        return self.initial_cut if self.best_prefix == 0 else self.moves[self.best_prefix - 1].cut_after


class GainBuckets:
    """Per-side arrays of buckets indexed by gain in ``[-max_degree, max_degree]``.

    Each bucket is a min-heap of vertex ids so the lowest index comes out
    first. Entries are invalidated lazily: a popped entry counts only if the
    vertex is still free, still on that side, and still has that gain.
    """

    def __init__(self, max_degree: int):
        self.max_degree = max_degree
        width = 2 * max_degree + 1
        self.buckets = ([[] for _ in range(width)], [[] for _ in range(width)])
        self.cursor = [-max_degree - 1, -max_degree - 1]

    def insert(self, side: int, v: int, gain: int) -> None:
        heapq.heappush(self.buckets[side][gain + self.max_degree], v)
        if gain > self.cursor[side]:
            self.cursor[side] = gain

    def top(self, side: int, gain_of, side_of, locked) -> Tuple[int, int]:
        """Best live ``(gain, vertex)`` on ``side``, or ``None`` if empty."""
        d = self.max_degree
        g = self.cursor[side]
        bucket_list = self.buckets[side]
        while g >= -d:
            b = bucket_list[g + d]
            while b:
                v = b[0]
                if not locked[v] and side_of[v] == side and gain_of[v] == g:
                    self.cursor[side] = g
                    return g, v
                heapq.heappop(b)
            g -= 1
        self.cursor[side] = g
        return None


def _gains(adj, side) -> List[int]:
    gains = []
    for v, nbrs in enumerate(adj):
        s = side[v]
        ext = 0
        for u in nbrs:
            if side[u] != s:
                ext += 1
        gains.append(2 * ext - len(nbrs))
    return gains


def _check_balanced(g: Graph, p: Partition) -> None:
    if len(p) != g.num_vertices:
        raise InvalidArgument("partition length does not match graph")
    if p.imbalance > MAX_IMBALANCE:
        raise InvalidArgument(f"input partition imbalance {p.imbalance} exceeds {MAX_IMBALANCE}")


def move_allowed(sizes, from_side: int) -> bool:
    """A move may leave the sides one vertex past the balance limit.

    Only states within the limit are eligible as the pass result, so the
    slack lets even-sized bisections swap vertices one at a time.
    """
    a = sizes[from_side] - 1
    b = sizes[1 - from_side] + 1
    return abs(a - b) <= MAX_IMBALANCE + 1


def fm_pass(g: Graph, p: Partition, adj=None):
    """One full FM pass with backtracking to the best balanced prefix.

    The mover at every step is the free vertex of highest gain among the
    sides that may give up a vertex; equal gains prefer the larger side,
    then the lower vertex index. Returns ``(partition, trace)``.
    """
    _check_balanced(g, p)
    adj = g.adjacency_lists() if adj is None else adj
    n = g.num_vertices
    side = p.assignment.tolist()
    sizes = [side.count(0), side.count(1)]
    gain = _gains(adj, side)
    locked = [False] * n
    max_deg = max((len(a) for a in adj), default=0)
    buckets = GainBuckets(max_deg)
    for v in range(n):
        buckets.insert(side[v], v, gain[v])

    cut = edge_cut(g, p)
    trace = FmPassTrace(initial_cut=cut)
    best_cut, best_k = cut, 0
    updates = 0
    for _ in range(n):
        cand = None
        for s in (0, 1):
            if not move_allowed(sizes, s):
                continue
            t = buckets.top(s, gain, side, locked)
            if t is None:
                continue
            key = (t[0], sizes[s], -t[1])
            if cand is None or key > cand[0]:
                cand = (key, s, t[1])
        if cand is None:
            break
        _, s, v = cand
        gv = gain[v]
        locked[v] = True
        side[v] = 1 - s
        sizes[s] -= 1
        sizes[1 - s] += 1
        cut -= gv
        for u in adj[v]:
            if locked[u]:
                continue
            gain[u] += 2 if side[u] == s else -2
            buckets.insert(side[u], u, gain[u])
            updates += 1
        imb = abs(sizes[0] - sizes[1])
        trace.moves.append(Move(v, gv, cut, imb))
        if imb <= MAX_IMBALANCE and cut < best_cut:
            best_cut, best_k = cut, len(trace.moves)

    trace.best_prefix = best_k
    trace.gain_updates = updates
    return Partition(assignment_after(p, trace, best_k)), trace


def fm_refine(g: Graph, p: Partition, max_passes: int = MAX_PASSES) -> Partition:
    """Repeat FM passes until one fails to lower the cut."""
    _check_balanced(g, p)
    if max_passes < 0:
        raise InvalidArgument("max_passes must be nonnegative")
    adj = g.adjacency_lists()
    best = p
    for _ in range(max_passes):
        cand, trace = fm_pass(g, best, adj)
        if trace.best_cut >= trace.initial_cut:
            break
        best = cand
    return best


def assignment_after(p: Partition, trace: FmPassTrace, k: int) -> np.ndarray:
    """State of the pass after its first ``k`` moves."""
    out = p.assignment.copy()
    for mv in trace.moves[:k]:
        out[mv.vertex] = 1 - out[mv.vertex]
    return out

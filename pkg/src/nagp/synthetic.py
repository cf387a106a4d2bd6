"""Synthetic graph families for training and evaluating at desk scale."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from .dataset import NATURAL, RCM, SampleRecord, assign_split, label_graph, rcm_order, scale_source
from .errors import InvalidArgument
from .graph import Graph, is_connected
from .neural import ORDER


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def grid_graph(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def star_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def circulant(n: int, offsets: Sequence[int]) -> Graph:
    edges = [(i, (i + k) % n) for k in offsets for i in range(n)]
    return Graph.from_edges(n, edges)


def gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def random_connected(n: int, p: float, rng: np.random.Generator, attempts: int = 1000) -> Graph:
    for _ in range(attempts):
        g = gnp(n, p, rng)
        if is_connected(g):
            return g
    raise InvalidArgument(f"could not draw a connected G({n}, {p})")


def planted_partition(
    sizes: Sequence[int],
    p_in: float,
    p_out: float,
    rng: np.random.Generator,
    attempts: int = 100,
) -> Graph:
    """Contiguous blocks of the given sizes; redrawn until connected."""
    n = int(sum(sizes))
    block = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    for _ in range(attempts):
        keep = rng.random(len(iu)) < prob
        g = Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
        if is_connected(g):
            return g
    raise InvalidArgument("planted partition never came out connected")


def random_planted(rng: np.random.Generator, n: int = ORDER) -> Graph:
    """Two or three contiguous communities with randomized sizes and densities."""
    k = int(rng.choice([2, 2, 3]))
    cuts = np.sort(rng.choice(np.arange(24, n - 23), size=k - 1, replace=False))
    while k == 3 and (cuts[1] - cuts[0] < 24):
        cuts = np.sort(rng.choice(np.arange(24, n - 23), size=k - 1, replace=False))
    sizes = np.diff(np.concatenate([[0], cuts, [n]]))
    p_in = float(rng.uniform(0.08, 0.3))
    p_out = float(rng.uniform(0.002, 0.25 * p_in))
    return planted_partition(sizes.tolist(), p_in, p_out, rng)


def random_scaled_circulant(rng: np.random.Generator, reorder: bool) -> Graph:
    """Circulant on 600-2000 vertices scaled to 128 nodes, optionally RCM-ordered first."""
    while True:
        n = int(rng.integers(600, 2001))
        k = int(rng.integers(1, 4))
        offsets = sorted(set(int(o) for o in rng.integers(1, max(2, n // 64), size=k)) | {1})
        g = circulant(n, offsets)
        g128 = scale_source(g, rcm_order(g) if reorder else None)
        if g128 is not None:
            return g128


def synthetic_records(
    count: int,
    seed: int,
    circulant_fraction: float = 0.25,
    split: Optional[str] = None,
) -> List[SampleRecord]:
    """Labeled 128-node samples drawn from the planted and scaled-circulant families."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if rng.random() < circulant_fraction:
            reorder = bool(rng.random() < 0.5)
            g = random_scaled_circulant(rng, reorder)
            sid, variant = f"circ{seed}_{i}", RCM if reorder else NATURAL
        else:
            g = random_planted(rng)
            sid, variant = f"planted{seed}_{i}", NATURAL
        s = split if split is not None else assign_split(sid, variant, seed)
        out.append(label_graph(g, sid, variant, s))
    return out

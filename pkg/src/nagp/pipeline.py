"""Multilevel bisection workflow, evaluation reports and timing."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
import time
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import neural
from .coarsen import hem_coarsen, interpolate, sliding_window_coarsen
from .errors import CoarseningStalled, GraphTooSmall, InvalidArgument, NagpError, UndefinedRatio
from .graph import Graph, Partition, build_laplacian, edge_cut, is_connected, random_bisection
from .refine import fm_refine
from .spectral import compute_fiedler, median_order, median_split

log = logging.getLogger(__name__)

BASES = ("rand", "spec", "nn")
DEFAULT_BINS = (0, 256, 512, 1024)


@dataclass(frozen=True)
class PartitionMethod:
    base: str
    fm: bool = False
    coarsener: Optional[str] = None

    def __post_init__(self):
        if self.base not in BASES:
            raise InvalidArgument(f"unknown method {self.base!r}")
        if self.coarsener not in (None, "sw", "hem"):
            raise InvalidArgument(f"unknown coarsener {self.coarsener!r}")

    @classmethod
    def parse(cls, name: str, coarsener: Optional[str] = None) -> "PartitionMethod":
        name = name.strip().lower()
        fm = name.endswith("-fm")
        return cls(name[:-3] if fm else name, fm, coarsener)

    @property
    def name(self) -> str:
        return self.base + ("-fm" if self.fm else "")

    @property
    def needs_model(self) -> bool:
        return self.base == "nn"


@dataclass
class PartitionOutcome:
    partition: Partition
    coarse_size: Optional[int] = None
    notes: List[str] = field(default_factory=list)


def coarsen_to(g: Graph, target: int, coarsener: str, seed: int = 0):
    """Coarse graph of exactly ``target`` vertices and the composite map.

    A heavy-edge matching run that stalls above the target is finished with
    a sliding-window pass.
    """
    notes = []
    if coarsener == "sw":
        cg = sliding_window_coarsen(g, target)
        return cg.graph, cg.map, notes
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseningStalled)
        cg = hem_coarsen(g, target, seed)
    coarse, cmap = cg.graph, cg.map
    if cg.stalled:
        notes.append(f"hem stalled at {coarse.num_vertices}; finished with sw")
        sw = sliding_window_coarsen(coarse, target)
        coarse, cmap = sw.graph, cmap.compose(sw.map)
    return coarse.unweighted(), cmap, notes


def nn_fiedler(params: neural.ModelParams, g128: Graph) -> np.ndarray:
    return neural.forward(params, neural.laplacian_input(build_laplacian(g128)))


def partition_graph(
    g: Graph,
    method: PartitionMethod,
    params: Optional[neural.ModelParams] = None,
    seed: int = 0,
    max_passes: int = 10,
) -> PartitionOutcome:
    """Bisect ``g`` with one of the rand / spec / nn methods, optionally FM-polished.

    ``nn`` coarsens to 128 vertices (sliding window unless told otherwise),
    predicts the Fiedler vector, splits at the median and interpolates back.
    ``spec`` runs at the coarse level only when a coarsener is named.
    """
    n = g.num_vertices
    if n < 2:
        raise InvalidArgument("need at least two vertices")
    if not is_connected(g):
        raise InvalidArgument("graph is disconnected")
    order = neural.ORDER
    out = PartitionOutcome(None)
    if method.base == "rand":
        p = random_bisection(g, seed)
    elif method.base == "spec" and (method.coarsener is None or n <= order):
        p = median_split(compute_fiedler(build_laplacian(g)).fiedler)
    else:
        if method.base == "nn":
            if params is None:
                raise InvalidArgument("nn methods need a model")
            if n < order:
                raise GraphTooSmall(f"nn methods need at least {order} vertices, got {n}")
        if n > order:
            coarse, cmap, notes = coarsen_to(g, order, method.coarsener or "sw", seed)
            out.notes.extend(notes)
        else:
            coarse, cmap = g.unweighted(), None
        out.coarse_size = coarse.num_vertices
        if method.base == "nn":
            values = nn_fiedler(params, coarse)
        else:
            values = compute_fiedler(build_laplacian(coarse)).fiedler
        cp = median_split(values)
        p = interpolate(cp, cmap, median_order(values)) if n > order else cp
    if method.fm:
        p = fm_refine(g, p, max_passes)
    out.partition = p
    return out


def approximation_ratio(ec_method: int, ec_spec: int) -> float:
    if ec_spec <= 0:
        raise UndefinedRatio("spectral edge cut is zero")
    return ec_method / ec_spec


def geomean(values: Sequence[float]) -> float:
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise InvalidArgument("geomean of an empty sequence")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise InvalidArgument("geomean needs positive finite values")
    return float(math.exp(math.fsum(np.log(v)) / v.size))


def bin_by_edges(edge_counts: Dict[str, int], bin_edges: Sequence[float]) -> List[dict]:
    """Group ids into ``[e_i, e_{i+1})`` with a final open-ended ``[e_last, inf)`` bin.

    Ids below the first edge are left out.
    """
    edges = list(bin_edges)
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvalidArgument("bin edges must be strictly increasing")
    bounds = edges + [math.inf]
    bins = [{"lo": lo, "hi": hi, "ids": []} for lo, hi in zip(bounds, bounds[1:])]
    for gid, m in edge_counts.items():
        for b in bins:
            if b["lo"] <= m < b["hi"]:
                b["ids"].append(gid)
                break
    return bins


def default_bins(edge_counts: Sequence[int]) -> List[int]:
    bins = list(DEFAULT_BINS)
    top = max(edge_counts, default=0)
    while top >= bins[-1] * 2:
        bins.append(bins[-1] * 2)
    return bins


@dataclass
class EvalReport:
    rows: List[dict]
    aggregates: dict

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "aggregates": self.aggregates}, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        cols = ["graph", "vertices", "edges", "method", "edge_cut", "edge_cut_ratio", "approx_ratio", "status", "note"]
        if any("wall_time_s" in r for r in self.rows):
            cols.append("wall_time_s")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
        return buf.getvalue()


def _round(x: Optional[float]) -> Optional[float]:
    return None if x is None else round(float(x), 12)


def evaluate(
    graphs: Dict[str, Graph],
    methods: Sequence[PartitionMethod],
    params: Optional[neural.ModelParams] = None,
    seed: int = 0,
    bins: Optional[Sequence[float]] = None,
    external: Optional[Dict[str, Dict[str, Partition]]] = None,
    record_times: bool = False,
) -> EvalReport:
    """Partition every graph with every method and aggregate approximation ratios against spec.

    ``external`` maps a method name (e.g. ``"metis"``) to precomputed
    partitions per graph id. Wall times are only recorded on request so the
    default report is byte-stable across runs.
    """
    methods = list(methods)
    names = [m.name for m in methods]
    rows: List[dict] = []
    cuts: Dict[str, Dict[str, int]] = {}
    for gid in sorted(graphs):
        g = graphs[gid]
        cuts[gid] = {}
        entries = [(m.name, m) for m in methods]
        entries += [(name, parts.get(gid)) for name, parts in sorted((external or {}).items())]
        for name, m in entries:
            row = {"graph": gid, "vertices": g.num_vertices, "edges": g.num_edges, "method": name,
                   "edge_cut": None, "edge_cut_ratio": None, "approx_ratio": None, "status": "ok", "note": ""}
            try:
                t0 = time.perf_counter()
                if isinstance(m, PartitionMethod):
                    outcome = partition_graph(g, m, params, seed)
                    p, row["note"] = outcome.partition, "; ".join(outcome.notes)
                elif m is None:
                    raise InvalidArgument("no external partition supplied")
                else:
                    p = m
                    if len(p) != g.num_vertices:
                        raise InvalidArgument("external partition has wrong length")
                wall = time.perf_counter() - t0
                ec = edge_cut(g, p)
                row["edge_cut"] = ec
                row["edge_cut_ratio"] = _round(ec / g.num_edges) if g.num_edges else None
                if not p.is_balanced():
                    row["note"] = (row["note"] + "; " if row["note"] else "") + f"imbalance {p.imbalance}"
                if record_times:
                    row["wall_time_s"] = wall
                cuts[gid][name] = ec
            except NagpError as exc:
                log.warning("graph %s method %s failed: %s", gid, name, exc)
                row["status"] = f"error: {exc}"
            rows.append(row)
    for r in rows:
        spec = cuts[r["graph"]].get("spec")
        if r["edge_cut"] is not None and spec:
            r["approx_ratio"] = _round(approximation_ratio(r["edge_cut"], spec))
    all_names = names + sorted((external or {}).keys())
    aggregates = summarize(rows, all_names, {gid: graphs[gid].num_edges for gid in graphs}, bins)
    return EvalReport(rows, aggregates)


def summarize(rows, method_names, edge_counts, bins=None) -> dict:
    """Geomean approximation ratio per method, overall and per edge-count bin."""
    bins = list(bins) if bins is not None else default_bins(edge_counts.values())
    grouped = bin_by_edges(edge_counts, bins)
    ratios: Dict[str, Dict[str, float]] = {m: {} for m in method_names}
    for r in rows:
        if r["approx_ratio"] is not None and r["method"] in ratios:
            ratios[r["method"]][r["graph"]] = r["approx_ratio"]
    spec_zero = sorted({r["graph"] for r in rows if r["method"] == "spec" and r["edge_cut"] == 0})
    out = {"bin_edges": bins, "spec_zero_cut_graphs": spec_zero, "methods": {}}
    for m in method_names:
        vals = ratios[m]
        pos = {k: v for k, v in vals.items() if v > 0}
        entry = {
            "count": len(vals),
            "zero_cut_count": len(vals) - len(pos),
            "geomean_approx_ratio": _round(geomean(pos.values())) if pos else None,
            "bins": [],
        }
        for b in grouped:
            members = [pos[g] for g in b["ids"] if g in pos]
            entry["bins"].append({
                "lo": b["lo"],
                "hi": None if math.isinf(b["hi"]) else b["hi"],
                "count": len(b["ids"]),
                "geomean_approx_ratio": _round(geomean(members)) if members else None,
            })
        out["methods"][m] = entry
    return out


def bench_timing(
    g: Graph,
    methods: Sequence[str],
    repetitions: int = 5,
    params: Optional[neural.ModelParams] = None,
    seed: int = 0,
    whole: bool = False,
) -> List[dict]:
    """Median wall time per method after one untimed warmup.

    By default only the Fiedler-replacement step is timed: ``nn`` runs the
    forward pass plus median split, ``spec`` the dense eigensolve, both on
    the 128-vertex graph the network consumes. ``whole`` times
    :func:`partition_graph` end to end instead.
    """
    if repetitions < 3:
        raise InvalidArgument("repetitions must be at least 3")
    coarse = g
    if not whole and g.num_vertices > neural.ORDER:
        coarse, _, _ = coarsen_to(g, neural.ORDER, "sw", seed)
    lap = build_laplacian(coarse)
    rows = []
    for name in methods:
        m = PartitionMethod.parse(name)
        if m.needs_model and params is None:
            raise InvalidArgument("nn timing needs a model")
        if whole:
            def fn(m=m):
                partition_graph(g, m, params, seed)
        elif m.base == "nn":
            x = neural.laplacian_input(lap)

            def fn():
                median_split(neural.forward(params, x))
        elif m.base == "spec":
            def fn():
                compute_fiedler(lap)
        else:
            def fn():
                random_bisection(coarse, seed)
        fn()
        times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        rows.append({
            "method": m.name,
            "vertices": coarse.num_vertices if not whole else g.num_vertices,
            "repetitions": repetitions,
            "median_s": statistics.median(times),
            "min_s": min(times),
            "max_s": max(times),
            "flops": neural.FORWARD_FLOPS if m.base == "nn" and not whole else "",
        })
    return rows


def timing_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    cols = ["method", "vertices", "repetitions", "median_s", "min_s", "max_s", "flops"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()

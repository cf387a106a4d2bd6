"""Spectral graph bisection with a neural Fiedler-vector surrogate."""

from .coarsen import CoarseGraph, CoarseMap, hem_coarsen, interpolate, sliding_window_coarsen
from .graph import (
    Graph,
    Partition,
    build_laplacian,
    edge_cut,
    edge_cut_ratio,
    is_connected,
    random_bisection,
)
from .pipeline import PartitionMethod, approximation_ratio, evaluate, geomean, partition_graph
from .refine import fm_pass, fm_refine
from .spectral import SpectralResult, compute_fiedler, median_split, spectral_bisect

__version__ = "0.1.0"

__all__ = [
    "CoarseGraph",
    "CoarseMap",
    "Graph",
    "Partition",
    "PartitionMethod",
    "SpectralResult",
    "approximation_ratio",
    "build_laplacian",
    "compute_fiedler",
    "edge_cut",
    "edge_cut_ratio",
    "evaluate",
    "fm_pass",
    "fm_refine",
    "geomean",
    "hem_coarsen",
    "interpolate",
    "is_connected",
    "median_split",
    "partition_graph",
    "random_bisection",
    "sliding_window_coarsen",
    "spectral_bisect",
]

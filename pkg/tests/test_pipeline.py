import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from nagp.errors import GraphTooSmall, InvalidArgument, UndefinedRatio
from nagp.graph import Graph, Partition, edge_cut
from nagp.neural import FORWARD_FLOPS, INPUT_DIM, init_params
from nagp.pipeline import (
    PartitionMethod,
    approximation_ratio,
    bench_timing,
    bin_by_edges,
    coarsen_to,
    evaluate,
    geomean,
    partition_graph,
    summarize,
)
from nagp.synthetic import circulant, grid_graph, path_graph, random_connected, star_graph


@pytest.fixture(scope="module")
def tiny_model():
    # full input/output shape, narrow hidden layer keeps tests fast
    return init_params(0, INPUT_DIM, 16, 128)


def test_method_parsing():
    m = PartitionMethod.parse("NN-FM", "hem")
    assert (m.base, m.fm, m.coarsener, m.name) == ("nn", True, "hem", "nn-fm")
    assert m.needs_model
    with pytest.raises(InvalidArgument):
        PartitionMethod.parse("metis")
    with pytest.raises(InvalidArgument):
        PartitionMethod("spec", coarsener="xyz")


def test_spec_on_p128():
    out = partition_graph(path_graph(128), PartitionMethod("spec"))
    assert edge_cut(path_graph(128), out.partition) == 1


def test_nn_on_p128_invariants(tiny_model):
    g = path_graph(128)
    nn = partition_graph(g, PartitionMethod("nn"), tiny_model).partition
    nnfm = partition_graph(g, PartitionMethod("nn", fm=True), tiny_model).partition
    assert nn.is_balanced() and nnfm.is_balanced()
    assert edge_cut(g, nnfm) <= edge_cut(g, nn)


def test_nn_needs_model_and_size():
    with pytest.raises(InvalidArgument):
        partition_graph(path_graph(200), PartitionMethod("nn"))
    with pytest.raises(GraphTooSmall):
        partition_graph(path_graph(100), PartitionMethod("nn"), init_params(0, INPUT_DIM, 4, 128))


def test_disconnected_rejected():
    with pytest.raises(InvalidArgument):
        partition_graph(Graph.from_edges(4, [(0, 1)]), PartitionMethod("spec"))


@pytest.mark.parametrize("coarsener", ["sw", "hem"])
def test_all_methods_balanced_on_larger_graphs(tiny_model, coarsener):
    rng = np.random.default_rng(61)
    for _ in range(4):
        n = int(rng.integers(130, 400))
        g = random_connected(n, 5 / n, rng)
        for base in ("rand", "spec", "nn"):
            plain = partition_graph(g, PartitionMethod(base, False, coarsener), tiny_model, seed=2)
            fm = partition_graph(g, PartitionMethod(base, True, coarsener), tiny_model, seed=2)
            assert len(plain.partition) == n and plain.partition.is_balanced()
            assert fm.partition.is_balanced()
            assert edge_cut(g, fm.partition) <= edge_cut(g, plain.partition)
            if base != "rand":
                assert plain.coarse_size == 128


def test_hem_stall_finished_by_sw():
    g = star_graph(300)
    coarse, cmap, notes = coarsen_to(g, 128, "hem")
    assert coarse.num_vertices == 128 and cmap.coarse_size == 128
    assert notes and "stalled" in notes[0]


def test_approximation_ratio_examples():
    assert approximation_ratio(63, 15) == pytest.approx(4.2)
    assert approximation_ratio(1, 1) == 1.0
    assert approximation_ratio(86, 106) == pytest.approx(0.811, abs=5e-4)
    with pytest.raises(UndefinedRatio):
        approximation_ratio(3, 0)


def test_geomean_examples():
    assert geomean([1, 4]) == pytest.approx(2.0, rel=1e-15)
    assert geomean([3.7]) == pytest.approx(3.7, rel=1e-15)
    for bad in ([], [1, 0], [2, -1]):
        with pytest.raises(InvalidArgument):
            geomean(bad)


def test_geomean_matches_high_precision_oracle():
    from decimal import Decimal, getcontext

    getcontext().prec = 50
    rng = np.random.default_rng(62)
    vals = rng.uniform(0.01, 100, size=100)
    logs = sum(Decimal(float(v)).ln() for v in vals)
    ref = float((logs / Decimal(100)).exp())
    assert abs(geomean(vals) - ref) <= 1e-12 * ref


def test_bin_by_edges_examples():
    bins = bin_by_edges({"4": 423, "8": 192, "19": 833}, [0, 500, 1000])
    assert sorted(bins[0]["ids"]) == ["4", "8"]
    assert bins[1]["ids"] == ["19"]
    assert bins[2]["ids"] == []
    with pytest.raises(InvalidArgument):
        bin_by_edges({}, [0, 0, 1])


def test_summary_bins_and_global_geomean():
    rows = [
        {"graph": "a", "method": "nn", "approx_ratio": 2.0, "edge_cut": 2},
        {"graph": "b", "method": "nn", "approx_ratio": 8.0, "edge_cut": 8},
    ]
    agg = summarize(rows, ["nn"], {"a": 10, "b": 20}, bins=[0, 1000])
    m = agg["methods"]["nn"]
    assert m["geomean_approx_ratio"] == pytest.approx(4.0)
    assert m["bins"][0]["geomean_approx_ratio"] == m["geomean_approx_ratio"]
    assert m["bins"][1] == {"lo": 1000, "hi": None, "count": 0, "geomean_approx_ratio": None}


def _graphs():
    rng = np.random.default_rng(63)
    gs = {f"g{i}": random_connected(128, 0.06, rng) for i in range(3)}
    gs["grid"] = grid_graph(8, 16)
    gs["circ"] = circulant(300, [1, 2])
    return gs


def test_evaluate_report_consistency(tiny_model):
    methods = [PartitionMethod.parse(m) for m in ("rand", "rand-fm", "spec", "nn", "nn-fm")]
    report = evaluate(_graphs(), methods, tiny_model, seed=1)
    rows = report.rows
    assert len(rows) == 5 * 5
    by = {(r["graph"], r["method"]): r for r in rows}
    for gid in _graphs():
        assert by[(gid, "rand-fm")]["edge_cut"] <= by[(gid, "rand")]["edge_cut"]
        assert by[(gid, "nn-fm")]["edge_cut"] <= by[(gid, "nn")]["edge_cut"]
        assert by[(gid, "spec")]["approx_ratio"] == 1.0
    # recompute aggregates from raw rows
    for name, agg in report.aggregates["methods"].items():
        ratios = [by[(gid, name)]["edge_cut"] / by[(gid, "spec")]["edge_cut"] for gid in _graphs()]
        ref = math.exp(sum(math.log(r) for r in ratios) / len(ratios))
        assert agg["geomean_approx_ratio"] == pytest.approx(ref, rel=1e-10)
    again = evaluate(_graphs(), methods, tiny_model, seed=1)
    assert again.to_json() == report.to_json()
    assert again.to_csv() == report.to_csv()
    parsed = list(csv.DictReader(io.StringIO(report.to_csv())))
    assert len(parsed) == len(rows)
    json.loads(report.to_json())


def test_evaluate_records_failures_and_external():
    graphs = {"small": path_graph(10), "p": path_graph(20)}
    ext = {"metis": {"p": Partition([0] * 10 + [1] * 10)}}
    report = evaluate(graphs, [PartitionMethod("spec"), PartitionMethod("nn")], None, external=ext)
    status = {(r["graph"], r["method"]): r["status"] for r in report.rows}
    assert status[("small", "nn")].startswith("error")
    assert status[("small", "metis")].startswith("error")
    assert status[("p", "metis")] == "ok"
    metis = report.aggregates["methods"]["metis"]
    assert metis["geomean_approx_ratio"] == 1.0


def test_bench_timing(tiny_model):
    rows = bench_timing(circulant(600, [1, 2]), ["spec", "nn"], 3, tiny_model)
    assert [r["method"] for r in rows] == ["spec", "nn"]
    assert rows[0]["vertices"] == 128
    assert rows[1]["flops"] == FORWARD_FLOPS == 2 * (16384 * 512 + 512 * 128)
    assert all(r["min_s"] <= r["median_s"] <= r["max_s"] for r in rows)
    with pytest.raises(InvalidArgument):
        bench_timing(path_graph(130), ["spec"], 2)
    whole = bench_timing(path_graph(130), ["rand-fm"], 3, whole=True)
    assert whole[0]["vertices"] == 130


def test_flop_count_arithmetic():
    assert FORWARD_FLOPS == 16_908_288
    assert Fraction(FORWARD_FLOPS, 10**6) > 16.9

"""Command-line entry point: ``nagp {corpus,train,partition,eval,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset, neural, pipeline
from .errors import CorruptModel, InvalidArgument, NagpError, ParseError
from .graph import Graph, Partition, edge_cut

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

log = logging.getLogger("nagp")


def _load_graph(path) -> Graph:
    return dataset.parse_matrix_market(Path(path).read_bytes())


def _load_params(path):
    if path is None:
        return None
    return neural.load_model(Path(path).read_bytes())


def read_partition(text: str) -> Partition:
    vals = []
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s not in ("0", "1"):
            raise ParseError(f"partition label must be 0 or 1, got {s!r}", i)
        vals.append(int(s))
    return Partition(np.array(vals, dtype=np.int8))


def write_partition(p: Partition) -> str:
    return "".join(f"{int(v)}\n" for v in p.assignment)


def cmd_corpus_build(args) -> int:
    sources = dataset.read_sources(args.sources)
    if not sources:
        raise InvalidArgument(f"no .mtx files in {args.sources}")
    perms = dataset.read_perm_dir(args.perms)
    manifest, records = dataset.build_corpus(sources, perms, args.seed)
    dataset.save_corpus(args.out, manifest, records)
    print(f"{len(records)} records, {len(manifest.failures)} skipped -> {args.out}")
    return EXIT_OK


def cmd_corpus_synth(args) -> int:
    from .synthetic import synthetic_records

    records = synthetic_records(args.count, args.seed, args.circulant_fraction)
    manifest = dataset.CorpusManifest(args.seed, [dataset.record_meta(r) for r in records])
    dataset.save_corpus(args.out, manifest, records)
    print(f"{len(records)} synthetic records -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    _, records = dataset.load_corpus(args.corpus, split="train")
    if not records:
        raise InvalidArgument("corpus has no training records")
    x, y = dataset.as_arrays(records)
    cfg = neural.TrainConfig(
        epochs=args.epochs, batch_size=args.batch, seed=args.seed, learning_rate=args.lr,
        patience=args.patience,
    )

    def report(epoch, loss):
        log.info("epoch %d loss %.6f", epoch, loss)

    result = neural.train(x, y, cfg, callback=report)
    Path(args.out).write_bytes(neural.save_model(result.params))
    if args.history:
        Path(args.history).write_text(
            "epoch,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(result.history))
        )
    print(f"trained on {len(records)} samples for {len(result.history)} epochs, "
          f"final loss {result.history[-1]:.6f} -> {args.out}")
    return EXIT_OK


def cmd_partition(args) -> int:
    g = _load_graph(args.graph)
    method = pipeline.PartitionMethod.parse(args.method, args.coarsener)
    params = _load_params(args.model)
    outcome = pipeline.partition_graph(g, method, params, args.seed)
    Path(args.out).write_text(write_partition(outcome.partition))
    print(f"{method.name}: edge cut {edge_cut(g, outcome.partition)} "
          f"sizes ({outcome.partition.size0}, {outcome.partition.size1})")
    for note in outcome.notes:
        print(f"note: {note}")
    return EXIT_OK


def _eval_graphs(args):
    if args.corpus:
        _, records = dataset.load_corpus(args.corpus, split=args.split)
        return {r.record_id: r.graph for r in records}
    paths = sorted(Path(args.graphs).glob("*.mtx"))
    return {p.stem: _load_graph(p) for p in paths}


def _external(metis_dir, graphs):
    if metis_dir is None:
        return None
    parts = {}
    for gid in graphs:
        f = Path(metis_dir) / f"{gid}.part"
        if f.exists():
            parts[gid] = read_partition(f.read_text())
    return {"metis": parts}


def cmd_eval(args) -> int:
    graphs = _eval_graphs(args)
    if not graphs:
        raise InvalidArgument("no graphs to evaluate")
    methods = [pipeline.PartitionMethod.parse(m, args.coarsener) for m in args.methods.split(",")]
    params = _load_params(args.model)
    if any(m.needs_model for m in methods) and params is None:
        raise InvalidArgument("nn methods require --model")
    bins = [float(b) for b in args.bins.split(",")] if args.bins else None
    report = pipeline.evaluate(graphs, methods, params, args.seed, bins,
                               _external(args.metis, graphs), record_times=args.times)
    Path(args.out).write_text(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    for name, agg in report.aggregates["methods"].items():
        print(f"{name:8s} geomean approx ratio {agg['geomean_approx_ratio']}")
    return EXIT_OK


def cmd_bench(args) -> int:
    g = _load_graph(args.graph)
    params = _load_params(args.model)
    rows = pipeline.bench_timing(g, args.methods.split(","), args.reps, params, args.seed, args.whole)
    Path(args.out).write_text(pipeline.timing_csv(rows))
    for r in rows:
        print(f"{r['method']:8s} median {r['median_s']:.6f}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nagp", description="Neural-accelerated spectral graph bisection")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="build training corpora")
    csub = corpus.add_subparsers(dest="corpus_command", required=True)
    b = csub.add_parser("build", help="scale Matrix Market sources to labeled 128-node samples")
    b.add_argument("--sources", required=True)
    b.add_argument("--perms", default=None, help="directory of <source>.<ordering>.perm files")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_corpus_build)
    s = csub.add_parser("synth", help="generate a synthetic planted-partition / circulant corpus")
    s.add_argument("--count", type=int, default=560)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--circulant-fraction", type=float, default=0.25)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_corpus_synth)

    t = sub.add_parser("train", help="train the Fiedler-vector model")
    t.add_argument("--corpus", required=True)
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--patience", type=int, default=10)
    t.add_argument("--history", default=None, help="write per-epoch loss CSV here")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("partition", help="bisect one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", required=True, choices=["rand", "spec", "nn", "rand-fm", "spec-fm", "nn-fm"])
    p.add_argument("--coarsener", choices=["sw", "hem"], default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_partition)

    e = sub.add_parser("eval", help="evaluate methods over a corpus or a graph directory")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus")
    src.add_argument("--graphs")
    e.add_argument("--split", default="test", help="corpus split to evaluate (default: test)")
    e.add_argument("--methods", default="rand,rand-fm,spec,nn,nn-fm")
    e.add_argument("--coarsener", choices=["sw", "hem"], default=None)
    e.add_argument("--model", default=None)
    e.add_argument("--bins", default=None, help="comma-separated increasing edge-count bin edges")
    e.add_argument("--metis", default=None, help="directory of <graph>.part files to include as 'metis'")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--times", action="store_true", help="record wall times (report no longer byte-stable)")
    e.add_argument("--out", required=True)
    e.add_argument("--csv", default=None)
    e.set_defaults(func=cmd_eval)

    bn = sub.add_parser("bench", help="time the Fiedler-vector step")
    bn.add_argument("--graph", required=True)
    bn.add_argument("--methods", default="spec,nn")
    bn.add_argument("--reps", type=int, default=5)
    bn.add_argument("--model", default=None)
    bn.add_argument("--seed", type=int, default=0)
    bn.add_argument("--whole", action="store_true", help="time the full partition workflow")
    bn.add_argument("--out", required=True)
    bn.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidArgument, ParseError, CorruptModel, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NagpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

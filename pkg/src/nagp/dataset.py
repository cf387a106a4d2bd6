"""Corpus construction: Matrix Market ingestion, reordering, scaling to 128 nodes, labeling."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .coarsen import sliding_window_coarsen
from .errors import InvalidArgument, NagpError, ParseError, UnsupportedField
from .graph import Graph, build_laplacian, is_connected
from .neural import ORDER
from .spectral import compute_fiedler

log = logging.getLogger(__name__)

MIN_NODES = 512  # exclusive
MAX_NODES = 1_000_000  # inclusive
# train share mirrors 1156 train / 126 test graphs
TRAIN_FRACTION = 1156 / (1156 + 126)
NATURAL = "natural"
RCM = "rcm"

_FIELDS = {"pattern", "real", "integer", "complex"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def parse_matrix_market(data) -> Graph:
    """Read the sparsity pattern of a coordinate Matrix Market file as a graph.

    General matrices are symmetrized (an edge for either direction), the
    diagonal is dropped, repeated entries are merged and values discarded.
    """
    if isinstance(data, (bytes, bytearray, memoryview)):
        text = bytes(data).decode("utf-8", errors="replace")
    else:
        text = str(data)
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise ParseError("missing '%%MatrixMarket matrix' banner", 1)
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt != "coordinate":
        raise ParseError(f"only coordinate format is supported, got {fmt!r}", 1)
    if fld not in _FIELDS:
        raise ParseError(f"unknown field {fld!r}", 1)
    if fld == "complex":
        raise UnsupportedField("complex matrices are not supported", 1)
    if sym not in _SYMMETRIES:
        raise ParseError(f"unknown symmetry {sym!r}", 1)

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        s = lines[lineno - 1].strip()
        if s and not s.startswith("%"):
            size = s.split()
            break
    if size is None:
        raise ParseError("missing size line", lineno)
    try:
        rows, cols, nnz = (int(t) for t in size)
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size)!r}", lineno) from None
    if rows != cols:
        raise ParseError(f"matrix is not square ({rows}x{cols})", lineno)
    if rows < 0 or nnz < 0:
        raise ParseError("negative dimensions", lineno)

    need = 2 if fld == "pattern" else 3
    ii = np.empty(nnz, dtype=np.int64)
    jj = np.empty(nnz, dtype=np.int64)
    k = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        s = lines[lineno - 1].strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) < need:
            raise ParseError(f"expected {need} fields, got {len(parts)}", lineno)
        if k >= nnz:
            raise ParseError(f"more than {nnz} entries", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            if fld != "pattern":
                float(parts[2])
        except ValueError:
            raise ParseError(f"malformed entry {s!r}", lineno) from None
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise ParseError(f"entry ({i}, {j}) out of range", lineno)
        ii[k], jj[k] = i - 1, j - 1
        k += 1
    if k != nnz:
        raise ParseError(f"expected {nnz} entries, found {k}", lineno)
    return Graph.from_edges(rows, np.stack([ii, jj], axis=1)).unweighted()


def write_matrix_market(g: Graph) -> bytes:
    """Pattern-symmetric coordinate file, lower triangle, 1-based."""
    e = g.edge_array()
    out = [
        "%%MatrixMarket matrix coordinate pattern symmetric",
        f"{g.num_vertices} {g.num_vertices} {len(e)}",
    ]
    out.extend(f"{v + 1} {u + 1}" for u, v in e.tolist())
    return ("\n".join(out) + "\n").encode()


def select_eligible(g: Graph) -> bool:
    n = g.num_vertices
    return MIN_NODES < n <= MAX_NODES and is_connected(g)


def bandwidth(g: Graph) -> int:
    e = g.edge_array()
    return int(np.abs(e[:, 0] - e[:, 1]).max()) if len(e) else 0


def rcm_order(g: Graph) -> np.ndarray:
    """Reverse Cuthill-McKee ordering; ``perm[new] = old``.

    Starts from the minimum-degree vertex (lowest index on ties) and visits
    each vertex's unvisited neighbors by ascending degree, then index.
    """
    if not is_connected(g):
        raise InvalidArgument("RCM ordering requires a connected graph")
    n = g.num_vertices
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    deg = g.degrees()
    start = int(np.argmin(deg))
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        nbrs = [u for u in g.neighbors(v).tolist() if not seen[u]]
        nbrs.sort(key=lambda u: (deg[u], u))
        for u in nbrs:
            seen[u] = True
            order.append(u)
            queue.append(u)
    return np.asarray(order[::-1], dtype=np.int64)


def check_permutation(perm, n: int) -> np.ndarray:
    p = np.asarray(perm, dtype=np.int64)
    if p.shape != (n,) or not np.array_equal(np.sort(p), np.arange(n)):
        raise InvalidArgument("permutation is not a bijection on [0, n)")
    return p


def apply_permutation(g: Graph, perm) -> Graph:
    """Relabel so new vertex ``k`` is old vertex ``perm[k]``."""
    n = g.num_vertices
    p = check_permutation(perm, n)
    new_of_old = np.empty(n, dtype=np.int64)
    new_of_old[p] = np.arange(n)
    e = g.edge_array()
    relabeled = Graph.from_edges(n, new_of_old[e], g.edge_weight_array())
    return Graph(relabeled.indptr, relabeled.indices, relabeled.edge_weights, g.node_weights[p], check=False)


def read_permutation(text: str) -> np.ndarray:
    """Permutation file: first line ``n``, then ``n`` zero-based indices."""
    tokens = text.split()
    if not tokens:
        raise ParseError("empty permutation file", 1)
    try:
        n = int(tokens[0])
        vals = np.array([int(t) for t in tokens[1:]], dtype=np.int64)
    except ValueError:
        raise ParseError("non-integer token in permutation file") from None
    if len(vals) != n:
        raise ParseError(f"expected {n} indices, found {len(vals)}")
    return check_permutation(vals, n)


def write_permutation(perm) -> str:
    perm = np.asarray(perm)
    return f"{len(perm)}\n" + "".join(f"{int(v)}\n" for v in perm)


@dataclass(eq=False)
class SampleRecord:
    source_id: str
    variant: str
    graph: Graph
    laplacian: np.ndarray  # float32, 128*128 row-major
    label: np.ndarray  # float32, 128
    split: str

    @property
    def record_id(self) -> str:
        return f"{self.source_id}__{self.variant}"


@dataclass
class CorpusManifest:
    seed: int
    records: List[dict] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)
    min_nodes: int = MIN_NODES
    max_nodes: int = MAX_NODES

    def to_json(self) -> str:
        body = {
            "seed": self.seed,
            "filter_bounds": {"min_nodes_exclusive": self.min_nodes, "max_nodes_inclusive": self.max_nodes},
            "records": self.records,
            "failures": self.failures,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CorpusManifest":
        body = json.loads(text)
        b = body.get("filter_bounds", {})
        return cls(
            seed=body["seed"],
            records=body["records"],
            failures=body.get("failures", []),
            min_nodes=b.get("min_nodes_exclusive", MIN_NODES),
            max_nodes=b.get("max_nodes_inclusive", MAX_NODES),
        )


def assign_split(source_id: str, variant: str, seed: int) -> str:
    h = hashlib.sha256(f"{seed}\x00{source_id}\x00{variant}".encode()).digest()
    u = int.from_bytes(h[:8], "little") / 2**64
    return "train" if u < TRAIN_FRACTION else "test"


def label_graph(g128: Graph, source_id: str, variant: str, split: str) -> SampleRecord:
    """Attach the canonical Fiedler vector of a 128-node connected graph."""
    if g128.num_vertices != ORDER:
        raise InvalidArgument(f"sample graphs must have {ORDER} vertices")
    lap = build_laplacian(g128)
    res = compute_fiedler(lap)
    return SampleRecord(
        source_id,
        variant,
        g128,
        lap.astype(np.float32).reshape(-1),
        res.fiedler.astype(np.float32),
        split,
    )


def scale_source(g: Graph, perm=None) -> Optional[Graph]:
    """Permute then coarsen to 128 nodes; ``None`` when the result is disconnected."""
    if perm is not None:
        g = apply_permutation(g, perm)
    coarse = sliding_window_coarsen(g, ORDER).graph.unweighted()
    return coarse if is_connected(coarse) else None


def records_for_source(
    source_id: str,
    g: Graph,
    external_perms: Optional[Mapping[str, Sequence[int]]] = None,
    seed: int = 0,
    check_eligible: bool = True,
) -> Tuple[List[SampleRecord], List[dict]]:
    records, failures = [], []
    if check_eligible and not select_eligible(g):
        return [], [{"source": source_id, "variant": None, "reason": "ineligible"}]
    variants: List[Tuple[str, Optional[np.ndarray]]] = [(NATURAL, None)]
    try:
        variants.append((RCM, rcm_order(g)))
    except NagpError as exc:
        failures.append({"source": source_id, "variant": RCM, "reason": str(exc)})
    for name, perm in sorted((external_perms or {}).items()):
        variants.append((f"perm:{name}", perm))
    for variant, perm in variants:
        try:
            g128 = scale_source(g, perm)
            if g128 is None:
                failures.append({"source": source_id, "variant": variant, "reason": "disconnected after scaling"})
                continue
            records.append(label_graph(g128, source_id, variant, assign_split(source_id, variant, seed)))
        except NagpError as exc:
            failures.append({"source": source_id, "variant": variant, "reason": str(exc)})
    return records, failures


def build_corpus(
    sources: Iterable[Tuple[str, bytes]],
    external_perms: Optional[Mapping[str, Mapping[str, Sequence[int]]]] = None,
    seed: int = 0,
) -> Tuple[CorpusManifest, List[SampleRecord]]:
    """Turn Matrix Market payloads into labeled 128-node samples.

    ``external_perms`` maps source id to ``{ordering name: permutation}``.
    Failures are recorded in the manifest and never abort the build.
    """
    manifest = CorpusManifest(seed)
    records: List[SampleRecord] = []
    for source_id, payload in sorted(sources, key=lambda s: s[0]):
        try:
            g = parse_matrix_market(payload)
        except NagpError as exc:
            log.warning("skipping %s: %s", source_id, exc)
            manifest.failures.append({"source": source_id, "variant": None, "reason": str(exc)})
            continue
        recs, fails = records_for_source(source_id, g, (external_perms or {}).get(source_id), seed)
        for f in fails:
            log.info("source %s variant %s skipped: %s", f["source"], f["variant"], f["reason"])
        records.extend(recs)
        manifest.failures.extend(fails)
    manifest.records = [record_meta(r) for r in records]
    return manifest, records


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _record_payloads(r: SampleRecord) -> Tuple[bytes, bytes]:
    return write_matrix_market(r.graph), np.asarray(r.label, dtype="<f4").tobytes()


def record_meta(r: SampleRecord) -> dict:
    graph_bytes, label_bytes = _record_payloads(r)
    return {
        "id": r.record_id,
        "source": r.source_id,
        "variant": r.variant,
        "split": r.split,
        "edges": r.graph.num_edges,
        "graph_sha256": _sha(graph_bytes),
        "label_sha256": _sha(label_bytes),
    }


def _dirname(record_id: str) -> str:
    return record_id.replace("/", "_").replace(":", "-")


def save_corpus(out_dir, manifest: CorpusManifest, records: Sequence[SampleRecord]) -> Path:
    """One directory per record with ``graph.mtx``, ``label.f32`` and ``meta.json``;
    ``manifest.json`` at the top."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in records:
        d = out / _dirname(r.record_id)
        d.mkdir(exist_ok=True)
        graph_bytes, label_bytes = _record_payloads(r)
        (d / "graph.mtx").write_bytes(graph_bytes)
        (d / "label.f32").write_bytes(label_bytes)
        (d / "meta.json").write_text(json.dumps(record_meta(r), indent=2, sort_keys=True) + "\n")
    (out / "manifest.json").write_text(manifest.to_json())
    return out


def load_corpus(corpus_dir, split: Optional[str] = None, verify: bool = True):
    """Read a stored corpus; checks checksums and eigen-residuals when ``verify``."""
    root = Path(corpus_dir)
    manifest = CorpusManifest.from_json((root / "manifest.json").read_text())
    records = []
    for meta in manifest.records:
        if split is not None and meta["split"] != split:
            continue
        d = root / _dirname(meta["id"])
        graph_bytes = (d / "graph.mtx").read_bytes()
        label_bytes = (d / "label.f32").read_bytes()
        if verify and (_sha(graph_bytes) != meta["graph_sha256"] or _sha(label_bytes) != meta["label_sha256"]):
            raise NagpError(f"checksum mismatch for record {meta['id']}")
        g = parse_matrix_market(graph_bytes)
        lap = build_laplacian(g)
        label = np.frombuffer(label_bytes, dtype="<f4").astype(np.float32)
        if verify:
            verify_label(lap, label)
        records.append(
            SampleRecord(meta["source"], meta["variant"], g, lap.astype(np.float32).reshape(-1), label, meta["split"])
        )
    return manifest, records


def verify_label(lap: np.ndarray, label: np.ndarray, tol: float = 1e-6) -> None:
    v = label.astype(np.float64)
    if abs(np.linalg.norm(v) - 1) > tol:
        raise NagpError("stored label is not unit norm")
    lam = float(v @ lap @ v)
    resid = np.linalg.norm(lap @ v - lam * v)
    # float32 rounding of a unit vector perturbs L @ v by at most ~2**-24 * ||L||_2
    if resid > tol * max(1.0, 2 * float(lap.diagonal().max())):
        raise NagpError(f"stored label fails eigen-residual check ({resid:.2e})")


def as_arrays(records: Sequence[SampleRecord]):
    x = np.stack([r.laplacian for r in records]).astype(np.float32)
    y = np.stack([r.label for r in records]).astype(np.float32)
    return x, y


def read_sources(source_dir) -> List[Tuple[str, bytes]]:
    root = Path(source_dir)
    return [(p.stem, p.read_bytes()) for p in sorted(root.glob("*.mtx"))]


def read_perm_dir(perm_dir) -> Dict[str, Dict[str, np.ndarray]]:
    """Files named ``<source>.<ordering>.perm``."""
    out: Dict[str, Dict[str, np.ndarray]] = {}
    if perm_dir is None:
        return out
    for p in sorted(Path(perm_dir).glob("*.perm")):
        stem = p.name[: -len(".perm")]
        if "." not in stem:
            raise ParseError(f"permutation file {p.name} must be named <source>.<ordering>.perm")
        source, name = stem.rsplit(".", 1)
        out.setdefault(source, {})[name] = read_permutation(p.read_text())
    return out

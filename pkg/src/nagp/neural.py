"""Dense Fiedler-vector regressor: flattened Laplacian -> tanh hidden layer -> linear output.

Everything is plain numpy. Parameters are float32 by default; the
gradient code is dtype-generic so it can be checked in float64.
"""

from __future__ import annotations

import io
import logging
import struct
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import CorruptModel, InvalidArgument, TrainingDiverged

log = logging.getLogger(__name__)

ORDER = 128
INPUT_DIM = ORDER * ORDER
HIDDEN = 512
OUTPUT_DIM = ORDER
EPS = 1e-10
MAGIC = b"NAGP"
VERSION = 1
FORWARD_FLOPS = 2 * (INPUT_DIM * HIDDEN + HIDDEN * OUTPUT_DIM)


@dataclass
class ModelParams:
    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    def tensors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.w1, self.b1, self.w2

    def parameter_count(self) -> int:
        return sum(t.size for t in self.tensors())

    def copy(self) -> "ModelParams":
        return ModelParams(self.w1.copy(), self.b1.copy(), self.w2.copy())

    def zeros_like(self) -> "ModelParams":
        return ModelParams(*(np.zeros_like(t) for t in self.tensors()))

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors())


def init_params(
    seed: int,
    input_dim: int = INPUT_DIM,
    hidden: int = HIDDEN,
    output_dim: int = OUTPUT_DIM,
    dtype=np.float32,
) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer."""
    rng = np.random.default_rng(seed)
    k1 = 1.0 / np.sqrt(input_dim)
    k2 = 1.0 / np.sqrt(hidden)
    w1 = rng.uniform(-k1, k1, size=(hidden, input_dim)).astype(dtype)
    b1 = rng.uniform(-k1, k1, size=hidden).astype(dtype)
    w2 = rng.uniform(-k2, k2, size=(output_dim, hidden)).astype(dtype)
    return ModelParams(w1, b1, w2)


def _as_batch(params: ModelParams, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=params.w1.dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise InvalidArgument(f"expected inputs of length {params.input_dim}, got shape {x.shape[1:]}")
    return x, single


def forward(params: ModelParams, x) -> np.ndarray:
    """``W2 @ tanh(W1 @ x + b1)`` for one input or a batch of rows."""
    xb, single = _as_batch(params, x)
    out = np.tanh(xb @ params.w1.T + params.b1) @ params.w2.T
    return out[0] if single else out


def l1_loss(pred, target) -> float:
    """Mean absolute error over the entries (and rows, for batches)."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise InvalidArgument(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target), dtype=np.float64))


def backward(params: ModelParams, x, target) -> Tuple[float, ModelParams]:
    """Loss and exact (sub)gradients of the batch-mean L1 loss.

    Uses ``sign(0) = 0`` at the kink.
    """
    xb, single = _as_batch(params, x)
    y = np.asarray(target, dtype=params.w1.dtype)
    if single:
        y = y[None, :]
    if y.shape != (xb.shape[0], params.output_dim):
        raise InvalidArgument(f"target shape {y.shape} does not match outputs")
    h = np.tanh(xb @ params.w1.T + params.b1)
    pred = h @ params.w2.T
    diff = pred - y
    loss = float(np.mean(np.abs(diff), dtype=np.float64))
    d_out = np.sign(diff) / diff.size
    g_w2 = d_out.T @ h
    d_pre = (d_out @ params.w2) * (1 - h * h)
    g_w1 = d_pre.T @ xb
    g_b1 = d_pre.sum(axis=0)
    return loss, ModelParams(g_w1, g_b1, g_w2)


@dataclass
class AdagradState:
    accum: ModelParams
    learning_rate: float = 1e-3
    epsilon: float = EPS
    steps: int = 0

    @classmethod
    def for_params(cls, params: ModelParams, learning_rate: float = 1e-3, epsilon: float = EPS):
        return cls(params.zeros_like(), learning_rate, epsilon)


def adagrad_step(params: ModelParams, grads: ModelParams, state: AdagradState):
    """In-place Adagrad update: ``G += g**2``; ``theta -= lr * g / (sqrt(G) + eps)``.

    Returns ``(params, state)`` for convenience.
    """
    for g in grads.tensors():
        if not np.isfinite(g).all():
            raise TrainingDiverged("non-finite gradient")
    for theta, g, acc in zip(params.tensors(), grads.tensors(), state.accum.tensors()):
        if theta.shape != g.shape or acc.shape != g.shape:
            raise InvalidArgument("gradient shape mismatch")
        acc += g * g
        denom = np.sqrt(acc)
        denom += state.epsilon
        # with epsilon == 0 an untouched entry would be 0/0; its denom stays 0
        np.divide(g, denom, out=denom, where=denom > 0)
        denom *= state.learning_rate
        theta -= denom
    state.steps += 1
    return params, state


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    learning_rate: float = 1e-3
    shuffle: bool = True
    # stop once the epoch loss improves by less than this over `patience` epochs
    min_delta: float = 1e-5
    patience: int = 10
    strict: bool = True
    hidden: int = HIDDEN

    def validate(self) -> None:
        if self.epochs < 1:
            raise InvalidArgument("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidArgument("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise InvalidArgument("learning_rate must be positive")


@dataclass
class TrainResult:
    params: ModelParams
    history: List[float] = field(default_factory=list)
    state: Optional[AdagradState] = None


def _single_thread():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=1)


def train(inputs, targets, cfg: Optional[TrainConfig] = None, callback=None) -> TrainResult:
    """Mini-batch Adagrad on the L1 loss.

    ``inputs`` is ``(N, D)`` and ``targets`` is ``(N, K)``. The history holds
    the mean per-sample training loss of each epoch, measured on the forward
    pass before each batch update. Strict mode pins BLAS to one thread so
    runs are bitwise repeatable.
    """
    cfg = TrainConfig() if cfg is None else cfg
    cfg.validate()
    x = np.ascontiguousarray(inputs, dtype=np.float32)
    y = np.ascontiguousarray(targets, dtype=np.float32)
    if x.ndim != 2 or y.ndim != 2 or len(x) != len(y):
        raise InvalidArgument("inputs and targets must be 2-D with equal row counts")
    if len(x) == 0:
        raise InvalidArgument("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(int(rng.integers(2**31)), x.shape[1], cfg.hidden, y.shape[1])
    state = AdagradState.for_params(params, cfg.learning_rate)
    history: List[float] = []
    n = len(x)
    with _single_thread() if cfg.strict else nullcontext():
        for epoch in range(cfg.epochs):
            order = rng.permutation(n) if cfg.shuffle else np.arange(n)
            total = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                loss, grads = backward(params, x[idx], y[idx])
                total += loss * len(idx)
                adagrad_step(params, grads, state)
            epoch_loss = total / n
            if not np.isfinite(epoch_loss):
                raise TrainingDiverged(f"loss became {epoch_loss} at epoch {epoch}")
            history.append(epoch_loss)
            log.debug("epoch %d loss %.6f", epoch, epoch_loss)
            if callback is not None:
                callback(epoch, epoch_loss)
            if len(history) > cfg.patience and history[-cfg.patience - 1] - min(history[-cfg.patience:]) < cfg.min_delta:
                log.info("early stop at epoch %d", epoch)
                break
    return TrainResult(params, history, state)


def save_model(params: ModelParams) -> bytes:
    """Serialize as ``NAGP`` magic, u32 version, then per tensor: rank, dims, f32 payload."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    for t in params.tensors():
        buf.write(struct.pack("<I", t.ndim))
        buf.write(struct.pack(f"<{t.ndim}I", *t.shape))
        buf.write(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return buf.getvalue()


def model_file_size(params: ModelParams) -> int:
    return 8 + sum(4 + 4 * t.ndim + 4 * t.size for t in params.tensors())


def load_model(data: bytes) -> ModelParams:
    mv = memoryview(data)
    pos = 0

    def take(k: int) -> memoryview:
        nonlocal pos
        if pos + k > len(mv):
            raise CorruptModel(f"truncated model file at byte {pos}")
        out = mv[pos:pos + k]
        pos += k
        return out

    if bytes(take(4)) != MAGIC:
        raise CorruptModel("bad magic")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise CorruptModel(f"unsupported model version {version}")
    tensors = []
    for rank_expected in (2, 1, 2):
        (rank,) = struct.unpack("<I", take(4))
        if rank != rank_expected:
            raise CorruptModel(f"tensor {len(tensors)} has rank {rank}, expected {rank_expected}")
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        count = int(np.prod(dims))
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(dims).astype(np.float32)
        tensors.append(arr)
    if pos != len(mv):
        raise CorruptModel("trailing bytes after last tensor")
    w1, b1, w2 = tensors
    if b1.shape[0] != w1.shape[0] or w2.shape[1] != w1.shape[0]:
        raise CorruptModel("tensor shapes are inconsistent")
    params = ModelParams(w1, b1, w2)
    if not params.all_finite():
        raise CorruptModel("non-finite weights")
    return params


def laplacian_input(laplacian, scale: bool = False) -> np.ndarray:
    """Row-major flattening of a 128x128 Laplacian, optionally divided by its max degree."""
    lap = np.asarray(laplacian, dtype=np.float32)
    if lap.shape != (ORDER, ORDER):
        raise InvalidArgument(f"model input must be a {ORDER}x{ORDER} Laplacian, got {lap.shape}")
    if scale:
        top = float(lap.diagonal().max())
        if top > 0:
            lap = lap / top
    return lap.reshape(-1)

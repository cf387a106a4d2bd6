"""Exact spectral bisection via a dense symmetric eigensolve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, InvalidArgument, SolverFailure
from .graph import DENSE_LIMIT, Graph, Partition, build_laplacian

RESIDUAL_TOL = 1e-8
CONNECTIVITY_TOL = 1e-8
# relative slack when deciding which entry has the largest magnitude
_SIGN_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralResult:
    lambda2: float
    fiedler: np.ndarray


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry is positive.

    Entries within a tiny relative tolerance of the maximum count as tied;
    the lowest index among them decides.
    """
    v = np.asarray(v)
    mag = np.abs(v)
    top = mag.max() if v.size else 0.0
    if top == 0:
        return v.copy()
    lead = int(np.flatnonzero(mag >= top * (1 - _SIGN_TIE_RTOL))[0])
    return -v if v[lead] < 0 else v.copy()


def compute_fiedler(
    laplacian: np.ndarray,
    residual_tol: float = RESIDUAL_TOL,
    connectivity_tol: float = CONNECTIVITY_TOL,
) -> SpectralResult:
    """Second-smallest eigenpair of a dense Laplacian.

    When the second eigenvalue is repeated, the eigenvector returned by the
    solver for the second position in ascending order is used as is.
    """
    lap = np.asarray(laplacian, dtype=np.float64)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise InvalidArgument("Laplacian must be square")
    n = lap.shape[0]
    if n < 2:
        raise InvalidArgument("need at least two vertices")
    if n > DENSE_LIMIT:
        raise InvalidArgument(f"dense eigensolve limited to n <= {DENSE_LIMIT}")
    try:
        vals, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(str(exc)) from exc
    lam2 = float(vals[1])
    if lam2 <= connectivity_tol:
        raise DegenerateSpectrum(f"lambda2 = {lam2:.3e}; graph is disconnected")
    v = vecs[:, 1]
    v = canonical_sign(v / np.linalg.norm(v))
    resid = np.linalg.norm(lap @ v - lam2 * v)
    if not np.isfinite(resid) or resid > residual_tol * max(1.0, lam2):
        raise SolverFailure(f"eigen-residual {resid:.3e} exceeds tolerance")
    return SpectralResult(lam2, v)


def median_split(values) -> Partition:
    """Lower half (by value, then index) goes to side 0."""
    v = np.asarray(values)
    n = len(v)
    if n < 2:
        raise InvalidArgument("need at least two values")
    order = np.argsort(v, kind="stable")
    a = np.ones(n, dtype=np.int8)
    a[order[: n // 2]] = 0
    return Partition(a)


def median_order(values) -> np.ndarray:
    """Vertex order used by :func:`median_split`."""
    return np.argsort(np.asarray(values), kind="stable")


def spectral_bisect(g: Graph) -> Partition:
    return median_split(compute_fiedler(build_laplacian(g)).fiedler)

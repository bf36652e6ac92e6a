"""Dense linear algebra, Haar sampling and the truncated-Taylor machinery.

Density matrices, unitaries and state vectors are plain complex128 numpy
arrays.  Hamiltonians are anything exposing ``dim``, ``num_terms``,
``matvec(x)`` and ``to_dense()`` (see :class:`hamup.hamiltonian.HamiltonianRepr`).
"""

from __future__ import annotations

import math

import numpy as np

from ._rng import as_generator
from .errors import InvalidParameterError, ResourceLimitError, ShapeError

DENSE_CAP = 2**12
ROUNDOFF = 2.0**-52
SLICE_NORM = 1.0


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Sample a Haar-distributed ``dim x dim`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` pushed back
    into ``Q`` so the result is Haar rather than QR-convention biased.
    """
    if dim < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
    rng = as_generator(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def truncation_degree(norm_bound: float, dim: int, eps: float) -> int:
    """Smallest even ``l`` with ``(l+1)(ln(l+1) - 1 - ln b) >= 2*norm_bound + ln(dim) + ln(1/eps)``.

    Here ``b = max(1, norm_bound)``.  With this degree ``T_l / tr(T_l)`` is
    within ``eps`` in trace distance of the Gibbs state of any positive
    semidefinite Hamiltonian whose operator norm is at most ``norm_bound``:
    the Taylor remainder is ``b^(l+1) / (l+1)!`` and ``(l+1)!`` is at least
    ``((l+1)/e)^(l+1)``.  For ``norm_bound <= 1`` the ``ln b`` term vanishes.
    """
    if not eps > 0:
        raise InvalidParameterError(f"accuracy must be positive, got {eps}")
    if not (math.isfinite(norm_bound) and norm_bound >= 0):
        raise InvalidParameterError(f"norm bound must be finite and >= 0, got {norm_bound}")
    if dim < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
    rhs = 2.0 * norm_bound + math.log(dim) + math.log(1.0 / eps)
    scale = math.log(max(1.0, norm_bound))
    l = 0
    while (l + 1) * (math.log(l + 1) - 1.0 - scale) < rhs:
        l += 2
    return l


def taylor_apply(ham, v: np.ndarray, l: int) -> np.ndarray:
    """Apply ``T_l = sum_{k<=l} (-H)^k / k!`` to a vector or a column block.

    Only ``ham.matvec`` is used, so ``H`` is never materialized.  The series is
    accumulated term by term (``x_k = -H x_{k-1} / k``), which keeps a single
    work block alive besides the running sum.
    """
    v = np.asarray(v)
    if v.shape[0] != ham.dim:
        raise ShapeError(f"vector has leading dimension {v.shape[0]}, Hamiltonian has {ham.dim}")
    out = np.array(v, dtype=np.complex128, copy=True)
    if ham.num_terms == 0 or l == 0:
        return out
    term = out.copy()
    for k in range(1, l + 1):
        term = ham.matvec(term)
        term *= -1.0 / k
        out += term
    return out


def taylor_is_stable(norm_bound: float, dim: int, eps: float) -> bool:
    """Whether a single ``T_l`` survives double-precision cancellation at accuracy ``eps``.

    The partial sums of ``T_l`` reach ``exp(norm_bound)`` while Gibbs weights
    can be as small as ``exp(-norm_bound)``, so roundoff relative to the result
    is about ``D * 2**-52 * exp(2 * norm_bound)``.
    """
    return math.log(dim * ROUNDOFF) + 2.0 * norm_bound <= math.log(eps / 16.0)


def _slice_degree(a: float, tol: float) -> int:
    """Smallest ``l`` with ``exp(2a) a^(l+1) / (l+1)! <= tol``: the relative error of one slice."""
    if a == 0:
        return 0
    l, term = 0, a
    while math.exp(2.0 * a) * term > tol:
        l += 1
        term *= a / (l + 1)
    return l


class _Scaled:
    def __init__(self, ham, factor: float):
        self.ham = ham
        self.factor = factor
        self.dim = ham.dim
        self.num_terms = ham.num_terms

    def matvec(self, x):
        return self.factor * self.ham.matvec(x)


def sliced_half_exp_apply(ham, v: np.ndarray, eps: float) -> np.ndarray:
    """``exp(-H/2) v`` as ``s`` consecutive Taylor slices with ``||H|| / (2s) <= SLICE_NORM``.

    Each slice is accurate to relative error ``eps / (4 s)``, so the squared
    norms of the result give Gibbs weights to relative accuracy ``~eps``
    without cancellation at any norm bound.
    """
    if not 0 < eps <= 1:
        raise InvalidParameterError(f"accuracy must lie in (0, 1], got {eps}")
    half = 0.5 * ham.norm_bound
    s = max(1, math.ceil(half / SLICE_NORM))
    l = _slice_degree(half / s, eps / (4.0 * s))
    op = _Scaled(ham, 0.5 / s)
    out = np.asarray(v, dtype=np.complex128)
    for _ in range(s):
        out = taylor_apply(op, out, l)
    return out


def gibbs_from_matrix(h: np.ndarray) -> np.ndarray:
    """``exp(-h) / tr exp(-h)`` for a dense Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    weights = np.exp(-(w - w.min()))
    weights /= weights.sum()
    rho = (v * weights) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def dense_gibbs(ham, cap: int = DENSE_CAP) -> np.ndarray:
    """Exact Gibbs state of ``ham``; the reference oracle for every fast path."""
    if ham.dim > cap:
        raise ResourceLimitError(f"dense Gibbs state requested at D={ham.dim} > cap {cap}")
    if ham.num_terms == 0:
        return np.eye(ham.dim, dtype=np.complex128) / ham.dim
    return gibbs_from_matrix(ham.to_dense())


def truncated_exponential(h: np.ndarray, l: int) -> np.ndarray:
    """Dense ``T_l`` for a dense Hermitian matrix (test oracle)."""
    dim = h.shape[0]
    out = np.eye(dim, dtype=np.complex128)
    term = np.eye(dim, dtype=np.complex128)
    for k in range(1, l + 1):
        term = -(h @ term) / k
        out += term
    return out


def operator_norm(h: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(h))))


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def distance(a: np.ndarray, b: np.ndarray, metric: str = "trace") -> float:
    """Trace distance ``(1/2)||a-b||_1`` or Frobenius distance ``||a-b||_2``."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    diff = a - b
    if metric == "trace":
        diff = 0.5 * (diff + diff.conj().T)
        return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
    if metric == "frobenius":
        return float(np.linalg.norm(diff))
    raise InvalidParameterError(f"unknown metric {metric!r}")


def l1_distance(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_same_shape(p, q)
    return float(np.abs(p - q).sum())

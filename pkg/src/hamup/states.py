"""Synthetic target states, entropies and effective-rank diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._rng import as_generator
from .errors import ConfigurationError, InvalidParameterError, ShapeError
from .linalg import haar_unitary

EIG_CLAMP = 1e-14
STATE_TOL = 1e-10


def validate_density(rho: np.ndarray, declared_rank: int | None = None, tol: float = STATE_TOL) -> np.ndarray:
    """Check that ``rho`` is a density matrix and return it as complex128.

    Raises:
        ShapeError: if ``rho`` is not square.
        InvalidParameterError: if ``rho`` is not Hermitian, PSD and unit trace
            within ``tol``, or has more than ``declared_rank`` eigenvalues above
            ``tol``.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidParameterError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidParameterError(f"density matrix has trace {np.trace(rho).real}")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -tol:
        raise InvalidParameterError(f"density matrix has negative eigenvalue {w[0]}")
    if declared_rank is not None:
        if not 1 <= declared_rank <= rho.shape[0]:
            raise InvalidParameterError(f"declared rank {declared_rank} out of range")
        if declared_rank < rho.shape[0] and w[-declared_rank - 1] > tol:
            raise InvalidParameterError(f"state has rank above declared rank {declared_rank}")
    return rho


def random_pure_state(dim: int, seed=None) -> np.ndarray:
    """Projector onto the first column of a Haar unitary."""
    psi = haar_unitary(dim, seed)[:, 0]
    return np.outer(psi, psi.conj())


def random_mixed_state(dim: int, rank: int, seed=None) -> np.ndarray:
    """``G G^dag / tr(G G^dag)`` for a ``dim x rank`` complex Gaussian ``G``."""
    if dim < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
    if not 1 <= rank <= dim:
        raise InvalidParameterError(f"rank must lie in [1, {dim}], got {rank}")
    rng = as_generator(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def structured_state(kind: str, n_qubits: int) -> np.ndarray:
    """GHZ, product of Bell pairs, or the all-zeros basis state on ``n_qubits``."""
    if n_qubits < 1:
        raise InvalidParameterError(f"need at least one qubit, got {n_qubits}")
    dim = 2**n_qubits
    psi = np.zeros(dim, dtype=np.complex128)
    if kind == "basis":
        psi[0] = 1.0
    elif kind == "ghz":
        psi[0] = psi[-1] = 1.0 / math.sqrt(2.0)
    elif kind == "bell_pairs":
        if n_qubits % 2:
            raise ConfigurationError(f"bell_pairs needs an even number of qubits, got {n_qubits}")
        bell = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)
        psi = np.ones(1, dtype=np.complex128)
        for _ in range(n_qubits // 2):
            psi = np.kron(psi, bell)
    else:
        raise ConfigurationError(f"unknown structured state {kind!r}")
    return np.outer(psi, psi.conj())


def _clamped_eigh(rho: np.ndarray):
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return np.clip(w, 0.0, None), v


def von_neumann_entropy(rho: np.ndarray) -> float:
    w, _ = _clamped_eigh(rho)
    w = w[w > EIG_CLAMP]
    return float(-(w * np.log(w)).sum())


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, support_tol: float = 1e-10) -> float:
    """Quantum relative entropy ``tr(rho (ln rho - ln sigma))`` in nats.

    Eigenvalues below ``1e-14`` are clamped before taking logarithms.  When
    ``rho`` has weight outside the numerical support of ``sigma`` the result is
    ``inf`` and a ``RuntimeWarning`` describes the violation.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ShapeError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    wr, vr = _clamped_eigh(rho)
    ws, vs = _clamped_eigh(sigma)
    kernel = vs[:, ws <= EIG_CLAMP]
    if kernel.shape[1]:
        leak = float(np.trace(kernel.conj().T @ rho @ kernel).real)
        if leak > support_tol:
            warnings.warn(f"support of rho not contained in support of sigma (weight {leak:.3e})", RuntimeWarning, stacklevel=2)
            return math.inf
    keep = wr > EIG_CLAMP
    first = float((wr[keep] * np.log(wr[keep])).sum())
    # tr(rho ln sigma) = sum_{i,j} lambda_i |<r_i|s_j>|^2 ln mu_j
    overlap = np.abs(vr[:, keep].conj().T @ vs) ** 2
    log_s = np.log(np.maximum(ws, EIG_CLAMP))
    second = float(wr[keep] @ overlap @ log_s)
    return first - second


@dataclass
class EffectiveRankReport:
    alpha: float
    value: float
    tail_weights: dict[int, float] = field(default_factory=dict)

    def tail_bound(self, r: int) -> float:
        """Upper bound ``(1-alpha)^(1/alpha) (r_eff/r)^((1-alpha)/alpha)`` on the tail weight."""
        a = self.alpha
        return (1.0 - a) ** (1.0 / a) * (self.value / r) ** ((1.0 - a) / a)


def tail_weights(rho: np.ndarray) -> dict[int, float]:
    """``tau(r) = sum_{k>r} lambda_k`` for ``r = 0..D`` with eigenvalues sorted descending."""
    w, _ = _clamped_eigh(np.asarray(rho))
    w = w[::-1]
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    return {r: float(suffix[r]) for r in range(len(w) + 1)}


def effective_rank(rho: np.ndarray, alpha: float) -> EffectiveRankReport:
    """Effective rank ``tr(rho^alpha)^(1/(1-alpha))`` together with all tail weights."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    w, _ = _clamped_eigh(np.asarray(rho))
    w = w[w > EIG_CLAMP]
    value = float(np.sum(w**alpha) ** (1.0 / (1.0 - alpha)))
    return EffectiveRankReport(alpha=alpha, value=value, tail_weights=tail_weights(rho))

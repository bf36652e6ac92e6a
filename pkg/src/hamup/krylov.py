"""Low-rank eigenpairs of a Gibbs state from its Hamiltonian by randomized block Krylov iteration.

``S_l`` is the degree-``l`` Taylor polynomial of ``exp(-H/2)``, so that
``S_l^2 / tr(S_l^2)`` approximates ``exp(-H) / tr exp(-H)`` and ``S_l`` plays
the role of its square root.  Only matrix-vector products with ``H`` are used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import InvalidParameterError, NumericalBreakdownError, ShapeError
from .linalg import taylor_apply

MAX_ATTEMPTS = 3
DEFLATION_TOL = 1e-10


def krylov_degree(norm_bound: float, eps: float) -> int:
    """``ceil(3e (norm_bound + ln(1/eps)))`` rounded up to even and floored at 2."""
    if not 0 < eps <= 1:
        raise InvalidParameterError(f"accuracy must lie in (0, 1], got {eps}")
    l = math.ceil(3.0 * math.e * (norm_bound + math.log(1.0 / eps)))
    l += l % 2
    return max(l, 2)


@dataclass(frozen=True)
class KrylovConfig:
    rank: int
    eps: float
    c: float = 1.0
    q: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidParameterError(f"rank must be >= 1, got {self.rank}")
        if not 0 < self.eps <= 1:
            raise InvalidParameterError(f"accuracy must lie in (0, 1], got {self.eps}")
        if self.q is not None and self.q < 1:
            raise InvalidParameterError(f"q must be >= 1, got {self.q}")

    def iterations(self, dim: int) -> int:
        """``q = ceil(c ln(D) / sqrt(eps))``, at least 1, unless set explicitly."""
        if self.q is not None:
            return self.q
        return max(1, math.ceil(self.c * math.log(max(dim, 2)) / math.sqrt(self.eps)))


class _Half:
    """View of ``H/2`` for the Taylor routine."""

    def __init__(self, ham):
        self.ham = ham
        self.dim = ham.dim
        self.num_terms = ham.num_terms

    def matvec(self, x):
        return 0.5 * self.ham.matvec(x)


def apply_sqrt_gibbs(ham, x: np.ndarray, l: int) -> np.ndarray:
    """``S_l x`` with ``S_l = sum_{k<=l} (-H/2)^k / k!``."""
    return taylor_apply(_Half(ham), x, l)


def _orthonormalize(k: np.ndarray) -> np.ndarray:
    """Gram-Schmidt with a second orthogonalization pass; deficient columns are dropped."""
    basis = []
    for j in range(k.shape[1]):
        v = k[:, j].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        for _ in range(2):
            for b in basis:
                v -= (b.conj() @ v) * b
        norm = np.linalg.norm(v)
        if norm > DEFLATION_TOL * norm0:
            basis.append(v / norm)
    if not basis:
        return np.zeros((k.shape[0], 0), dtype=np.complex128)
    return np.stack(basis, axis=1)


def block_krylov(ham, cfg: KrylovConfig) -> np.ndarray:
    """Orthonormal ``D x r`` block ``Z`` spanning the dominant eigenspace of ``S_l``.

    Builds ``K = [A X, A^3 X, ..., A^(2q+1) X]`` from a Gaussian block ``X``
    (``q`` reduced if ``K`` would have more than ``D`` columns), orthonormalizes
    it to ``Q``, and returns ``Q U_r`` for the top ``r`` eigenvectors ``U_r`` of
    ``Q^dag A^2 Q``.  If fewer than ``r`` independent directions survive a fresh
    Gaussian block is drawn, at most three times.
    """
    dim, r = ham.dim, cfg.rank
    if r > dim:
        raise ShapeError(f"rank {r} exceeds dimension {dim}")
    l = krylov_degree(ham.norm_bound, cfg.eps)
    q = min(cfg.iterations(dim), max(dim // r - 1, 0))
    for attempt in range(MAX_ATTEMPTS):
        rng = _rng.stream(cfg.seed, "krylov", attempt)
        x = (rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))) / math.sqrt(2.0)
        blocks = []
        y = apply_sqrt_gibbs(ham, x, l)
        for k in range(q + 1):
            # rescaling a block leaves the Krylov span unchanged and avoids under/overflow
            y /= np.linalg.norm(y)
            blocks.append(y)
            if k < q:
                y = apply_sqrt_gibbs(ham, apply_sqrt_gibbs(ham, y, l), l)
        basis = _orthonormalize(np.concatenate(blocks, axis=1))
        if basis.shape[1] < r:
            continue
        w = apply_sqrt_gibbs(ham, basis, l)
        gram = w.conj().T @ w
        vals, vecs = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        z = basis @ vecs[:, ::-1][:, :r]
        # one more pass keeps Z^dag Z = I at machine precision
        z, _ = np.linalg.qr(z)
        return z
    raise NumericalBreakdownError(f"block Krylov broke down {MAX_ATTEMPTS} times; fewer than {r} independent directions")


@dataclass
class EigenDecomposition:
    """Eigenvalues (nonincreasing) and orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def assemble(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def to_json(self) -> str:
        """``{"eigenvalues": [...], "eigenvectors": [[re, im, re, im, ...], ...]}``, one list per vector."""
        vecs = []
        for k in range(self.eigenvectors.shape[1]):
            col = self.eigenvectors[:, k]
            inter = np.empty(2 * col.size)
            inter[0::2] = col.real
            inter[1::2] = col.imag
            vecs.append(inter.tolist())
        return json.dumps({"dim": int(self.eigenvectors.shape[0]), "eigenvalues": self.eigenvalues.tolist(), "eigenvectors": vecs})

    @classmethod
    def from_json(cls, text: str) -> "EigenDecomposition":
        data = json.loads(text)
        cols = [np.array(v[0::2]) + 1j * np.array(v[1::2]) for v in data["eigenvectors"]]
        return cls(np.array(data["eigenvalues"], dtype=float), np.stack(cols, axis=1))


def extract_eigenpairs(ham, z: np.ndarray, eps: float) -> EigenDecomposition:
    """Diagonalize ``B = Z^dag S_l^2 Z / tr(P S_l^2 P)`` with ``P = Z Z^dag``."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 2 or z.shape[0] != ham.dim:
        raise ShapeError(f"block has shape {z.shape}, Hamiltonian D={ham.dim}")
    l = krylov_degree(ham.norm_bound, eps)
    w = apply_sqrt_gibbs(ham, z, l)
    m = w.conj().T @ w
    m = 0.5 * (m + m.conj().T)
    total = float(np.trace(m).real)
    if not total > 0:
        raise NumericalBreakdownError(f"tr(P S_l^2 P) = {total:.3e} is not positive")
    vals, vecs = np.linalg.eigh(m / total)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, 1.0)
    return EigenDecomposition(vals, z @ vecs[:, order])

"""Persistent sum-of-rotated-projectors Hamiltonian ``H = sum_t eta_t U_t^dag P_t U_t``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ResourceLimitError, ShapeError
from .linalg import DENSE_CAP


@dataclass(frozen=True)
class Term:
    unitary: object
    indicator: np.ndarray
    eta: float

    @property
    def weights(self) -> np.ndarray:
        return self.eta * self.indicator


class HamiltonianRepr:
    """Immutable list of penalty terms plus the running bound ``sum_t eta_t >= ||H||``.

    ``update`` returns a new object and leaves the receiver unchanged.  Terms
    that share the same unitary object are merged when applying ``H``, so
    repeated updates in one basis cost a single rotation pair.
    """

    def __init__(self, dim: int, terms: tuple = (), norm_bound: float = 0.0, _dense=None):
        if dim < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.terms = tuple(terms)
        self.norm_bound = float(norm_bound)
        self._dense = _dense
        self._groups = None

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def update(self, unitary, indicator: np.ndarray, eta: float, track_dense: bool = False) -> "HamiltonianRepr":
        """Return ``H + eta U^dag P U`` where ``P = diag(indicator)``."""
        if not eta > 0:
            raise InvalidParameterError(f"step size must be positive, got {eta}")
        indicator = np.asarray(indicator, dtype=bool)
        if indicator.shape != (self.dim,):
            raise ShapeError(f"indicator has shape {indicator.shape}, expected ({self.dim},)")
        if not indicator.any():
            raise InvalidParameterError("empty mismatch projector")
        if unitary.dim != self.dim:
            raise ShapeError(f"unitary has dimension {unitary.dim}, Hamiltonian {self.dim}")
        dense = None
        if track_dense or self._dense is not None:
            cols = unitary.basis_columns()[:, indicator]
            base = self._dense if self._dense is not None else self.to_dense()
            dense = base + eta * (cols @ cols.conj().T)
        term = Term(unitary, indicator.astype(np.float64), float(eta))
        return HamiltonianRepr(self.dim, self.terms + (term,), self.norm_bound + float(eta), dense)

    def _grouped(self):
        if self._groups is None:
            groups: dict[int, list] = {}
            for t in self.terms:
                key = id(t.unitary)
                if key in groups:
                    groups[key][1] = groups[key][1] + t.weights
                else:
                    groups[key] = [t.unitary, t.weights]
            self._groups = [(u, w) for u, w in groups.values()]
        return self._groups

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``H x`` for a vector or a ``D x k`` block, one rotation pair per distinct basis."""
        x = np.asarray(x, dtype=np.complex128)
        out = np.zeros_like(x)
        for u, w in self._grouped():
            y = u.apply(x)
            y *= w if x.ndim == 1 else w[:, None]
            out += u.apply(y, adjoint=True)
        return out

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        if self.dim > cap:
            raise ResourceLimitError(f"dense Hamiltonian requested at D={self.dim} > cap {cap}")
        h = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for u, w in self._grouped():
            cols = u.basis_columns()
            h += (cols * w) @ cols.conj().T
        self._dense = h
        return h

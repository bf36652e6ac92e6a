"""Outcome statistics under basis rotations, shot sampling and noise channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import as_generator
from .errors import (
    ConfigurationError,
    InvalidParameterError,
    NumericalBreakdownError,
    ShapeError,
)
from .linalg import (
    sliced_half_exp_apply,
    taylor_apply,
    taylor_is_stable,
    truncation_degree,
)

STREAM_CHUNK = 256


def _normalize(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def outcome_distribution(rho: np.ndarray, u) -> np.ndarray:
    """``p_i = <i| U rho U^dag |i>``, evaluated on the columns ``U^dag |i>``."""
    rho = np.asarray(rho)
    if rho.shape != (u.dim, u.dim):
        raise ShapeError(f"state has shape {rho.shape}, unitary acts on D={u.dim}")
    cols = u.basis_columns()
    p = np.einsum("ij,ij->j", cols.conj(), rho @ cols).real
    return _normalize(p)


def gibbs_outcome_distribution(ham, u, eps: float, chunk: int = STREAM_CHUNK) -> np.ndarray:
    """Outcome distribution of ``exp(-H)/tr exp(-H)`` to ``l1`` accuracy ``eps``.

    Streams over basis vectors ``w_j = U^dag |j>`` in blocks of ``chunk``
    columns, evaluating ``<w_j| T_l |w_j>`` with the truncated exponential and
    normalizing by the same-pass trace.  Only matrix-vector products with the
    Hamiltonian terms are used.  When a single ``T_l`` would lose the requested
    accuracy to roundoff (large norm bounds), ``||exp(-H/2) w_j||^2`` is
    evaluated with short Taylor slices instead.
    """
    if not 0 < eps <= 1:
        raise InvalidParameterError(f"accuracy must lie in (0, 1], got {eps}")
    if ham.dim != u.dim:
        raise ShapeError(f"Hamiltonian has D={ham.dim}, unitary D={u.dim}")
    dim = ham.dim
    if ham.num_terms == 0:
        return np.full(dim, 1.0 / dim)
    single = taylor_is_stable(ham.norm_bound, dim, eps)
    l = truncation_degree(ham.norm_bound, dim, eps) if single else None
    p = np.empty(dim)
    for start in range(0, dim, chunk):
        stop = min(start + chunk, dim)
        e = np.zeros((dim, stop - start), dtype=np.complex128)
        e[np.arange(start, stop), np.arange(stop - start)] = 1.0
        w = u.apply(e, adjoint=True)
        if single:
            p[start:stop] = np.einsum("ij,ij->j", w.conj(), taylor_apply(ham, w, l)).real
        else:
            y = sliced_half_exp_apply(ham, w, eps)
            p[start:stop] = np.einsum("ij,ij->j", y.conj(), y).real
    total = float(p.sum())
    if not (math.isfinite(total) and total > 0) or p.min() < -1e-9 * total:
        raise NumericalBreakdownError(f"truncated exponential lost positivity (trace {total:.3e}, min {p.min():.3e}); norm bound {ham.norm_bound:.3g}")
    return _normalize(p)


def sample_empirical(dist: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """Empirical frequencies of ``shots`` multinomial draws from ``dist``."""
    if shots < 1:
        raise InvalidParameterError(f"shots must be >= 1, got {shots}")
    rng = as_generator(seed)
    p = _normalize(np.asarray(dist, dtype=float))
    return rng.multinomial(shots, p) / shots


def apply_amplitude_damping(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Independent amplitude damping with rate ``gamma`` on every qubit."""
    if not 0 <= gamma <= 1:
        raise InvalidParameterError(f"damping rate must lie in [0, 1], got {gamma}")
    rho = np.asarray(rho, dtype=np.complex128)
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ConfigurationError(f"amplitude damping needs a qubit register, got D={dim}")
    if gamma == 0:
        return rho.copy()
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    t = rho.reshape((2,) * (2 * n))
    for q in range(n):
        out = np.zeros_like(t)
        for k in (k0, k1):
            # K rho K^dag on ket axis q and bra axis n+q
            s = np.moveaxis(np.tensordot(k, t, axes=([1], [q])), 0, q)
            s = np.moveaxis(np.tensordot(k.conj(), s, axes=([1], [n + q])), 0, n + q)
            out += s
        t = out
    return t.reshape(dim, dim)


def perturb_distribution(dist: np.ndarray, sigma_std: float, seed=None) -> np.ndarray:
    """Add iid ``N(0, sigma_std^2)`` to every entry, clip at zero and renormalize.

    If every entry is clipped the uniform distribution is returned.
    """
    if sigma_std < 0:
        raise InvalidParameterError(f"noise level must be >= 0, got {sigma_std}")
    p = np.asarray(dist, dtype=float)
    if sigma_std == 0:
        return p.copy()
    rng = as_generator(seed)
    q = np.clip(p + rng.normal(0.0, sigma_std, size=p.shape), 0.0, None)
    total = q.sum()
    if total <= 0:
        return np.full(p.shape, 1.0 / p.size)
    return q / total


@dataclass(frozen=True)
class NoiseBudget:
    """Declared trace-norm error budgets for preparation, measurement and statistics."""

    eps_state: float = 0.0
    eps_measurement: float = 0.0
    eps_statistical: float = 0.0

    def __post_init__(self):
        for name in ("eps_state", "eps_measurement", "eps_statistical"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be >= 0")

    @property
    def total(self) -> float:
        return self.eps_state + self.eps_measurement + self.eps_statistical


CHANNELS = ("amplitude_damping", "white_noise")
MODES = ("exact", "shots", "shots+noise")


@dataclass(frozen=True)
class NoiseChannel:
    """``amplitude_damping`` (rate per qubit) or ``white_noise``.

    ``white_noise`` strength is the expected ``l1`` scale of the perturbation:
    every entry receives Gaussian noise of standard deviation ``strength / D``.
    """

    kind: str
    strength: float

    def __post_init__(self):
        if self.kind not in CHANNELS:
            raise ConfigurationError(f"unknown noise channel {self.kind!r}; expected one of {CHANNELS}")
        if self.strength < 0:
            raise ConfigurationError(f"noise strength must be >= 0, got {self.strength}")


@dataclass(frozen=True)
class MeasurementOracle:
    """Produces the observed distribution ``q`` for a basis.

    Composition order is fixed: state channels (amplitude damping), then shot
    sampling (modes ``shots`` and ``shots+noise``), then distribution
    perturbation (white noise).  Channels listed here apply in every mode;
    ``shots+noise`` additionally requires at least one channel.
    """

    mode: str = "exact"
    shots: int | None = None
    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown oracle mode {self.mode!r}; expected one of {MODES}")
        if self.mode != "exact" and self.shots is not None and self.shots < 1:
            raise ConfigurationError(f"shots must be >= 1, got {self.shots}")
        if self.mode == "shots+noise" and not self.channels:
            raise ConfigurationError("mode shots+noise needs at least one noise channel")
        object.__setattr__(self, "channels", tuple(c if isinstance(c, NoiseChannel) else NoiseChannel(*c) for c in self.channels))

    def prepare(self, rho: np.ndarray) -> np.ndarray:
        """The state actually measured, after the state-preparation channels."""
        for c in self.channels:
            if c.kind == "amplitude_damping":
                rho = apply_amplitude_damping(rho, c.strength)
        return rho

    def observe(self, prepared: np.ndarray, u, shots: int | None, shot_rng=None, noise_rng=None) -> np.ndarray:
        """Observed distribution for rotation ``u`` of an already prepared state."""
        q = outcome_distribution(prepared, u)
        if self.mode != "exact":
            n = self.shots or shots
            if n is None:
                raise ConfigurationError("shot mode needs a shot count")
            q = sample_empirical(q, n, shot_rng)
        for c in self.channels:
            if c.kind == "white_noise":
                q = perturb_distribution(q, c.strength / q.size, noise_rng)
        return q

    def describe(self) -> str:
        parts = ["state channels"] + (["shot sampling"] if self.mode != "exact" else []) + ["distribution perturbation"]
        return " -> ".join(parts)


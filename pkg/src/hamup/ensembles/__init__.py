"""Measurement ensembles: sampling of basis rotations and their theory constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._rng import as_generator
from ..errors import ConfigurationError, InvalidParameterError
from ..linalg import DENSE_CAP, haar_unitary
from .clifford import CliffordTableau, random_clifford, tableau_to_gates
from .mub import mub_bases
from .mub import supported as mub_supported
from .unitaries import DenseUnitary, FastUnitary, Gate, GateSequence

FAMILIES = ("haar", "clifford", "local_circuit", "mub")
PZ_CONSTANT = 1.0 / math.sqrt(18.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """Which random bases are measured.

    Attributes:
        family: one of ``haar``, ``clifford``, ``local_circuit``, ``mub``.
        n_qudits: number of subsystems.
        qudit_dim: local dimension ``d``; must be 2 for ``clifford``.
        locality: block size ``k`` for ``local_circuit``.  Blocks of ``k``
            consecutive qudits tile the register (the last one may be shorter).
        circuit_depth: brickwork depth inside each block of ``m >= 3`` qudits.
            Defaults to ``max(1, ceil(depth_constant * m**2))``.
        depth_constant: prefactor of the default depth.
    """

    family: str = "haar"
    n_qudits: int = 1
    qudit_dim: int = 2
    locality: int | None = None
    circuit_depth: int | None = None
    depth_constant: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown ensemble family {self.family!r}; expected one of {FAMILIES}")
        if self.n_qudits < 1 or self.qudit_dim < 2:
            raise ConfigurationError(f"need n >= 1 and d >= 2, got n={self.n_qudits}, d={self.qudit_dim}")
        if self.family == "haar" and self.dim > DENSE_CAP:
            raise ConfigurationError(f"haar ensemble needs D <= {DENSE_CAP}, got {self.dim}")
        if self.family == "clifford" and self.qudit_dim != 2:
            raise ConfigurationError("clifford ensemble is implemented for qubits only")
        if self.family == "mub" and not mub_supported(self.dim):
            raise ConfigurationError(f"no mutually unbiased basis table for D={self.dim}")
        if self.family == "local_circuit":
            if self.locality is None or not 1 <= self.locality <= self.n_qudits:
                raise ConfigurationError(f"local_circuit needs 1 <= locality <= n, got {self.locality}")
            if self.circuit_depth is not None and self.circuit_depth < 1:
                raise ConfigurationError(f"circuit depth must be >= 1, got {self.circuit_depth}")
            if not self.depth_constant > 0:
                raise ConfigurationError(f"depth constant must be positive, got {self.depth_constant}")

    @property
    def dim(self) -> int:
        return self.qudit_dim**self.n_qudits

    def blocks(self) -> list[list[int]]:
        k = self.locality or self.n_qudits
        return [list(range(s, min(s + k, self.n_qudits))) for s in range(0, self.n_qudits, k)]

    def block_depth(self, m: int) -> int:
        if self.circuit_depth is not None:
            return self.circuit_depth
        return max(1, math.ceil(self.depth_constant * m * m))


@dataclass(frozen=True)
class EnsembleParams:
    """Distinguishability constants ``theta`` and ``tau`` of an ensemble.

    ``lam`` is set when the pair comes from ``theta = lam/2, tau = lam**2/4``.
    ``heuristic`` marks empirically calibrated values, which carry no guarantee.
    """

    theta: float
    tau: float
    lam: float | None = None
    rank_dependent: bool = False
    heuristic: bool = False
    warning: str | None = None

    def __post_init__(self):
        if not (0 < self.theta <= 1 and 0 < self.tau <= 1):
            raise InvalidParameterError(f"theta and tau must lie in (0, 1], got {self.theta}, {self.tau}")


def from_lambda(lam: float, **kwargs) -> EnsembleParams:
    return EnsembleParams(theta=lam / 2.0, tau=lam * lam / 4.0, lam=lam, **kwargs)


MUB_WARNING = (
    "mutually unbiased bases are blind to most deviations: a state diagonal in one basis "
    "looks maximally mixed in all others, so a fresh basis passes falsely with probability D/(D+1)"
)


def ensemble_parameters(spec: EnsembleSpec, rank_bound: int = 1) -> EnsembleParams:
    """Worst-case ``(theta, tau)`` for the ensemble at rank bound ``r``."""
    if rank_bound < 1:
        raise InvalidParameterError(f"rank bound must be >= 1, got {rank_bound}")
    r = rank_bound
    if spec.family == "haar" or (spec.family == "local_circuit" and spec.locality == spec.n_qudits):
        return EnsembleParams(theta=1.0 / 6.0, tau=1.0 / 36.0)
    if spec.family == "clifford":
        return EnsembleParams(theta=1.0 / (8.0 * math.sqrt(r)), tau=1.0 / (64.0 * r * r), rank_dependent=True)
    if spec.family == "local_circuit":
        lam = PZ_CONSTANT ** math.ceil(spec.n_qudits / spec.locality)
        return from_lambda(lam)
    d = spec.dim
    return EnsembleParams(theta=1.0 / math.sqrt(d + 1), tau=1.0 / (d + 1), rank_dependent=True, warning=MUB_WARNING)


def sample_unitary(spec: EnsembleSpec, seed=None) -> FastUnitary:
    """Draw one basis rotation from the ensemble."""
    rng = as_generator(seed)
    if spec.family == "haar":
        return DenseUnitary(haar_unitary(spec.dim, rng), label="haar")
    if spec.family == "clifford":
        return tableau_to_gates(random_clifford(spec.n_qudits, rng))
    if spec.family == "local_circuit":
        return _local_circuit(spec, rng)
    index = int(rng.integers(spec.dim + 1))
    return mub_unitary(spec.dim, index)


def mub_unitary(dim: int, index: int) -> DenseUnitary:
    """Rotation ``U = B^dag`` that measures in basis ``index`` of the MUB table."""
    bases = mub_bases(dim)
    if not 0 <= index < len(bases):
        raise ConfigurationError(f"MUB index {index} out of range for D={dim}")
    u = DenseUnitary(bases[index].conj().T, label=f"mub{index}")
    u.mub_index = index
    return u


def _local_circuit(spec: EnsembleSpec, rng) -> GateSequence:
    d = spec.qudit_dim
    gates = []
    for block in spec.blocks():
        m = len(block)
        if m == 1:
            gates.append(Gate("U1", block, haar_unitary(d, rng)))
        elif m == 2:
            gates.append(Gate("U2", block, haar_unitary(d * d, rng)))
        else:
            for layer in range(spec.block_depth(m)):
                for a in range(layer % 2, m - 1, 2):
                    gates.append(Gate("U2", (block[a], block[a + 1]), haar_unitary(d * d, rng)))
    return GateSequence(spec.n_qudits, gates, d, label=f"local{spec.locality}")


def calibrate_parameters(spec: EnsembleSpec, rank_bound: int = 1, n_pairs: int = 20, n_unitaries: int = 200, seed=None) -> EnsembleParams:
    """Monte-Carlo estimate of ``lam = min_pairs E_U ||p_U(rho) - p_U(sigma)||_1 / ||rho - sigma||_2``.

    Probe pairs are random rank-``r`` states.  The result is flagged heuristic:
    a finite sample of pairs cannot certify the worst case.
    """
    from ..linalg import l1_distance
    from ..measurement import outcome_distribution
    from ..states import random_mixed_state

    if spec.dim > DENSE_CAP:
        raise ConfigurationError(f"calibration needs D <= {DENSE_CAP}")
    rng = as_generator(seed)
    pairs = [(random_mixed_state(spec.dim, rank_bound, rng), random_mixed_state(spec.dim, rank_bound, rng)) for _ in range(n_pairs)]
    sums = np.zeros(n_pairs)
    for _ in range(n_unitaries):
        u = sample_unitary(spec, rng)
        for k, (a, b) in enumerate(pairs):
            sums[k] += l1_distance(outcome_distribution(a, u), outcome_distribution(b, u))
    ratios = [sums[k] / n_unitaries / np.linalg.norm(a - b) for k, (a, b) in enumerate(pairs)]
    lam = float(min(min(ratios), 1.0))
    return from_lambda(lam, heuristic=True)


__all__ = [
    "CliffordTableau",
    "DenseUnitary",
    "EnsembleParams",
    "EnsembleSpec",
    "FastUnitary",
    "Gate",
    "GateSequence",
    "calibrate_parameters",
    "ensemble_parameters",
    "from_lambda",
    "mub_unitary",
    "random_clifford",
    "sample_unitary",
    "tableau_to_gates",
]

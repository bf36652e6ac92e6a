"""Quantum state reconstruction by Hamiltonian updates from random basis measurements."""

from .ensembles import EnsembleSpec, ensemble_parameters, sample_unitary
from .errors import (
    ConfigurationError,
    HamupError,
    InfeasibleNoiseError,
    InvalidParameterError,
    NumericalBreakdownError,
    ResourceLimitError,
    ShapeError,
)
from .hamiltonian import HamiltonianRepr
from .krylov import EigenDecomposition, KrylovConfig, block_krylov, extract_eigenpairs
from .measurement import MeasurementOracle, NoiseBudget, NoiseChannel
from .updates import RunConfig, RunTrace, derive_parameters, progress_audit, run

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "EigenDecomposition",
    "EnsembleSpec",
    "HamiltonianRepr",
    "HamupError",
    "InfeasibleNoiseError",
    "InvalidParameterError",
    "KrylovConfig",
    "MeasurementOracle",
    "NoiseBudget",
    "NoiseChannel",
    "NumericalBreakdownError",
    "ResourceLimitError",
    "RunConfig",
    "RunTrace",
    "ShapeError",
    "block_krylov",
    "derive_parameters",
    "ensemble_parameters",
    "extract_eigenpairs",
    "progress_audit",
    "run",
    "sample_unitary",
]

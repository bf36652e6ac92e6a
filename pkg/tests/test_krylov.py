import math

import numpy as np
import pytest

from _helpers import random_hamiltonian
from hamup.ensembles.unitaries import DenseUnitary
from hamup.errors import InvalidParameterError, NumericalBreakdownError, ShapeError
from hamup.hamiltonian import HamiltonianRepr
from hamup.krylov import (
    EigenDecomposition,
    KrylovConfig,
    apply_sqrt_gibbs,
    block_krylov,
    extract_eigenpairs,
    krylov_degree,
)
from hamup.linalg import dense_gibbs, distance, haar_unitary, truncated_exponential


def _ground_state_ham(dim, seed, gap=5.0):
    # H = gap * U^dag (I - |0><0|) U, ground state U^dag |0>
    m = haar_unitary(dim, seed)
    ind = np.ones(dim, dtype=bool)
    ind[0] = False
    return HamiltonianRepr(dim).update(DenseUnitary(m), ind, gap), m.conj().T[:, 0]


def test_krylov_degree_examples():
    assert krylov_degree(0, 1) == 2
    # ceil(3e (1 + ln 10)) = 27, rounded up to even
    assert krylov_degree(1, 0.1) == 28
    with pytest.raises(InvalidParameterError):
        krylov_degree(1, 0)


def test_krylov_degree_monotone():
    bounds = np.linspace(0, 30, 31)
    for eps in (1e-1, 1e-3):
        degs = [krylov_degree(b, eps) for b in bounds]
        assert all(a <= b for a, b in zip(degs, degs[1:]))
        assert all(d % 2 == 0 and d >= 2 for d in degs)
    assert krylov_degree(3, 1e-4) >= krylov_degree(3, 1e-2)


def test_config_validation():
    assert KrylovConfig(1, 0.05).iterations(16) == math.ceil(math.log(16) / math.sqrt(0.05))
    assert KrylovConfig(1, 0.05, q=2).iterations(16) == 2
    for kw in ({"rank": 0, "eps": 0.1}, {"rank": 1, "eps": 0.0}, {"rank": 1, "eps": 0.1, "q": 0}):
        with pytest.raises(InvalidParameterError):
            KrylovConfig(**kw)


def test_sqrt_gibbs_is_half_exponential(rng):
    ham = random_hamiltonian(8, 2, seed=3)
    x = rng.standard_normal(8) + 0j
    l = krylov_degree(ham.norm_bound, 1e-8)
    assert np.allclose(apply_sqrt_gibbs(ham, x, l), truncated_exponential(ham.to_dense() / 2, l) @ x, atol=1e-12)


def test_zero_hamiltonian_block():
    z = block_krylov(HamiltonianRepr(8), KrylovConfig(3, 0.1, seed=4))
    assert z.shape == (8, 3)
    assert np.max(np.abs(z.conj().T @ z - np.eye(3))) <= 1e-8


def test_zero_hamiltonian_full_rank_is_maximally_mixed():
    ham = HamiltonianRepr(4)
    dec = extract_eigenpairs(ham, block_krylov(ham, KrylovConfig(4, 0.1)), 0.1)
    assert np.allclose(dec.eigenvalues, 0.25, atol=1e-12)


def test_rank_one_dominated_overlap():
    ham, ground = _ground_state_ham(16, 2)
    z = block_krylov(ham, KrylovConfig(1, 0.05, seed=1))
    w, v = np.linalg.eigh(dense_gibbs(ham))
    assert abs(np.vdot(v[:, -1], z[:, 0])) ** 2 >= 0.99
    assert abs(np.vdot(ground, z[:, 0])) ** 2 >= 0.99


@pytest.mark.parametrize("dim,rank,seed", [(8, 1, 0), (16, 2, 1), (32, 3, 2), (64, 2, 3)])
def test_projection_quality_against_svd(dim, rank, seed):
    eps = 0.1
    ham = random_hamiltonian(dim, 4, seed=seed)
    cfg = KrylovConfig(rank, eps, seed=seed)
    z = block_krylov(ham, cfg)
    a = truncated_exponential(ham.to_dense() / 2, krylov_degree(ham.norm_bound, eps))
    s = np.linalg.svd(a, compute_uv=False)
    resid = np.linalg.norm(a - z @ (z.conj().T @ a), 2)
    assert resid <= (1 + eps) * s[rank] + 1e-10


def test_block_orthonormal_and_deterministic():
    ham = random_hamiltonian(16, 3, seed=5)
    cfg = KrylovConfig(2, 0.05, seed=9)
    z = block_krylov(ham, cfg)
    assert np.max(np.abs(z.conj().T @ z - np.eye(2))) <= 1e-8
    assert np.array_equal(z, block_krylov(ham, cfg))


def test_block_rank_too_large():
    with pytest.raises(ShapeError):
        block_krylov(HamiltonianRepr(4), KrylovConfig(5, 0.1))


def test_block_breakdown_after_retries(monkeypatch):
    monkeypatch.setattr("hamup.krylov._orthonormalize", lambda k: np.zeros((k.shape[0], 0), dtype=np.complex128))
    with pytest.raises(NumericalBreakdownError):
        block_krylov(random_hamiltonian(4, 1, seed=0), KrylovConfig(1, 0.1))


def test_extract_eigenpairs_invariants():
    ham = random_hamiltonian(32, 5, seed=7)
    dec = extract_eigenpairs(ham, block_krylov(ham, KrylovConfig(4, 0.05, seed=2)), 0.05)
    vals, vecs = dec.eigenvalues, dec.eigenvectors
    assert np.all(np.diff(vals) <= 1e-15)
    assert np.all((vals >= 0) & (vals <= 1))
    assert vals.sum() <= 1 + 1e-9
    assert np.max(np.abs(vecs.conj().T @ vecs - np.eye(4))) <= 1e-8


def test_extract_matches_projected_gibbs():
    # with P = Z Z^dag the output assembles P S^2 P / tr(P S^2 P)
    ham = random_hamiltonian(16, 3, seed=4)
    eps = 1e-3
    z = block_krylov(ham, KrylovConfig(3, eps, seed=3))
    s = truncated_exponential(ham.to_dense() / 2, krylov_degree(ham.norm_bound, eps))
    p = z @ z.conj().T
    ref = p @ s @ s.conj().T @ p
    ref /= np.trace(ref).real
    assert np.allclose(extract_eigenpairs(ham, z, eps).assemble(), ref, atol=1e-10)


def test_extract_rank_one_reconstruction():
    ham, ground = _ground_state_ham(16, 6, gap=8.0)
    eps = 0.05
    dec = extract_eigenpairs(ham, block_krylov(ham, KrylovConfig(1, eps, seed=0)), eps)
    assert abs(np.vdot(ground, dec.eigenvectors[:, 0])) ** 2 >= 1 - 2 * math.sqrt(eps)
    assert distance(dec.assemble(), dense_gibbs(ham)) <= 4 * math.sqrt(eps)


def test_extract_errors():
    ham = random_hamiltonian(4, 1, seed=1)
    with pytest.raises(ShapeError):
        extract_eigenpairs(ham, np.eye(3), 0.1)
    with pytest.raises(NumericalBreakdownError):
        extract_eigenpairs(ham, np.zeros((4, 1)), 0.1)


def test_eigendecomposition_json_round_trip():
    ham = random_hamiltonian(8, 2, seed=2)
    dec = extract_eigenpairs(ham, block_krylov(ham, KrylovConfig(2, 0.1)), 0.1)
    back = EigenDecomposition.from_json(dec.to_json())
    assert np.array_equal(back.eigenvalues, dec.eigenvalues)
    assert np.array_equal(back.eigenvectors, dec.eigenvectors)

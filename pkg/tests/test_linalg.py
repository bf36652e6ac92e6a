import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import random_density, random_hamiltonian
from hamup.ensembles.unitaries import DenseUnitary
from hamup.errors import InvalidParameterError, ResourceLimitError, ShapeError
from hamup.hamiltonian import HamiltonianRepr
from hamup.linalg import (
    dense_gibbs,
    distance,
    gibbs_from_matrix,
    haar_unitary,
    l1_distance,
    sliced_half_exp_apply,
    taylor_apply,
    taylor_is_stable,
    truncated_exponential,
    truncation_degree,
)


def _scan_degree(nb, dim, eps):
    # independent restatement of the degree rule
    c = math.log(max(nb, 1.0))
    l = 0
    while (l + 1) * (math.log(l + 1) - 1 - c) < 2 * nb + math.log(dim) - math.log(eps):
        l += 2
    return l


def test_haar_dim_one_is_unit_phase():
    u = haar_unitary(1, 3)
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1) < 1e-12


@pytest.mark.parametrize("dim", [2, 4, 17, 64])
def test_haar_unitarity(dim):
    u = haar_unitary(dim, 7)
    assert np.max(np.abs(u.conj().T @ u - np.eye(dim))) <= 1e-9


def test_haar_deterministic_per_seed():
    assert np.array_equal(haar_unitary(8, 11), haar_unitary(8, 11))
    assert not np.array_equal(haar_unitary(8, 11), haar_unitary(8, 12))


def test_haar_zero_dim_rejected():
    with pytest.raises(InvalidParameterError):
        haar_unitary(0, 1)


@pytest.mark.slow
def test_haar_first_moment():
    rng = np.random.default_rng(0)
    vals = [abs(haar_unitary(2, rng)[0, 0]) ** 2 for _ in range(100_000)]
    assert abs(np.mean(vals) - 0.5) <= 0.01


def test_haar_phase_correction_matters():
    # without the phase fix diag(R) > 0 forces a biased phase of U_00; with it arg(U_00) is uniform
    rng = np.random.default_rng(5)
    phases = np.array([np.angle(haar_unitary(2, rng)[0, 0]) for _ in range(4000)])
    assert abs(np.mean(np.cos(phases))) < 0.05
    assert abs(np.mean(np.sin(phases))) < 0.05


def test_truncation_degree_examples():
    assert truncation_degree(0, 2, 1) == 4
    assert truncation_degree(0, 1, 1) == 2
    # frozen from an independent arbitrary-precision scan
    assert truncation_degree(1, 16, 1e-4) == 10
    assert truncation_degree(5, 64, 1e-6) == 32
    assert truncation_degree(2.5, 8, 1e-2) == 14


@given(st.floats(0, 50), st.integers(1, 4096), st.floats(1e-12, 1))
def test_truncation_degree_is_smallest_even(nb, dim, eps):
    l = truncation_degree(nb, dim, eps)
    assert l % 2 == 0
    assert l == _scan_degree(nb, dim, eps)


@given(st.floats(0, 20), st.floats(0, 20), st.integers(1, 256), st.floats(1e-9, 1))
def test_truncation_degree_monotone(a, b, dim, eps):
    lo, hi = sorted((a, b))
    assert truncation_degree(lo, dim, eps) <= truncation_degree(hi, dim, eps)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_truncation_degree_rejects_eps(bad):
    with pytest.raises(InvalidParameterError):
        truncation_degree(1.0, 4, bad)


def test_taylor_zero_hamiltonian_is_identity(rng):
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.array_equal(taylor_apply(HamiltonianRepr(8), v, 4), v)


def test_taylor_matches_dense_exponential(rng):
    ham = random_hamiltonian(8, 1, seed=3)
    h = ham.to_dense()
    eps = 1e-6
    l = truncation_degree(ham.norm_bound, 8, eps)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    v /= np.linalg.norm(v)
    w, vecs = np.linalg.eigh(h)
    exact = vecs @ (np.exp(-w) * (vecs.conj().T @ v))
    assert np.linalg.norm(taylor_apply(ham, v, l) - exact) <= eps
    assert np.allclose(taylor_apply(ham, v, l), truncated_exponential(h, l) @ v, atol=1e-12)


def test_taylor_linearity(rng):
    ham = random_hamiltonian(16, 4, seed=9)
    v, w = (rng.standard_normal(16) + 1j * rng.standard_normal(16) for _ in range(2))
    a, b = 0.3 - 1.2j, 2.0
    lhs = taylor_apply(ham, a * v + b * w, 12)
    rhs = a * taylor_apply(ham, v, 12) + b * taylor_apply(ham, w, 12)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_taylor_block_equals_columns(rng):
    ham = random_hamiltonian(8, 3, seed=2)
    block = rng.standard_normal((8, 3)) + 0j
    out = taylor_apply(ham, block, 10)
    for j in range(3):
        assert np.allclose(out[:, j], taylor_apply(ham, block[:, j], 10), atol=1e-13)


def test_taylor_shape_mismatch():
    with pytest.raises(ShapeError):
        taylor_apply(random_hamiltonian(4, 1, 0), np.ones(5), 2)


def test_degree_bounds_taylor_remainder():
    # the remainder b^(l+1)/(l+1)! times exp(2b) D stays below eps on a grid
    for nb in (0.0, 0.5, 1.0, 2.0, 5.0, 12.0, 40.0):
        for dim, eps in ((2, 1e-2), (64, 1e-6), (4096, 1e-9)):
            l = truncation_degree(nb, dim, eps)
            b = max(nb, 1.0)
            log_rem = (l + 1) * math.log(b) - math.lgamma(l + 2)
            assert log_rem + 2 * nb + math.log(dim) <= math.log(eps) + 1e-9


def test_truncated_state_psd_and_close(rng):
    for seed in range(10):
        ham = random_hamiltonian(16, 3, seed=seed)
        h = ham.to_dense()
        nb = float(np.max(np.abs(np.linalg.eigvalsh(h))))
        for eps in (1e-2, 1e-4):
            t = truncated_exponential(h, truncation_degree(nb, 16, eps))
            t = t / np.trace(t).real
            assert np.linalg.eigvalsh(0.5 * (t + t.conj().T)).min() >= -1e-10
            assert distance(t, dense_gibbs(ham)) <= eps


def test_stability_rule():
    assert taylor_is_stable(2.0, 64, 1e-6)
    assert not taylor_is_stable(30.0, 64, 1e-3)


@pytest.mark.parametrize("scale,terms", [(0.05, 3), (1.0, 40), (1.0, 200)])
def test_sliced_half_exponential(scale, terms, rng):
    ham = random_hamiltonian(16, terms, seed=terms, scale=scale)
    w, vecs = np.linalg.eigh(ham.to_dense())
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    exact = vecs @ (np.exp(-0.5 * w) * (vecs.conj().T @ v))
    got = sliced_half_exp_apply(ham, v, 1e-9)
    assert np.linalg.norm(got - exact) <= 1e-8 * np.linalg.norm(exact) + 1e-14


def test_dense_gibbs_examples():
    assert np.allclose(dense_gibbs(HamiltonianRepr(4)), np.eye(4) / 4)
    ham = HamiltonianRepr(2).update(DenseUnitary(np.eye(2)), np.array([True, False]), math.log(2))
    assert np.allclose(dense_gibbs(ham), np.diag([1 / 3, 2 / 3]), atol=1e-12)


def test_dense_gibbs_is_state():
    rho = dense_gibbs(random_hamiltonian(16, 5, seed=1))
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert abs(np.trace(rho).real - 1) <= 1e-10
    assert np.linalg.eigvalsh(rho).min() >= -1e-10


def test_dense_gibbs_cap():
    with pytest.raises(ResourceLimitError):
        dense_gibbs(random_hamiltonian(8, 1, 0), cap=4)


def test_gibbs_from_matrix_large_energies():
    h = np.diag([1000.0, 1001.0])
    expected = np.array([1, math.exp(-1)]) / (1 + math.exp(-1))
    assert np.allclose(np.diag(gibbs_from_matrix(h)).real, expected)


def test_distance_examples(rng):
    rho = random_density(4, rng)
    assert distance(rho, rho) == pytest.approx(0, abs=1e-14)
    assert distance(rho, rho, "frobenius") == 0
    a = np.diag([1.0, 0.0]).astype(complex)
    b = np.diag([0.0, 1.0]).astype(complex)
    assert distance(a, b) == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        distance(a, np.eye(3))
    with pytest.raises(InvalidParameterError):
        distance(a, b, "nuclear")


def test_trace_vs_frobenius_rank_bound(rng):
    for _ in range(50):
        dim = int(rng.integers(2, 17))
        r1, r2 = (int(x) for x in rng.integers(1, dim + 1, size=2))
        rho, sigma = random_density(dim, rng, r1), random_density(dim, rng, r2)
        lhs = 2 * distance(rho, sigma)
        assert lhs <= 2 * math.sqrt(min(r1, r2)) * distance(rho, sigma, "frobenius") + 1e-12


def test_l1_distance_examples():
    assert l1_distance([0.5, 0.5], [0.5, 0.5]) == 0
    assert l1_distance([1, 0], [0, 1]) == 2
    assert l1_distance([0.6, 0.4], [0.5, 0.5]) == pytest.approx(0.2)
    with pytest.raises(ShapeError):
        l1_distance([1.0], [0.5, 0.5])

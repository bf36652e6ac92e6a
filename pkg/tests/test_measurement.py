import math

import numpy as np
import pytest

from _helpers import haar_fast, random_density, random_hamiltonian
from hamup.ensembles import EnsembleSpec, sample_unitary
from hamup.ensembles.unitaries import DenseUnitary, Gate, GateSequence
from hamup.errors import (
    ConfigurationError,
    InvalidParameterError,
    NumericalBreakdownError,
    ShapeError,
)
from hamup.hamiltonian import HamiltonianRepr
from hamup.linalg import dense_gibbs, distance, haar_unitary, l1_distance
from hamup.measurement import (
    MeasurementOracle,
    NoiseBudget,
    NoiseChannel,
    apply_amplitude_damping,
    gibbs_outcome_distribution,
    outcome_distribution,
    perturb_distribution,
    sample_empirical,
)
from hamup.states import random_pure_state, validate_density


def test_outcome_maximally_mixed_is_uniform(rng):
    for dim in (2, 8, 27):
        u = DenseUnitary(haar_unitary(dim, rng))
        assert np.allclose(outcome_distribution(np.eye(dim) / dim, u), 1 / dim, atol=1e-14)


def test_outcome_diagonal_identity():
    rho = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    assert np.allclose(outcome_distribution(rho, DenseUnitary(np.eye(4))), [0.1, 0.2, 0.3, 0.4])


def test_outcome_hadamard_on_zero():
    had = GateSequence(1, [Gate("H", [0])])
    assert np.allclose(outcome_distribution(np.diag([1.0, 0.0]).astype(complex), had), [0.5, 0.5])


def test_outcome_shape_error():
    with pytest.raises(ShapeError):
        outcome_distribution(np.eye(2) / 2, DenseUnitary(np.eye(4)))


def test_outcome_matches_rotated_diagonal(rng):
    rho = random_density(8, rng)
    m = haar_unitary(8, rng)
    expected = np.diag(m @ rho @ m.conj().T).real
    assert np.allclose(outcome_distribution(rho, DenseUnitary(m)), expected, atol=1e-13)


def test_gibbs_zero_hamiltonian_uniform():
    p = gibbs_outcome_distribution(HamiltonianRepr(8), haar_fast(3, 1), 0.1)
    assert np.array_equal(p, np.full(8, 1 / 8))


def test_gibbs_streaming_dim16():
    ham = random_hamiltonian(16, 5, seed=4)
    u = haar_fast(4, 2)
    p = gibbs_outcome_distribution(ham, u, 1e-4)
    assert l1_distance(p, outcome_distribution(dense_gibbs(ham), u)) <= 1e-4


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_gibbs_streaming_within_eps(eps):
    for seed in range(6):
        ham = random_hamiltonian(8, 1 + seed, seed=seed, scale=0.5 + seed)
        u = haar_fast(3, 100 + seed)
        p = gibbs_outcome_distribution(ham, u, eps)
        assert l1_distance(p, outcome_distribution(dense_gibbs(ham), u)) <= eps


def test_gibbs_large_norm_bound_stays_accurate():
    # deep in the regime where a single truncated series cancels catastrophically
    ham = random_hamiltonian(16, 150, seed=8)
    assert ham.norm_bound > 40
    u = haar_fast(4, 3)
    p = gibbs_outcome_distribution(ham, u, 1e-6)
    assert l1_distance(p, outcome_distribution(dense_gibbs(ham), u)) <= 1e-6


def test_gibbs_clifford_basis():
    ham = random_hamiltonian(16, 3, seed=2)
    u = sample_unitary(EnsembleSpec("clifford", 4), 5)
    p = gibbs_outcome_distribution(ham, u, 1e-5)
    assert l1_distance(p, outcome_distribution(dense_gibbs(ham), u)) <= 1e-5


def test_gibbs_order_independent():
    ham = random_hamiltonian(16, 4, seed=6)
    u = haar_fast(4, 9)
    ref = gibbs_outcome_distribution(ham, u, 1e-6)
    for chunk in (1, 3, 7):
        assert np.allclose(gibbs_outcome_distribution(ham, u, 1e-6, chunk=chunk), ref, rtol=0, atol=1e-14)


def test_gibbs_rejects_bad_input():
    ham = random_hamiltonian(4, 1, seed=0)
    with pytest.raises(InvalidParameterError):
        gibbs_outcome_distribution(ham, haar_fast(2, 0), 0.0)
    with pytest.raises(ShapeError):
        gibbs_outcome_distribution(ham, haar_fast(3, 0), 0.1)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_gibbs_breakdown_on_understated_norm():
    # a norm bound far below the true norm makes the series overflow
    ham = random_hamiltonian(8, 1, seed=0, scale=1e200)
    ham.norm_bound = 0.0
    with pytest.raises(NumericalBreakdownError):
        gibbs_outcome_distribution(ham, haar_fast(3, 1), 1.0)


def test_sample_empirical_deterministic_outcome():
    p = np.zeros(8)
    p[0] = 1
    assert np.array_equal(sample_empirical(p, 17, 0), p)


def test_sample_empirical_reproducible():
    p = np.full(4, 0.25)
    assert np.array_equal(sample_empirical(p, 100, 3), sample_empirical(p, 100, 3))
    with pytest.raises(InvalidParameterError):
        sample_empirical(p, 0)


def test_sample_empirical_concentration():
    # 5 sigma binomial bound: 5 * sqrt(p(1-p)/N) = 0.0022
    q = sample_empirical(np.full(4, 0.25), 10**6, 11)
    assert np.max(np.abs(q - 0.25)) <= 0.002


def test_sample_empirical_l1_scaling():
    rng = np.random.default_rng(2)
    for dim, shots in ((4, 100), (16, 1000), (64, 500)):
        p = rng.dirichlet(np.ones(dim))
        errs = [l1_distance(sample_empirical(p, shots, rng), p) for _ in range(100)]
        assert np.mean(errs) <= math.sqrt(dim / shots)


def test_damping_examples(rng):
    rho = random_density(8, rng)
    assert np.allclose(apply_amplitude_damping(rho, 0.0), rho)
    ground = np.zeros((8, 8))
    ground[0, 0] = 1
    assert np.allclose(apply_amplitude_damping(rho, 1.0), ground, atol=1e-14)
    one = np.diag([0.0, 1.0]).astype(complex)
    assert np.allclose(apply_amplitude_damping(one, 0.5), np.diag([0.5, 0.5]))


def test_damping_matches_kraus_oracle(rng):
    # independent oracle: explicit Kraus operators on the full register
    g = 0.3
    k0 = np.array([[1, 0], [0, math.sqrt(1 - g)]])
    k1 = np.array([[0, math.sqrt(g)], [0, 0]])
    rho = random_density(8, rng)
    out = rho
    for q in range(3):
        ops = []
        for k in (k0, k1):
            mats = [np.eye(2)] * 3
            mats[q] = k
            ops.append(np.kron(np.kron(mats[0], mats[1]), mats[2]))
        out = sum(op @ out @ op.conj().T for op in ops)
    got = apply_amplitude_damping(rho, g)
    assert np.allclose(got, out, atol=1e-13)
    validate_density(got)


def test_damping_rejects():
    with pytest.raises(ConfigurationError):
        apply_amplitude_damping(np.eye(3) / 3, 0.1)
    with pytest.raises(InvalidParameterError):
        apply_amplitude_damping(np.eye(2) / 2, 1.5)


def test_perturb_examples(rng):
    p = rng.dirichlet(np.ones(16))
    assert np.array_equal(perturb_distribution(p, 0.0, 1), p)
    for seed in range(20):
        q = perturb_distribution(p, 0.05, seed)
        assert abs(q.sum() - 1) <= 1e-12
        assert q.min() >= 0
    with pytest.raises(InvalidParameterError):
        perturb_distribution(p, -1.0)


def test_perturb_all_clipped_gives_uniform(monkeypatch):
    class _Neg:
        def normal(self, loc, scale, size):
            return np.full(size, -10.0)

    monkeypatch.setattr("hamup.measurement.as_generator", lambda seed: _Neg())
    assert np.allclose(perturb_distribution(np.array([1.0, 0.0]), 1.0, 0), [0.5, 0.5])


def test_perturb_monotone_in_sigma():
    rng = np.random.default_rng(4)
    p = rng.dirichlet(np.ones(32))
    sigmas = [0.0, 0.002, 0.005, 0.01, 0.02, 0.05]
    means = [np.mean([l1_distance(perturb_distribution(p, s, rng), p) for _ in range(300)]) for s in sigmas]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_contractivity(rng):
    for _ in range(50):
        dim = int(rng.integers(2, 17))
        rho, sigma = random_density(dim, rng), random_density(dim, rng)
        u = DenseUnitary(haar_unitary(dim, rng))
        lhs = l1_distance(outcome_distribution(rho, u), outcome_distribution(sigma, u))
        assert lhs <= 2 * distance(rho, sigma) + 1e-12


def test_noise_budget():
    b = NoiseBudget(0.01, 0.02, 0.03)
    assert b.total == pytest.approx(0.06)
    with pytest.raises(InvalidParameterError):
        NoiseBudget(eps_state=-1)


def test_oracle_validation():
    with pytest.raises(ConfigurationError):
        MeasurementOracle(mode="telepathy")
    with pytest.raises(ConfigurationError):
        MeasurementOracle(mode="shots", shots=0)
    with pytest.raises(ConfigurationError):
        MeasurementOracle(mode="shots+noise", shots=10)
    with pytest.raises(ConfigurationError):
        NoiseChannel("depolarizing", 0.1)
    with pytest.raises(ConfigurationError):
        NoiseChannel("white_noise", -0.1)


def test_oracle_noise_order_and_reproducibility():
    target = random_pure_state(8, 5)
    u = haar_fast(3, 7)
    oracle = MeasurementOracle("shots+noise", 200, (("amplitude_damping", 0.1), ("white_noise", 0.05)))
    assert oracle.describe() == "state channels -> shot sampling -> distribution perturbation"
    prepared = oracle.prepare(target)
    assert np.allclose(prepared, apply_amplitude_damping(target, 0.1))

    def draw():
        return oracle.observe(prepared, u, None, np.random.default_rng(1), np.random.default_rng(2))

    q = draw()
    assert np.array_equal(q, draw())
    # manual composition in the documented order
    manual = sample_empirical(outcome_distribution(prepared, u), 200, np.random.default_rng(1))
    manual = perturb_distribution(manual, 0.05 / 8, np.random.default_rng(2))
    assert np.array_equal(q, manual)


def test_oracle_exact_mode():
    target = random_pure_state(4, 1)
    u = haar_fast(2, 1)
    oracle = MeasurementOracle()
    assert np.array_equal(oracle.observe(oracle.prepare(target), u, None), outcome_distribution(target, u))
    with pytest.raises(ConfigurationError):
        MeasurementOracle("shots").observe(target, u, None)

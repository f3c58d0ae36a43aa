import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netpred.sampler import (
    ModelError,
    chain_precision,
    partial_correlations,
    population_r2,
    random_stable_var,
    sample_ggm,
    sample_ising_gibbs,
    simulate_var,
)


def random_spd(p, rng):
    A = rng.normal(size=(p, p))
    return A @ A.T + p * np.eye(p)


def exact_ising(w, t):
    """Probabilities of all 2^p states of the binary pairwise model."""
    p = len(t)
    states = np.array(list(itertools.product([0, 1], repeat=p)), dtype=float)
    logits = states @ t + 0.5 * np.einsum("si,ij,sj->s", states, w, states)
    prob = np.exp(logits - logits.max())
    return states, prob / prob.sum()


def test_ggm_identity_covariance():
    d = sample_ggm(np.eye(3), 100_000, seed=1)
    assert np.max(np.abs(np.cov(d.values.T) - np.eye(3))) < 0.02


def test_ggm_scalar_precision():
    d = sample_ggm([[4.0]], 20_000, seed=2)
    assert d.values.var() == pytest.approx(0.25, rel=0.03)


def test_ggm_deterministic():
    a, b = sample_ggm(chain_precision(4, 0.3), 50, seed=9), sample_ggm(chain_precision(4, 0.3), 50, seed=9)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, sample_ggm(chain_precision(4, 0.3), 50, seed=10).values)


def test_ggm_sample_precision_converges():
    theta = chain_precision(4, 0.4)
    d = sample_ggm(theta, 100_000, seed=3)
    assert np.max(np.abs(np.linalg.inv(np.cov(d.values.T)) - theta)) < 0.05


def test_non_spd_rejected():
    with pytest.raises(ModelError):
        sample_ggm([[1, 2], [2, 1]], 10)
    with pytest.raises(ModelError):
        population_r2([[1, 0.5], [0.4, 1]])


def test_population_r2_examples(rng):
    assert np.all(population_r2(np.eye(4)) == 0)
    rho = 0.6
    theta = np.array([[1, -rho], [-rho, 1]])
    assert partial_correlations(theta)[0, 1] == pytest.approx(rho)
    np.testing.assert_allclose(population_r2(theta), rho ** 2, atol=1e-12)
    theta = random_spd(6, rng)
    S = np.linalg.inv(theta)
    for j in range(6):
        o = [k for k in range(6) if k != j]
        b = np.linalg.solve(S[np.ix_(o, o)], S[o, j])
        assert population_r2(theta)[j] == pytest.approx(b @ S[o, j] / S[j, j], abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 10_000))
def test_population_r2_in_unit_interval(p, seed):
    r2 = population_r2(random_spd(p, np.random.default_rng(seed)))
    assert np.all(r2 >= -1e-12) and np.all(r2 < 1)


def test_ising_independent_marginals():
    d = sample_ising_gibbs(np.zeros((3, 3)), np.zeros(3), 10_000, seed=1, thin=1)
    np.testing.assert_allclose((d.values == 2).mean(axis=0), 0.5, atol=0.02)
    assert set(np.unique(d.values)) == {1.0, 2.0}


def test_ising_pair_agreement_matches_closed_form():
    w = np.array([[0, 3.0], [3.0, 0]])
    t = np.array([-1.5, -1.5])
    d = sample_ising_gibbs(w, t, 10_000, seed=2)
    agree = np.mean(d.values[:, 0] == d.values[:, 1])
    states, prob = exact_ising(w, t)
    exact = prob[states[:, 0] == states[:, 1]].sum()
    assert agree > 0.8 and agree == pytest.approx(exact, abs=0.02)


def test_ising_chain_matches_enumeration():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1.2
    w[1, 2] = w[2, 1] = -0.8
    t = np.array([-0.3, 0.2, 0.5])
    d = sample_ising_gibbs(w, t, 10_000, seed=3).values - 1
    states, prob = exact_ising(w, t)
    for i, j in itertools.combinations(range(3), 2):
        for a, b in itertools.product([0, 1], repeat=2):
            emp = np.mean((d[:, i] == a) & (d[:, j] == b))
            ex = prob[(states[:, i] == a) & (states[:, j] == b)].sum()
            assert emp == pytest.approx(ex, abs=0.02)


def test_ising_shape_checks():
    with pytest.raises(ModelError):
        sample_ising_gibbs(np.ones((2, 2)), np.zeros(2), 5)
    with pytest.raises(ModelError):
        sample_ising_gibbs(np.array([[0, 1], [0, 0]]), np.zeros(2), 5)


def test_var_zero_matrix_no_autocorrelation():
    x = simulate_var(np.zeros((1, 1)), 1.0, 10_000, seed=1).values[:, 0]
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) < 0.05


def test_ar1_stationary_variance():
    x = simulate_var([[0.8]], 1.0, 50_000, seed=2).values[:, 0]
    assert x.var() == pytest.approx(1 / (1 - 0.64), rel=0.05)


def test_var_reproducible_and_unstable_rejected():
    B = random_stable_var(3, 0.9, seed=4)
    assert np.max(np.abs(np.linalg.eigvals(B))) == pytest.approx(0.9)
    a, b = simulate_var(B, 1.0, 100, seed=5), simulate_var(B, 1.0, 100, seed=5)
    assert a.values.tobytes() == b.values.tobytes()
    with pytest.raises(ModelError, match="unstable"):
        simulate_var([[1.1]], 1.0, 10)

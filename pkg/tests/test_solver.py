import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from netpred.solver import (
    GAUSSIAN,
    MULTINOMIAL,
    ConvergenceError,
    GaussianEngine,
    LassoProblem,
    MultinomialEngine,
    SeparationError,
    fit_gaussian_lasso,
    fit_multinomial_lasso,
    kkt_violation,
    soft_threshold,
    softmax,
)


def orthonormal_design(n, d, rng):
    """Centered columns with X'X/n = I, so standardization is the identity."""
    A = rng.normal(size=(n, d))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return np.sqrt(n) * Q


def multinomial_data(n, betas, intercepts, rng):
    X = rng.normal(size=(n, betas.shape[0]))
    P = softmax(intercepts + X @ betas)
    y = np.array([rng.choice(len(intercepts), p=row) + 1 for row in P])
    return X, y, P


# --------------------------------------------------------------- gaussian


@pytest.mark.parametrize("lam", [0.0, 0.05, 0.2, 0.6])
def test_orthonormal_design_matches_soft_threshold(lam, rng):
    n, d = 200, 6
    X = orthonormal_design(n, d, rng)
    y = X @ np.array([1.0, -0.5, 0.3, 0, 0, 0.1]) + rng.normal(size=n) + 2.0
    fit = fit_gaussian_lasso(X, y, lam)
    expected = soft_threshold(X.T @ y / n, lam)
    np.testing.assert_allclose(fit.betas, expected, rtol=0, atol=1e-8)
    assert abs(fit.intercepts[0] - y.mean()) < 1e-8


def test_closed_form_solution_has_tiny_violation(rng):
    n, d = 150, 5
    X = orthonormal_design(n, d, rng)
    y = X @ rng.normal(size=d) + rng.normal(size=n)
    lam = 0.1
    from netpred.solver import CoefficientSet
    exact = CoefficientSet(np.array([y.mean()]), soft_threshold(X.T @ y / n, lam), 1.0)
    assert kkt_violation(LassoProblem(X, y, GAUSSIAN, lam), exact) < 1e-10


def test_lambda_zero_matches_least_squares(rng):
    n, d = 120, 8
    X = rng.normal(size=(n, d)) * rng.uniform(0.5, 3, d) + rng.normal(size=d)
    y = X @ rng.normal(size=d) + rng.normal(size=n)
    A = np.c_[np.ones(n), X]
    ols = np.linalg.solve(A.T @ A, A.T @ y)
    fit = fit_gaussian_lasso(X, y, 0.0)
    np.testing.assert_allclose(fit.intercepts[0], ols[0], rtol=0, atol=1e-8)
    np.testing.assert_allclose(fit.betas, ols[1:], rtol=0, atol=1e-8)
    resid = y - A @ ols
    assert abs(fit.residual_sigma - resid.std(ddof=1)) < 1e-8


def test_large_lambda_gives_exact_zero(rng):
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    eng = GaussianEngine(X, y)
    fit = fit_gaussian_lasso(X, y, eng.lambda_max())
    assert np.all(fit.betas == 0)
    assert fit.intercepts[0] == pytest.approx(y.mean())
    assert kkt_violation(LassoProblem(X, y, GAUSSIAN, eng.lambda_max()), fit) == 0


def test_constant_response_and_constant_column(rng):
    X = rng.normal(size=(30, 3))
    fit = fit_gaussian_lasso(X, np.full(30, 4.0), 0.01)
    assert np.all(fit.betas == 0) and fit.intercepts[0] == 4.0
    X[:, 1] = 7.0
    y = X[:, 0] + rng.normal(size=30) * 0.1
    fit = fit_gaussian_lasso(X, y, 0.0)
    assert fit.betas[1] == 0
    assert np.all(np.isfinite(fit.betas))


def test_perturbation_increases_violation(rng):
    X = rng.normal(size=(80, 5))
    y = X[:, 0] - X[:, 2] + rng.normal(size=80)
    prob = LassoProblem(X, y, GAUSSIAN, 0.05)
    fit = fit_gaussian_lasso(X, y, 0.05)
    v0 = kkt_violation(prob, fit)
    fit.betas[0] += 0.1
    assert kkt_violation(prob, fit) > v0


def test_problem_validation():
    with pytest.raises(ValueError):
        LassoProblem(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        LassoProblem(np.zeros((3, 2)), np.zeros(3), lam=-1)
    with pytest.raises(ValueError):
        LassoProblem(np.array([[np.nan], [1.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        kkt_violation(LassoProblem(np.ones((3, 2)), np.zeros(3)),
                      fit_gaussian_lasso(np.eye(3), np.arange(3.0), 0.0))


def test_non_convergence_reports_violation(rng):
    X = rng.normal(size=(100, 10))
    X[:, 1] = X[:, 0] + 0.01 * rng.normal(size=100)
    y = X[:, 0] + rng.normal(size=100)
    with pytest.raises(ConvergenceError) as exc:
        fit_gaussian_lasso(X, y, 0.0, max_iter=1)
    assert exc.value.violation > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_gaussian_kkt_property(seed, frac):
    rng = np.random.default_rng(seed)
    n, d = rng.integers(10, 60), rng.integers(1, 8)
    X = rng.normal(size=(n, d)) * rng.uniform(0.1, 5, d)
    y = X @ (rng.normal(size=d) * (rng.random(d) < 0.5)) + rng.normal(size=n)
    lam = frac * GaussianEngine(X, y).lambda_max()
    if lam == 0 and n <= d + 1:
        lam = 1e-3
    fit = fit_gaussian_lasso(X, y, lam)
    assert kkt_violation(LassoProblem(X, y, GAUSSIAN, lam), fit) < 1e-6


def test_path_continuity(rng):
    n, d = 200, 6
    X = rng.normal(size=(n, d))
    X = (X - X.mean(0)) / X.std(0)
    y = X @ np.array([0.8, -0.4, 0.2, 0, 0, 0]) + rng.normal(size=n)
    lam = 0.1
    a = fit_gaussian_lasso(X, y, lam)
    b = fit_gaussian_lasso(X, y, lam * 0.99, warm_start=a.betas)
    assert np.max(np.abs(a.betas - b.betas)) < 0.1


# ------------------------------------------------------------ multinomial


def logistic_oracle(X, y, lam):
    """Binary logistic lasso on standardized columns via L-BFGS-B on a u - v split."""
    Z = (X - X.mean(0)) / X.std(0)
    t = (y == 1).astype(float)
    n, d = Z.shape

    def f(w):
        b0, u, v = w[0], w[1:d + 1], w[d + 1:]
        eta = b0 + Z @ (u - v)
        p = 1 / (1 + np.exp(-eta))
        val = np.mean(np.logaddexp(0, eta) - t * eta) + lam * np.sum(u + v)
        g = (p - t) / n
        gb = Z.T @ g
        return val, np.r_[g.sum(), gb + lam, -gb + lam]

    bounds = [(None, None)] + [(0, None)] * (2 * d)
    res = minimize(f, np.zeros(2 * d + 1), jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000})
    b0, beta = res.x[0], res.x[1:d + 1] - res.x[d + 1:]
    return 1 / (1 + np.exp(-(b0 + Z @ beta)))


@pytest.mark.parametrize("lam", [0.0, 0.01, 0.05])
def test_binary_case_matches_logistic_regression(lam, rng):
    X, y, _ = multinomial_data(300, np.array([[0.8, -0.8], [0.0, 0.0], [-0.4, 0.4]]),
                               np.array([0.2, -0.2]), rng)
    fit = fit_multinomial_lasso(X, y, 2, lam)
    p1 = softmax(fit.linear_predictor(X))[:, 0]
    np.testing.assert_allclose(p1, logistic_oracle(X, y, lam), rtol=0, atol=1e-4)


def test_large_lambda_reproduces_marginals(rng):
    y = np.repeat([1, 2, 3], [20, 50, 30])
    X = rng.normal(size=(100, 3))
    eng = MultinomialEngine(X, y, 3)
    fit = fit_multinomial_lasso(X, y, 3, eng.lambda_max() * 1.5)
    assert np.all(fit.betas == 0)
    np.testing.assert_allclose(softmax(fit.intercepts), [0.2, 0.5, 0.3], atol=1e-12)
    logp = np.log([0.2, 0.5, 0.3])
    np.testing.assert_allclose(fit.intercepts, logp - logp.mean(), atol=1e-12)


def test_sign_pattern_recovered(rng):
    B = np.array([[1.5, -1.5, 0.0], [0.0, 1.5, -1.5], [0.0, 0.0, 0.0]])
    X, y, _ = multinomial_data(60, B, np.zeros(3), np.random.default_rng(3))
    fit = fit_multinomial_lasso(X, y, 3, 0.01)
    strong = np.abs(B) > 0
    assert np.all(np.sign(fit.betas[strong]) == np.sign(B[strong]))


def test_absent_category_rejected(rng):
    with pytest.raises(ValueError, match="absent"):
        fit_multinomial_lasso(rng.normal(size=(10, 2)), np.array([1, 2] * 5), 3, 0.1)


def test_separation_flagged_at_zero_lambda():
    x = np.linspace(-1, 1, 40)[:, None]
    y = np.where(x[:, 0] > 0, 2, 1)
    with pytest.raises(SeparationError):
        fit_multinomial_lasso(x, y, 2, 0.0)
    fit = fit_multinomial_lasso(x, y, 2, 0.01)
    assert kkt_violation(LassoProblem(x, y, MULTINOMIAL, 0.01, 2), fit) < 1e-6


def test_intercept_gauge_freedom(rng):
    X, y, _ = multinomial_data(200, rng.normal(size=(3, 3)), np.zeros(3), rng)
    fit = fit_multinomial_lasso(X, y, 3, 0.02)
    P = softmax(fit.linear_predictor(X))
    fit.intercepts = fit.intercepts + 3.7
    np.testing.assert_allclose(softmax(fit.linear_predictor(X)), P, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.floats(0.005, 1.0))
def test_multinomial_kkt_property(seed, K, frac):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(40, 120)), int(rng.integers(1, 5))
    X, y, _ = multinomial_data(n, rng.normal(size=(d, K)), np.zeros(K), rng)
    if len(np.unique(y)) < K:
        y[:K] = np.arange(1, K + 1)
    lam = frac * MultinomialEngine(X, y, K).lambda_max()
    fit = fit_multinomial_lasso(X, y, K, lam)
    assert kkt_violation(LassoProblem(X, y, MULTINOMIAL, lam, K), fit) < 1e-6

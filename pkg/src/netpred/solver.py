"""L1-penalized Gaussian and symmetric multinomial regression.

Both engines solve on internally standardized design columns (mean 0,
population variance 1) and report coefficients on the original scale.
Gaussian fits use cyclic coordinate descent on the Gram matrix; multinomial
fits cycle over categories, solving a weighted lasso on a quadratic
approximation of the log-likelihood for each one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

GAUSSIAN = "gaussian"
MULTINOMIAL = "multinomial"

TOL = 1e-7
MAX_ITER = 10000
# KKT level the Gram kernel keeps sweeping towards once the coefficient
# change criterion is met; well below the 1e-6 acceptance level.
_KKT_TOL = 1e-9
_MIN_WEIGHT = 1e-5


class ConvergenceError(RuntimeError):
    """The solver hit its iteration limit."""

    def __init__(self, message, violation=float("nan")):
        super().__init__(f"{message} (final KKT violation {violation:.3g})")
        self.violation = violation


class SeparationError(ConvergenceError):
    """Unpenalized multinomial fit diverges because the classes are separable."""


@dataclass
class LassoProblem:
    X: np.ndarray
    y: np.ndarray
    family: str = GAUSSIAN
    lam: float = 0.0
    K: int = 1
    standardize: bool = True

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d design matrix")
        n, d = self.X.shape
        if n < 2 or d < 1:
            raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if self.y.shape != (n,):
            raise ValueError("y must have one entry per design row")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("X and y must be finite")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.family not in (GAUSSIAN, MULTINOMIAL):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == MULTINOMIAL and self.K < 2:
            raise ValueError("multinomial family needs K >= 2")


@dataclass
class CoefficientSet:
    """Fitted intercept(s) and slopes on the original design scale.

    ``betas`` is ``(d,)`` for Gaussian fits and ``(d, K)`` for multinomial
    fits, one column per category. ``residual_sigma`` is ``None`` for
    multinomial fits.
    """

    intercepts: np.ndarray
    betas: np.ndarray
    residual_sigma: Optional[float] = None
    n_iter: int = 0

    @property
    def family(self) -> str:
        return GAUSSIAN if self.betas.ndim == 1 else MULTINOMIAL

    def linear_predictor(self, X) -> np.ndarray:
        """``b0 + X @ betas``; shape ``(n,)`` or ``(n, K)``."""
        eta = np.asarray(X, dtype=float) @ self.betas
        return eta + (self.intercepts[0] if self.family == GAUSSIAN else self.intercepts)


class Standardizer:
    """Column centering and unit (population) scaling; constant columns are flagged."""

    def __init__(self, X: np.ndarray, enabled: bool = True):
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        scale = np.maximum(np.abs(self.mean), 1.0)
        self.active = sd > 1e-12 * scale
        self.sd = np.where(self.active, sd, 1.0) if enabled else np.ones_like(sd)
        self.enabled = enabled

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mean) / self.sd
        Z[:, ~self.active] = 0.0
        return Z

    def to_original(self, gamma: np.ndarray) -> np.ndarray:
        sd = self.sd if gamma.ndim == 1 else self.sd[:, None]
        return gamma / sd

    def to_standard(self, beta: np.ndarray) -> np.ndarray:
        sd = self.sd if beta.ndim == 1 else self.sd[:, None]
        return beta * sd


def soft_threshold(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


@numba.njit(cache=True, nogil=True)
def _violation(r, beta, lam):
    worst = 0.0
    for j in range(beta.shape[0]):
        if beta[j] != 0.0:
            v = abs(-r[j] + lam * (1.0 if beta[j] > 0 else -1.0))
        else:
            v = abs(r[j]) - lam
        if v > worst:
            worst = v
    return worst


@numba.njit(cache=True, nogil=True)
def _cd_gram(G, c, lam, beta, tol, max_iter, kkt_tol):
    """Minimize 0.5 b'Gb - c'b + lam |b|_1 in place; returns (sweeps, kkt violation).

    Alternates full sweeps with sweeps restricted to the active set.
    """
    d = beta.shape[0]
    r = c - G @ beta
    sweeps = 0
    full = True
    while sweeps < max_iter:
        sweeps += 1
        max_delta = 0.0
        for j in range(d):
            if not full and beta[j] == 0.0:
                continue
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            z = r[j] + gjj * beta[j]
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                for k in range(d):
                    r[k] -= delta * G[k, j]
                ad = abs(delta) * np.sqrt(gjj)
                if ad > max_delta:
                    max_delta = ad
        if max_delta < tol:
            if full:
                r = c - G @ beta
                if _violation(r, beta, lam) < kkt_tol:
                    break
                tol = tol * 0.1
            full = True
        else:
            full = False
    r = c - G @ beta
    return sweeps, _violation(r, beta, lam)


def _gram_solve(G, c, lam, beta, tol=TOL, max_iter=MAX_ITER):
    G = np.ascontiguousarray(G)
    c = np.ascontiguousarray(c)
    return _cd_gram(G, c, float(lam), beta, float(tol), int(max_iter), _KKT_TOL)


# ---------------------------------------------------------------- gaussian


class GaussianEngine:
    """Precomputed Gram quantities for repeated Gaussian solves on one design."""

    def __init__(self, X, y, standardize=True):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.std = Standardizer(X, standardize)
        Z = self.std.transform(X)
        n = X.shape[0]
        self.n = n
        self.Z = Z
        self.y = y
        self.ymean = y.mean()
        self.G = Z.T @ Z / n
        self.c = Z.T @ (y - self.ymean) / n
        self.constant_y = np.ptp(y) <= 1e-12 * max(1.0, abs(self.ymean))

    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0

    def solve_standard(self, lam, gamma=None, tol=TOL, max_iter=MAX_ITER):
        d = self.G.shape[0]
        gamma = np.zeros(d) if gamma is None else np.array(gamma, dtype=float)
        if self.constant_y:
            return np.zeros(d), 0
        sweeps, viol = _gram_solve(self.G, self.c, lam, gamma, tol, max_iter)
        if sweeps >= max_iter and viol > 1e-6:
            raise ConvergenceError(f"gaussian lasso did not converge in {max_iter} sweeps", viol)
        return gamma, sweeps

    def coefficients(self, gamma, n_iter=0) -> CoefficientSet:
        beta = self.std.to_original(gamma)
        b0 = self.ymean - self.std.mean @ beta
        resid = self.y - self.ymean - self.Z @ gamma
        sigma = float(resid.std(ddof=1)) if self.n > 1 else 0.0
        return CoefficientSet(np.array([b0]), beta, sigma, n_iter)


def fit_gaussian_lasso(X, y, lam, *, standardize=True, warm_start=None, tol=TOL,
                       max_iter=MAX_ITER) -> CoefficientSet:
    """Minimize ``(1/2n)||y - b0 - X b||^2 + lam ||b||_1`` (unpenalized intercept).

    The problem is solved on standardized columns, so ``lam`` acts on
    coefficients measured per standard deviation of each predictor.
    A constant response yields all-zero slopes and ``b0 = mean(y)``.
    """
    prob = LassoProblem(X, y, GAUSSIAN, lam, standardize=standardize)
    eng = GaussianEngine(prob.X, prob.y, standardize)
    gamma0 = None if warm_start is None else eng.std.to_standard(np.asarray(warm_start, dtype=float))
    gamma, sweeps = eng.solve_standard(lam, gamma0, tol, max_iter)
    return eng.coefficients(gamma, sweeps)


# ------------------------------------------------------------- multinomial


def softmax(eta: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max shifting."""
    e = np.exp(eta - eta.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _multinomial_objective(eta, Y, B, lam):
    m = eta.max(axis=1, keepdims=True)
    lse = (m[:, 0] + np.log(np.exp(eta - m).sum(axis=1)))
    nll = np.mean(lse - (eta * Y).sum(axis=1))
    return nll + lam * np.abs(B).sum()


class MultinomialEngine:
    """Standardized design and one-hot response for repeated multinomial solves."""

    def __init__(self, X, y, K, standardize=True):
        X = np.asarray(X, dtype=float)
        codes = np.asarray(y).astype(np.int64)
        counts = np.bincount(codes - 1, minlength=K)
        if len(counts) > K or np.any(counts == 0):
            missing = [k + 1 for k in range(K) if k >= len(counts) or counts[k] == 0]
            raise ValueError(f"categories {missing} absent from the response")
        self.K = K
        self.std = Standardizer(X, standardize)
        self.Z = self.std.transform(X)
        self.n = X.shape[0]
        self.Y = np.zeros((self.n, K))
        self.Y[np.arange(self.n), codes - 1] = 1.0
        self.marginals = counts / self.n
        logp = np.log(self.marginals)
        self.null_intercepts = logp - logp.mean()

    def lambda_max(self) -> float:
        if self.Z.shape[1] == 0:
            return 0.0
        g = self.Z.T @ (self.Y - self.marginals) / self.n
        return float(np.max(np.abs(g)))

    def gradient(self, b0, B):
        P = softmax(b0 + self.Z @ B)
        return -(self.Y - P).mean(axis=0), -self.Z.T @ (self.Y - P) / self.n

    def violation(self, b0, B, lam) -> float:
        g0, gB = self.gradient(b0, B)
        return max(float(np.max(np.abs(g0))), _kkt_matrix(gB, B, lam))

    def solve_standard(self, lam, start=None, tol=TOL, max_iter=MAX_ITER):
        """Return ``(b0, B, iterations)`` in standardized coordinates."""
        n, d = self.Z.shape
        K = self.K
        if start is None:
            b0, B = self.null_intercepts.copy(), np.zeros((d, K))
        else:
            b0, B = np.array(start[0], dtype=float), np.array(start[1], dtype=float)
        if d == 0 or (start is None and lam >= self.lambda_max()):
            # the null model is exact: zero slopes and log-marginal intercepts
            if d == 0 or self.violation(b0, B, lam) < _KKT_TOL:
                return b0, B, 0
        Z, Y = self.Z, self.Y
        eta = b0 + Z @ B
        obj = _multinomial_objective(eta, Y, B, lam)
        it = 0
        while it < max_iter:
            it += 1
            max_delta = 0.0
            for k in range(K):
                P = softmax(eta)
                pk = P[:, k]
                for bound in (False, True):
                    w = np.full(n, 0.25) if bound else np.maximum(pk * (1 - pk), _MIN_WEIGHT)
                    z = eta[:, k] + (Y[:, k] - pk) / w
                    sw = w.sum()
                    zbar = w @ z / sw
                    xbar = w @ Z / sw
                    Zc = Z - xbar
                    G = (Zc * w[:, None]).T @ Zc / n
                    c = (Zc * w[:, None]).T @ (z - zbar) / n
                    beta = B[:, k].copy()
                    _gram_solve(G, c, lam, beta, tol * 0.1, max_iter)
                    new_b0 = zbar - xbar @ beta
                    new_eta_k = new_b0 + Z @ beta
                    trial = eta.copy()
                    trial[:, k] = new_eta_k
                    Btrial = B.copy()
                    Btrial[:, k] = beta
                    new_obj = _multinomial_objective(trial, Y, Btrial, lam)
                    # the 1/4 curvature bound majorizes the loss, so it always descends
                    if new_obj <= obj + 1e-13 * max(1.0, abs(obj)) or bound:
                        break
                delta = max(abs(new_b0 - b0[k]), float(np.max(np.abs(beta - B[:, k]), initial=0.0)))
                max_delta = max(max_delta, delta)
                B[:, k] = beta
                b0[k] = new_b0
                eta = trial
                obj = new_obj
            if lam == 0.0 and np.max(np.abs(B), initial=0.0) > 1e4:
                raise SeparationError("unpenalized multinomial fit diverges; classes look separable",
                                      self.violation(b0, B, lam))
            if max_delta < tol:
                if self.violation(b0, B, lam) < 1e-7:
                    break
                tol *= 0.1
        b0 = b0 - b0.mean()
        if lam == 0.0 and self._diverging(b0, B):
            raise SeparationError("unpenalized multinomial fit diverges; classes look separable",
                                  self.violation(b0, B, lam))
        viol = self.violation(b0, B, lam)
        if it >= max_iter and viol > 1e-6:
            cls = SeparationError if lam == 0.0 else ConvergenceError
            raise cls(f"multinomial lasso did not converge in {max_iter} iterations", viol)
        return b0, B, it

    def _diverging(self, b0, B) -> bool:
        # a finite minimizer gets worse when scaled up; under separation the loss keeps falling
        eta = b0 + self.Z @ B
        if np.max(np.ptp(eta, axis=1), initial=0.0) < 1.0:
            return False
        return _multinomial_objective(2 * eta, self.Y, B, 0.0) <= _multinomial_objective(eta, self.Y, B, 0.0)

    def coefficients(self, b0, B, n_iter=0) -> CoefficientSet:
        beta = self.std.to_original(B)
        intercepts = b0 - self.std.mean @ beta
        return CoefficientSet(intercepts - intercepts.mean(), beta, None, n_iter)


def _kkt_matrix(grad, beta, lam) -> float:
    active = beta != 0
    v = np.where(active, np.abs(grad + lam * np.sign(beta)), np.abs(grad) - lam)
    return max(0.0, float(np.max(v, initial=0.0)))


def fit_multinomial_lasso(X, y, K, lam, *, standardize=True, warm_start=None, tol=TOL,
                          max_iter=MAX_ITER) -> CoefficientSet:
    """Penalized multinomial regression with one coefficient vector per category.

    Minimizes the mean negative log-likelihood of
    ``P(k | x) = exp(b0_k + x b_k) / sum_l exp(b0_l + x b_l)`` plus
    ``lam * sum_{j,k} |b_jk|``. Intercepts are unpenalized and returned
    centered to sum zero. ``y`` holds codes ``1..K``; every category must occur.
    """
    prob = LassoProblem(X, y, MULTINOMIAL, lam, K, standardize)
    eng = MultinomialEngine(prob.X, prob.y, K, standardize)
    start = None
    if warm_start is not None:
        B = eng.std.to_standard(np.asarray(warm_start.betas, dtype=float))
        start = (warm_start.intercepts + eng.std.mean @ warm_start.betas, B)
    b0, B, it = eng.solve_standard(lam, start, tol, max_iter)
    return eng.coefficients(b0, B, it)


# ---------------------------------------------------------------------- kkt


def kkt_violation(problem: LassoProblem, solution: CoefficientSet) -> float:
    """Largest subgradient-optimality violation of ``solution`` for ``problem``.

    Measured in the standardized coordinates the problem is solved in. For a
    nonzero coefficient the violation is ``|grad_j + lam*sign(b_j)|``, for a
    zero one ``max(0, |grad_j| - lam)``. Multinomial fits also count the
    (unpenalized) intercept gradients.
    """
    X, y = problem.X, problem.y
    d = X.shape[1]
    betas = np.asarray(solution.betas, dtype=float)
    if problem.family == GAUSSIAN:
        if betas.shape != (d,) or np.size(solution.intercepts) != 1:
            raise ValueError("solution dimensions do not match a gaussian problem")
        std = Standardizer(X, problem.standardize)
        Z = std.transform(X)
        gamma = std.to_standard(betas)
        gamma[~std.active] = 0.0
        n = X.shape[0]
        resid = y - y.mean() - Z @ gamma
        grad = -Z.T @ resid / n
        return _kkt_matrix(grad, gamma, problem.lam)
    if betas.shape != (d, problem.K) or np.size(solution.intercepts) != problem.K:
        raise ValueError("solution dimensions do not match a multinomial problem")
    eng = MultinomialEngine(X, y, problem.K, problem.standardize)
    B = eng.std.to_standard(betas)
    B[~eng.std.active] = 0.0
    b0 = solution.intercepts + eng.std.mean @ betas
    return eng.violation(b0, B, problem.lam)

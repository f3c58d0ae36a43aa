"""Regularization paths and k-fold cross-validated penalty selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from netpred.rng import make_rng
from netpred.solver import (
    GAUSSIAN,
    MULTINOMIAL,
    CoefficientSet,
    GaussianEngine,
    MultinomialEngine,
)


class CvError(ValueError):
    pass


@dataclass(frozen=True)
class CvConfig:
    folds: int = 10
    n_lambda: int = 50
    lambda_min_ratio: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise CvError("need at least 2 folds")
        if self.n_lambda < 1:
            raise CvError("n_lambda must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise CvError("lambda_min_ratio must lie in (0, 1)")


@dataclass
class CvResult:
    lam: float
    index: int
    lambdas: np.ndarray
    cv_loss: np.ndarray
    fold_ids: np.ndarray


def _engine(X, y, family, K, standardize=True):
    if family == GAUSSIAN:
        return GaussianEngine(X, y, standardize)
    return MultinomialEngine(X, y, K, standardize)


def _path_from_max(lmax: float, config: CvConfig) -> np.ndarray:
    if config.n_lambda == 1:
        return np.array([lmax])
    return lmax * np.logspace(0.0, np.log10(config.lambda_min_ratio), config.n_lambda)


def lambda_path(X, y, family=GAUSSIAN, config: CvConfig = CvConfig(), K: int = 1) -> np.ndarray:
    """Log-spaced decreasing penalties from ``lambda_max`` down to ``lambda_max * ratio``.

    ``lambda_max`` is the largest absolute gradient of the unpenalized loss
    at the null (intercept-only) model on the standardized design, i.e. the
    smallest penalty whose solution has no nonzero slope.
    """
    eng = _engine(X, y, family, K)
    if family == GAUSSIAN and eng.constant_y:
        raise CvError("response has zero variance")
    lmax = eng.lambda_max()
    if lmax <= 0:
        raise CvError("no predictor is correlated with the response; lambda_max is 0")
    return _path_from_max(lmax, config)


def assign_folds(n: int, folds: int, rng, strata=None) -> np.ndarray:
    """Fold id per row; fold sizes differ by at most one.

    With ``strata`` the rows of each stratum are shuffled and dealt out
    consecutively so every class is spread across folds.
    """
    if folds > n:
        raise CvError(f"{folds} folds requested for {n} rows")
    if strata is None:
        order = rng.permutation(n)
    else:
        strata = np.asarray(strata)
        order = np.concatenate([rng.permutation(np.flatnonzero(strata == s)) for s in np.unique(strata)])
    ids = np.empty(n, dtype=np.int64)
    ids[order] = np.arange(n) % folds
    return ids


def _solve_path(eng, lambdas, family):
    """Warm-started path; returns the list of standardized solutions."""
    sols = []
    if family == GAUSSIAN:
        gamma = None
        for lam in lambdas:
            gamma, _ = eng.solve_standard(lam, gamma)
            sols.append(gamma.copy())
    else:
        start = None
        for lam in lambdas:
            b0, B, _ = eng.solve_standard(lam, start)
            start = (b0, B)
            sols.append((b0.copy(), B.copy()))
    return sols


def _test_loss(eng, sol, Xtest, ytest, family):
    """Summed loss on held-out rows."""
    if family == GAUSSIAN:
        beta = eng.std.to_original(sol)
        pred = eng.ymean + (Xtest - eng.std.mean) @ beta
        return float(np.sum((ytest - pred) ** 2))
    b0, B = sol
    eta = b0 + eng.std.transform(Xtest) @ B
    m = eta.max(axis=1)
    lse = m + np.log(np.exp(eta - m[:, None]).sum(axis=1))
    codes = ytest.astype(np.int64) - 1
    return float(np.sum(lse - eta[np.arange(len(codes)), codes]))


def _fold_ids(y, family, K, config, rng):
    n = len(y)
    strata = y if family == MULTINOMIAL else None
    for attempt in range(2):
        ids = assign_folds(n, config.folds, rng, strata)
        if family == GAUSSIAN:
            return ids
        ok = all(len(np.unique(y[ids != f])) == K for f in range(config.folds))
        if ok:
            return ids
    raise CvError("a training fold is missing a category even after reshuffling")


def cv_losses(X, y, family, lambdas, fold_ids, K=1) -> np.ndarray:
    """Mean held-out loss per penalty (squared error or multinomial log-loss)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(len(lambdas))
    for f in np.unique(fold_ids):
        test = fold_ids == f
        eng = _engine(X[~test], y[~test], family, K)
        for i, sol in enumerate(_solve_path(eng, lambdas, family)):
            total[i] += _test_loss(eng, sol, X[test], y[test], family)
    return total / len(y)


def select_lambda(X, y, family=GAUSSIAN, config: CvConfig = CvConfig(), K: int = 1,
                  rng=None) -> CvResult:
    """k-fold cross-validated penalty with the minimum mean held-out loss.

    Ties go to the larger penalty. Folds come from a seeded shuffle
    (stratified by category for multinomial responses).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    lambdas = lambda_path(X, y, family, config, K)
    if rng is None:
        rng = make_rng(config.seed)
    fold_ids = _fold_ids(y, family, K, config, rng)
    losses = cv_losses(X, y, family, lambdas, fold_ids, K)
    idx = int(np.argmin(losses))
    return CvResult(float(lambdas[idx]), idx, lambdas, losses, fold_ids)


def fit_node_regression(X, y, family, K=1, config: Optional[CvConfig] = None, lam=None,
                        rng=None):
    """Fit one nodewise regression with a fixed ``lam`` or a CV-selected one.

    Returns ``(coefficients, lam, cv_result_or_None)``. The final fit follows
    the warm-started path on all rows down to the selected penalty.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    eng = _engine(X, y, family, K)
    if X.shape[1] == 0 or (family == GAUSSIAN and eng.constant_y):
        return _null_fit(eng, family, X.shape[1]), 0.0 if lam is None else float(lam), None
    cvres = None
    if lam is None:
        if eng.lambda_max() <= 0:
            return _null_fit(eng, family, X.shape[1]), 0.0, None
        cvres = select_lambda(X, y, family, config or CvConfig(), K, rng)
        lambdas = cvres.lambdas[: cvres.index + 1]
    else:
        lambdas = [float(lam)]
    sol = _solve_path(eng, lambdas, family)[-1]
    if family == GAUSSIAN:
        coef = eng.coefficients(sol)
    else:
        coef = eng.coefficients(*sol)
    return coef, float(lambdas[-1]), cvres


def _null_fit(eng, family, d) -> CoefficientSet:
    if family == GAUSSIAN:
        return eng.coefficients(np.zeros(d))
    return eng.coefficients(eng.null_intercepts.copy(), np.zeros((d, eng.K)))

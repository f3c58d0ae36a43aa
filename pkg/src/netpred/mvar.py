"""Mixed VAR models with consecutiveness-aware lagged designs."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from netpred.cv import CvConfig, fit_node_regression
from netpred.data import DataError, Dataset, TimeIndex, data_fingerprint
from netpred.design import design_matrix, predictor_map
from netpred.mgm import NodeModel, _contrast, _is_signable, pair_sign
from netpred.rng import make_rng
from netpred.solver import GAUSSIAN, MULTINOMIAL

MIN_ROWS = 20


@dataclass
class LaggedDesign:
    X: np.ndarray
    Y: np.ndarray
    kept_rows: np.ndarray
    predictors: list


@dataclass
class VARModel:
    """Fitted VAR network.

    ``coefficients[i, j, l]`` is the effect of variable ``j`` at ``t - lags[l]``
    on variable ``i`` at ``t``. When both are continuous it is the regression
    coefficient itself; otherwise it is the mean absolute value of the
    category-indexed coefficients and the direction lives in ``signs``.
    """

    spec: tuple
    lags: tuple
    node_models: list
    coefficients: np.ndarray
    signs: np.ndarray
    intercepts: np.ndarray
    residual_sigmas: np.ndarray
    means: Optional[np.ndarray] = None
    binary_sign: bool = False
    seed: int = 0
    cv: Optional[CvConfig] = None
    data_hash: Optional[str] = None
    extra: dict = field(default_factory=dict)

    model_kind = "var"

    @property
    def p(self) -> int:
        return len(self.spec)

    @property
    def per_node_lambda(self) -> np.ndarray:
        return np.array([m.lam for m in self.node_models])

    @property
    def wadj(self) -> np.ndarray:
        return np.abs(self.coefficients)


def consecutive_rows(n: int, lags: Sequence[int], time: Optional[TimeIndex] = None) -> np.ndarray:
    """Rows ``t`` whose every lagged row ``t - l`` exists and, with a time
    index, lies on the same day exactly ``l`` beeps earlier."""
    lags = list(lags)
    t = np.arange(max(lags), n)
    if time is None:
        return t
    if len(time) != n:
        raise DataError(f"time index has {len(time)} rows, data has {n}")
    ok = np.ones(len(t), dtype=bool)
    for lag in lags:
        ok &= (time.day[t] == time.day[t - lag]) & (time.beep[t] - time.beep[t - lag] == lag)
    return t[ok]


def build_lagged_design(d: Dataset, lags: Sequence[int] = (1,), time: Optional[TimeIndex] = None) -> LaggedDesign:
    lags = tuple(sorted(set(int(x) for x in lags)))
    if not lags or lags[0] < 1:
        raise ValueError("lags must be positive integers")
    rows = consecutive_rows(d.n, lags, time)
    everyone = list(range(d.p))
    blocks, preds = [], []
    for lag in lags:
        blocks.append(design_matrix(d.values[rows - lag], d.spec, everyone))
        preds.extend(predictor_map(d.spec, everyone, lag))
    X = np.hstack(blocks) if len(rows) else np.empty((0, len(preds)))
    return LaggedDesign(X, d.values[rows], rows, preds)


def fit_mvar(d: Dataset, lags: Sequence[int] = (1,), time: Optional[TimeIndex] = None,
             cv: Optional[CvConfig] = None, seed: Optional[int] = None, *, lam=None,
             binary_sign: bool = False, threads: int = 1) -> VARModel:
    """Estimate a VAR model: every variable at ``t`` regressed on all lagged
    variables, itself included, with a per-node CV-selected penalty."""
    cv = cv or CvConfig()
    seed = cv.seed if seed is None else seed
    if not d.is_centered:
        raise DataError("fit_mvar expects centered data; call center_continuous first")
    lags = tuple(sorted(set(int(x) for x in lags)))
    des = build_lagged_design(d, lags, time)
    if len(des.kept_rows) < MIN_ROWS:
        raise DataError(f"only {len(des.kept_rows)} usable lagged rows; need at least {MIN_ROWS}")
    lams = [None] * d.p if lam is None else list(np.broadcast_to(lam, (d.p,)))

    def work(i):
        v = d.spec[i]
        family = MULTINOMIAL if v.is_categorical else GAUSSIAN
        y = des.Y[:, i]
        coef, lam_sel, _ = fit_node_regression(des.X, y, family, v.levels, cv, lams[i],
                                               rng=make_rng(seed, i))
        marg = None
        if family == MULTINOMIAL:
            marg = np.bincount(y.astype(np.int64) - 1, minlength=v.levels) / len(y)
        return NodeModel(i, family, v.levels, des.predictors, coef, lam_sel, marg)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            models = list(ex.map(work, range(d.p)))
    else:
        models = [work(i) for i in range(d.p)]
    coefs, signs = lag_arrays(models, lags, binary_sign)
    intercepts = np.array([m.coefficients.intercepts[0] if m.family == GAUSSIAN else np.nan for m in models])
    sigmas = np.array([m.coefficients.residual_sigma if m.family == GAUSSIAN else np.nan for m in models])
    return VARModel(d.spec, lags, models, coefs, signs, intercepts, sigmas, d.means, binary_sign, seed, cv,
                    data_fingerprint(d.values))


def lag_arrays(models: Sequence[NodeModel], lags: Sequence[int], binary_sign: bool = False):
    """Directed ``p x p x L`` coefficient and sign arrays from per-response fits."""
    p = len(models)
    coefs = np.zeros((p, p, len(lags)))
    signs = np.zeros((p, p, len(lags)), dtype=int)
    for i, m in enumerate(models):
        for j in range(p):
            for l, lag in enumerate(lags):
                b = m.block(j, lag)
                if m.family == GAUSSIAN and b.shape == (1, 1):
                    coefs[i, j, l] = b[0, 0]
                    signs[i, j, l] = int(np.sign(b[0, 0]))
                    continue
                coefs[i, j, l] = np.abs(b).mean()
                if coefs[i, j, l] > 0 and _is_signable(m, binary_sign) and _is_signable(models[j], binary_sign):
                    signs[i, j, l] = pair_sign([_contrast(b)])
    return coefs, signs

"""Pairwise mixed graphical models by L1-penalized nodewise regression."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from netpred.cv import CvConfig, fit_node_regression
from netpred.data import DataError, Dataset, data_fingerprint
from netpred.design import Predictor, design_matrix, predictor_map
from netpred.rng import make_rng
from netpred.solver import GAUSSIAN, MULTINOMIAL, CoefficientSet

log = logging.getLogger(__name__)

OR = "OR"
AND = "AND"


@dataclass
class NodeModel:
    """One fitted nodewise regression.

    ``predictors[r]`` names the source of row ``r`` of ``coefficients.betas``.
    ``marginals`` holds the training category frequencies of a categorical
    response (``None`` for Gaussian nodes).
    """

    node: int
    family: str
    K: int
    predictors: list
    coefficients: CoefficientSet
    lam: float
    marginals: Optional[np.ndarray] = None

    def __post_init__(self):
        self.predictors = [Predictor(*p) for p in self.predictors]
        if len(self.predictors) != len(self.coefficients.betas):
            raise ValueError("predictor map must cover every coefficient row exactly once")
        if any(p.var == self.node and p.lag == 0 for p in self.predictors):
            raise ValueError("a node cannot predict itself cross-sectionally")

    def block(self, source: int, lag: int = 0) -> np.ndarray:
        """Coefficient rows contributed by ``source`` (at ``lag``), as a 2-d array."""
        rows = [r for r, p in enumerate(self.predictors) if p.var == source and p.lag == lag]
        b = self.coefficients.betas[rows]
        return b[:, None] if b.ndim == 1 else b

    def neighbors(self, lag: Optional[int] = None) -> set:
        betas = self.coefficients.betas
        nz = np.any(betas != 0, axis=1) if betas.ndim == 2 else betas != 0
        return {p.var for p, z in zip(self.predictors, nz) if z and (lag is None or p.lag == lag)}


@dataclass
class PairwiseMGM:
    spec: tuple
    node_models: list
    wadj: np.ndarray
    signs: np.ndarray
    rule: str = OR
    means: Optional[np.ndarray] = None
    binary_sign: bool = False
    seed: int = 0
    cv: Optional[CvConfig] = None
    data_hash: Optional[str] = None
    extra: dict = field(default_factory=dict)

    model_kind = "mgm"

    @property
    def p(self) -> int:
        return len(self.spec)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([m.lam for m in self.node_models])

    @property
    def adjacency(self) -> np.ndarray:
        return self.wadj > 0


def combine_neighborhoods(neighbors: Sequence[set], rule: str = OR) -> np.ndarray:
    """Symmetric boolean adjacency from nodewise neighbor sets.

    ``OR`` keeps (i, j) if either regression selects the other node,
    ``AND`` only if both do.
    """
    rule = rule.upper()
    if rule not in (OR, AND):
        raise ValueError(f"unknown rule {rule!r}")
    p = len(neighbors)
    sel = np.zeros((p, p), dtype=bool)
    for i, nb in enumerate(neighbors):
        if i in nb:
            raise ValueError(f"neighbor set of node {i} contains itself")
        sel[i, list(nb)] = True
    return (sel | sel.T) if rule == OR else (sel & sel.T)


def _is_signable(model: NodeModel, binary_sign: bool) -> bool:
    return model.family == GAUSSIAN or (binary_sign and model.K == 2)


def _contrast(block: np.ndarray) -> float:
    """Signed effect in a coefficient block.

    A binary predictor contributes its category-2 minus category-1 row, a
    binary response its class-2 minus class-1 column; continuous sides are
    taken as is. The contrast does not depend on how the penalized fit
    splits weight between the two collinear indicators.
    """
    rows = block[1] - block[0] if block.shape[0] == 2 else block[0]
    return float(rows[1] - rows[0]) if rows.shape[0] == 2 else float(rows[0])


def pair_sign(contrasts) -> int:
    nz = [c for c in contrasts if c != 0]
    if not nz:
        return 0
    if all(c > 0 for c in nz):
        return 1
    if all(c < 0 for c in nz):
        return -1
    return 0


def edge_weights(models: Sequence[NodeModel], adjacency: np.ndarray, binary_sign: bool = False):
    """Aggregate nodewise coefficients into a weighted, signed undirected graph.

    The weight of a present edge is the mean absolute value of every
    coefficient linking the two variables in both regressions (all
    category-indexed ones for categorical endpoints). The sign is defined
    for edges between continuous variables, and between continuous or
    binary variables when ``binary_sign`` is set; otherwise it is 0.
    Edges whose collected coefficients are all zero are dropped.
    """
    adjacency = np.asarray(adjacency, dtype=bool)
    if not np.array_equal(adjacency, adjacency.T):
        raise ValueError("adjacency must be symmetric")
    p = len(models)
    wadj = np.zeros((p, p))
    signs = np.zeros((p, p), dtype=int)
    for i in range(p):
        for j in range(i + 1, p):
            if not adjacency[i, j]:
                continue
            b_ij = models[i].block(j)
            b_ji = models[j].block(i)
            w = np.concatenate([np.abs(b_ij).ravel(), np.abs(b_ji).ravel()]).mean()
            if w == 0:
                continue
            wadj[i, j] = wadj[j, i] = w
            if _is_signable(models[i], binary_sign) and _is_signable(models[j], binary_sign):
                signs[i, j] = signs[j, i] = pair_sign([_contrast(b_ij), _contrast(b_ji)])
    return wadj, signs


def _node_problem(d: Dataset, s: int):
    others = [j for j in range(d.p) if j != s]
    X = design_matrix(d.values, d.spec, others)
    v = d.spec[s]
    family = MULTINOMIAL if v.is_categorical else GAUSSIAN
    return X, d.values[:, s], family, v.levels, predictor_map(d.spec, others)


def fit_node(d: Dataset, s: int, cv: CvConfig, seed: int, lam=None) -> NodeModel:
    """Regress column ``s`` on all other columns of ``d``."""
    X, y, family, K, preds = _node_problem(d, s)
    coef, lam_sel, _ = fit_node_regression(X, y, family, K, cv, lam, rng=make_rng(seed, s))
    marg = None
    if family == MULTINOMIAL:
        marg = np.bincount(y.astype(np.int64) - 1, minlength=K) / len(y)
    return NodeModel(s, family, K, preds, coef, lam_sel, marg)


def fit_mgm(d: Dataset, rule: str = OR, cv: Optional[CvConfig] = None, seed: Optional[int] = None,
            *, lam=None, binary_sign: bool = False, threads: int = 1) -> PairwiseMGM:
    """Estimate a pairwise MGM from centered data.

    Every node is regressed on all other variables with its own penalty,
    chosen by k-fold CV unless ``lam`` (a scalar or one value per node)
    forces it. Neighborhoods are combined with ``rule``.
    """
    cv = cv or CvConfig()
    seed = cv.seed if seed is None else seed
    if not d.is_centered:
        raise DataError("fit_mgm expects centered data; call center_continuous first")
    if d.p < 2:
        raise DataError("need at least two variables")
    if d.n <= 10:
        raise DataError(f"need more than 10 rows, got {d.n}")
    lams = [None] * d.p if lam is None else list(np.broadcast_to(lam, (d.p,)))

    def work(s):
        return fit_node(d, s, cv, seed, lams[s])

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            models = list(ex.map(work, range(d.p)))
    else:
        models = [work(s) for s in range(d.p)]
    for m in models:
        log.debug("node %s: lambda=%.4g, %d neighbors", d.spec[m.node].name, m.lam, len(m.neighbors()))
    adj = combine_neighborhoods([m.neighbors() for m in models], rule)
    wadj, signs = edge_weights(models, adj, binary_sign)
    return PairwiseMGM(d.spec, models, wadj, signs, rule.upper(), d.means, binary_sign, seed, cv,
                       data_fingerprint(d.values))

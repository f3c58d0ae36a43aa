"""Nodewise predictions and predictability measures.

Continuous nodes are scored by explained variance, categorical nodes by
accuracy, accuracy normalized against the modal-category (intercept) model,
and the accuracy of that intercept model itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from netpred.data import (
    DataError,
    Dataset,
    TimeIndex,
    center_continuous,
    data_fingerprint,
    marginal_distribution,
    spec_hash,
)
from netpred.design import design_matrix
from netpred.mvar import build_lagged_design
from netpred.solver import GAUSSIAN, softmax

WITHIN_SAMPLE = "within_sample"
OUT_OF_SAMPLE = "out_of_sample"


def _coefs(model):
    return getattr(model, "coefficients", model)


def _design_row(model, row) -> np.ndarray:
    coef = _coefs(model)
    x = np.asarray(row, dtype=float)
    if x.shape[-1] != coef.betas.shape[0]:
        raise ValueError(f"row has {x.shape[-1]} predictor values, model needs {coef.betas.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("missing predictor value")
    return x


def predict_gaussian(model, row) -> float:
    """Conditional mean ``b0 + sum_j b_j x_j`` for one design row."""
    coef = _coefs(model)
    x = _design_row(model, row)
    return float(coef.intercepts[0] + x @ coef.betas)


def predict_categorical(model, row):
    """Category probabilities and the most probable category (1-based, lowest on ties)."""
    coef = _coefs(model)
    x = _design_row(model, row)
    prob = softmax(coef.intercepts + x @ coef.betas)
    return prob, int(np.argmax(prob)) + 1


@dataclass
class Predictions:
    node: int
    predicted: np.ndarray
    probabilities: Optional[np.ndarray] = None


def predict_node(model, X) -> Predictions:
    """Vectorized predictions for every row of a design matrix."""
    coef = model.coefficients
    X = _design_row(coef, X)
    eta = coef.linear_predictor(X)
    if model.family == GAUSSIAN:
        return Predictions(model.node, eta)
    prob = softmax(eta)
    return Predictions(model.node, np.argmax(prob, axis=1) + 1, prob)


def r_squared(predicted, observed) -> float:
    """``1 - var(predicted - observed) / var(observed)``; can be negative out of sample."""
    pred = np.asarray(predicted, dtype=float)
    obs = np.asarray(observed, dtype=float)
    if pred.shape != obs.shape or obs.size < 2:
        raise ValueError("need two equal-length vectors with at least two entries")
    v = obs.var(ddof=1)
    if v <= 0:
        raise ValueError("observed values have zero variance")
    return float(1.0 - (pred - obs).var(ddof=1) / v)


def accuracy(predicted_classes, observed) -> float:
    pred = np.asarray(predicted_classes)
    obs = np.asarray(observed)
    if pred.shape != obs.shape or obs.size < 1:
        raise ValueError("need two equal-length, non-empty vectors")
    return float(np.mean(pred == obs))


def normalized_accuracy(acc: float, marginals) -> float:
    """Accuracy gain over always predicting the modal category, scaled by
    the headroom ``1 - max(marginals)``. Not clamped."""
    m = float(np.max(marginals))
    if m >= 1.0:
        raise ValueError("degenerate marginal: one category has probability 1")
    return (acc - m) / (1.0 - m)


def marginal_accuracy(train_marginals) -> float:
    """Accuracy of the intercept-only model, i.e. the largest category frequency."""
    p = np.asarray(train_marginals, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("marginals must form a probability distribution")
    return float(p.max())


@dataclass
class PredictabilityReport:
    """Per-node measures: ``{"R2"}`` for continuous, ``{"CC", "nCC", "CCmarg"}`` for categorical."""

    names: list
    kinds: list
    measures: list
    sample_kind: str = WITHIN_SAMPLE
    n_rows: int = 0
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.measures[self.names.index(name)]

    def to_dict(self) -> dict:
        return {
            "sample_kind": self.sample_kind,
            "n_rows": self.n_rows,
            "nodes": [{"name": n, "kind": k, **m} for n, k, m in zip(self.names, self.kinds, self.measures)],
            **self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PredictabilityReport":
        names = [x["name"] for x in d["nodes"]]
        kinds = [x["kind"] for x in d["nodes"]]
        measures = [{k: v for k, v in x.items() if k not in ("name", "kind")} for x in d["nodes"]]
        extra = {k: v for k, v in d.items() if k not in ("sample_kind", "n_rows", "nodes")}
        return cls(names, kinds, measures, d["sample_kind"], d.get("n_rows", 0), extra)

    def to_table(self) -> str:
        width = max([len("Variable")] + [len(n) for n in self.names])
        cols = ["R2", "CC", "nCC", "CCmarg"]
        lines = [f"{'Variable':<{width}}  " + "  ".join(f"{c:>7}" for c in cols)]
        for name, m in zip(self.names, self.measures):
            cells = [f"{m[c]:7.3f}" if c in m else f"{'':>7}" for c in cols]
            lines.append(f"{name:<{width}}  " + "  ".join(cells))
        lines.append(f"({self.sample_kind.replace('_', ' ')}, n = {self.n_rows})")
        return "\n".join(lines) + "\n"


def _prepare(model, d: Dataset) -> Dataset:
    if spec_hash(d.spec) != spec_hash(model.spec):
        raise DataError("spec mismatch between model and data")
    if d.is_centered:
        if model.means is not None and not np.allclose(d.means, model.means, equal_nan=True, rtol=0, atol=1e-12):
            raise DataError("data was centered with means other than the training means")
        return d
    if model.means is None:
        return d
    return center_continuous(d, model.means)


def node_measures(model, pred: Predictions, observed) -> dict:
    if model.family == GAUSSIAN:
        return {"R2": r_squared(pred.predicted, observed)}
    K = model.K
    obs = np.asarray(observed).astype(np.int64)
    cc = accuracy(pred.predicted, obs)
    train = model.marginals if model.marginals is not None else marginal_distribution(obs, K)
    return {
        "CC": cc,
        "nCC": normalized_accuracy(cc, train),
        "CCmarg": marginal_accuracy(marginal_distribution(obs, K)),
    }


def evaluate(model, d: Dataset, time: Optional[TimeIndex] = None,
             sample_kind: Optional[str] = None) -> PredictabilityReport:
    """Predictability of every node of a fitted MGM or VAR model on ``d``.

    Uncentered data is centered with the training means stored in the model;
    normalized accuracy uses the training marginals. ``sample_kind`` defaults
    to within-sample when ``d`` is the training data and out-of-sample
    otherwise.
    """
    d = _prepare(model, d)
    if sample_kind is None:
        within = model.data_hash is not None and data_fingerprint(d.values) == model.data_hash
        sample_kind = WITHIN_SAMPLE if within else OUT_OF_SAMPLE
    if model.model_kind == "var":
        des = build_lagged_design(d, model.lags, time)
        if len(des.kept_rows) < 2:
            raise DataError("too few usable lagged rows to evaluate")
        designs = [des.X] * model.p
        Y = des.Y
    else:
        if d.n < 2:
            raise DataError("need at least two rows to evaluate")
        designs = [design_matrix(d.values, d.spec, _source_vars(m)) for m in model.node_models]
        Y = d.values
    measures = []
    for m, X in zip(model.node_models, designs):
        measures.append(node_measures(m, predict_node(m, X), Y[:, m.node]))
    kinds = [v.kind for v in model.spec]
    return PredictabilityReport([v.name for v in model.spec], kinds, measures, sample_kind, len(Y))


def _source_vars(m) -> list:
    return list(dict.fromkeys(p.var for p in m.predictors))

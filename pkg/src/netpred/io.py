"""Versioned JSON documents for fitted models and predictability reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from netpred import __version__
from netpred.cv import CvConfig
from netpred.data import VariableSpec, spec_hash
from netpred.mgm import NodeModel, PairwiseMGM
from netpred.mvar import VARModel
from netpred.solver import GAUSSIAN, CoefficientSet

SCHEMA = "netpred.model"
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _num(x):
    """JSON-safe float (NaN -> None); nested lists are converted recursively."""
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _vec(x) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in x], dtype=float)


def _node_to_dict(m: NodeModel) -> dict:
    c = m.coefficients
    return {
        "node": m.node,
        "family": m.family,
        "K": m.K,
        "lambda": m.lam,
        "predictors": [[p.var, p.category, p.lag] for p in m.predictors],
        "intercepts": _num(c.intercepts),
        "betas": _num(c.betas),
        "residual_sigma": _num(c.residual_sigma),
        "marginals": _num(m.marginals),
    }


def _node_from_dict(d: dict) -> NodeModel:
    betas = np.array(d["betas"], dtype=float)
    if d["family"] != GAUSSIAN:
        betas = betas.reshape(-1, d["K"])
    coef = CoefficientSet(np.array(d["intercepts"], dtype=float), betas, d["residual_sigma"])
    marg = None if d["marginals"] is None else np.array(d["marginals"], dtype=float)
    return NodeModel(d["node"], d["family"], d["K"], [tuple(p) for p in d["predictors"]], coef,
                     d["lambda"], marg)


def provenance(spec, seed, config=None) -> dict:
    return {
        "tool": "netpred",
        "version": __version__,
        "spec_hash": spec_hash(spec),
        "seed": seed,
        "config": config or {},
    }


def model_to_dict(model, config=None) -> dict:
    out = {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "model_kind": model.model_kind,
        "provenance": provenance(model.spec, model.seed, config),
        "spec": [v.to_dict() for v in model.spec],
        "seed": model.seed,
        "cv": None if model.cv is None else {
            "folds": model.cv.folds, "n_lambda": model.cv.n_lambda,
            "lambda_min_ratio": model.cv.lambda_min_ratio, "seed": model.cv.seed,
        },
        "binary_sign": model.binary_sign,
        "means": None if model.means is None else _num(model.means),
        "data_hash": model.data_hash,
        "nodes": [_node_to_dict(m) for m in model.node_models],
        "extra": model.extra,
    }
    if model.model_kind == "mgm":
        out["rule"] = model.rule
        out["wadj"] = _num(model.wadj)
        out["signs"] = model.signs.astype(int).tolist()
    else:
        out["lags"] = list(model.lags)
        # lag-major: coefficients[l][i][j]
        out["coefficients"] = _num(np.moveaxis(model.coefficients, 2, 0))
        out["signs"] = np.moveaxis(model.signs, 2, 0).astype(int).tolist()
        out["intercepts"] = _num(model.intercepts)
        out["residual_sigmas"] = _num(model.residual_sigmas)
    return out


def model_from_dict(d: dict):
    if d.get("schema") != SCHEMA:
        raise SchemaError("not a netpred model document")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema version {d.get('schema_version')}")
    spec = tuple(VariableSpec.from_dict(v) for v in d["spec"])
    cv = None if d["cv"] is None else CvConfig(**d["cv"])
    means = None if d["means"] is None else _vec(d["means"])
    nodes = [_node_from_dict(x) for x in d["nodes"]]
    if d["model_kind"] == "mgm":
        return PairwiseMGM(spec, nodes, np.array(d["wadj"], dtype=float), np.array(d["signs"], dtype=int),
                           d["rule"], means, d["binary_sign"], d["seed"], cv, d["data_hash"], d.get("extra", {}))
    if d["model_kind"] == "var":
        coefs = np.moveaxis(np.array(d["coefficients"], dtype=float), 0, 2)
        signs = np.moveaxis(np.array(d["signs"], dtype=int), 0, 2)
        return VARModel(spec, tuple(d["lags"]), nodes, coefs, signs, _vec(d["intercepts"]),
                        _vec(d["residual_sigmas"]), means, d["binary_sign"], d["seed"], cv,
                        d["data_hash"], d.get("extra", {}))
    raise SchemaError(f"unknown model kind {d['model_kind']!r}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def save_model(model, path, config=None) -> None:
    Path(path).write_text(dumps(model_to_dict(model, config)), encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)

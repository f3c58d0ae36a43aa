"""Nodewise predictability for sparse mixed graphical and VAR network models."""

__version__ = "0.1.0"

from netpred.cv import CvConfig, lambda_path, select_lambda
from netpred.data import (
    Dataset,
    TimeIndex,
    VariableSpec,
    center_continuous,
    encode_categorical,
    load_csv,
    load_spec,
    marginal_distribution,
)
from netpred.mgm import NodeModel, PairwiseMGM, combine_neighborhoods, edge_weights, fit_mgm
from netpred.mvar import LaggedDesign, VARModel, build_lagged_design, fit_mvar
from netpred.predictability import (
    PredictabilityReport,
    accuracy,
    evaluate,
    marginal_accuracy,
    normalized_accuracy,
    predict_categorical,
    predict_gaussian,
    r_squared,
)
from netpred.solver import (
    CoefficientSet,
    LassoProblem,
    fit_gaussian_lasso,
    fit_multinomial_lasso,
    kkt_violation,
)

__all__ = [
    "__version__",
    "CvConfig",
    "lambda_path",
    "select_lambda",
    "Dataset",
    "TimeIndex",
    "VariableSpec",
    "center_continuous",
    "encode_categorical",
    "load_csv",
    "load_spec",
    "marginal_distribution",
    "NodeModel",
    "PairwiseMGM",
    "combine_neighborhoods",
    "edge_weights",
    "fit_mgm",
    "LaggedDesign",
    "VARModel",
    "build_lagged_design",
    "fit_mvar",
    "PredictabilityReport",
    "accuracy",
    "evaluate",
    "marginal_accuracy",
    "normalized_accuracy",
    "predict_categorical",
    "predict_gaussian",
    "r_squared",
    "CoefficientSet",
    "LassoProblem",
    "fit_gaussian_lasso",
    "fit_multinomial_lasso",
    "kkt_violation",
]

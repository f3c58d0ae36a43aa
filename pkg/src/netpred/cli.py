"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure. Failures
print a single JSON line to stderr and remove any outputs already written.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from netpred import __version__
from netpred.cv import CvConfig, CvError
from netpred.data import (
    DataError,
    center_continuous,
    continuous_scales,
    csv_text,
    load_csv,
    load_spec,
    load_time_index,
    spec_hash,
    spec_text,
    zscore_continuous,
)
from netpred.io import SchemaError, dumps, load_model, model_to_dict, provenance
from netpred.mgm import fit_mgm
from netpred.mvar import fit_mvar
from netpred.predictability import PredictabilityReport, evaluate
from netpred.sampler import (
    ModelError,
    chain_precision,
    random_stable_var,
    sample_ggm,
    sample_ising_gibbs,
    simulate_var,
)
from netpred.solver import ConvergenceError
from netpred.viz import export_dot, graph_from_model, render_svg

log = logging.getLogger("netpred")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Outputs:
    """Collects artifacts in memory and writes them only once a command succeeds."""

    def __init__(self):
        self.pending = []

    def add(self, path, text: str):
        if path is not None:
            self.pending.append((Path(path), text))

    def commit(self):
        written = []
        try:
            for path, text in self.pending:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_text(text, encoding="utf-8")
                tmp.replace(path)
                written.append(path)
        except BaseException:
            for path in written:
                path.unlink(missing_ok=True)
            raise


def _lags(text: str):
    try:
        lags = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("lags must be comma-separated positive integers") from None
    if not lags or min(lags) < 1:
        raise argparse.ArgumentTypeError("lags must be comma-separated positive integers")
    return lags


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="netpred", description="Sparse network models with nodewise predictability.")
    ap.add_argument("--version", action="version", version=f"netpred {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="CSV with a header row")
            p.add_argument("--spec", required=True, help="sidecar spec: name,kind,levels per line")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")

    def fitting(p):
        common(p)
        p.add_argument("--out", required=True, help="model JSON")
        p.add_argument("--folds", type=int, default=10)
        p.add_argument("--n-lambda", type=int, default=50)
        p.add_argument("--lambda-min-ratio", type=float, default=1e-3)
        p.add_argument("--zscore", action="store_true", help="scale continuous columns to unit variance")
        p.add_argument("--binary-sign", action="store_true", help="assign signs to edges with binary nodes")
        p.add_argument("--self-evaluate", action="store_true", help="store within-sample predictability")

    p = sub.add_parser("fit-mgm", help="fit a pairwise mixed graphical model")
    fitting(p)
    p.add_argument("--rule", choices=["or", "and", "OR", "AND"], default="or")

    p = sub.add_parser("fit-var", help="fit a mixed VAR model")
    fitting(p)
    p.add_argument("--lags", type=_lags, default=(1,))
    p.add_argument("--time-index", help="CSV with day,beep columns")

    p = sub.add_parser("predict", help="nodewise predictability of a fitted model")
    common(p, data=False)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--spec", help="optional; must match the model's spec")
    p.add_argument("--time-index", help="CSV with day,beep columns (VAR models)")
    p.add_argument("--out", required=True, help="report JSON")
    p.add_argument("--table", help="plain-text report table")

    p = sub.add_parser("simulate", help="sample data from a known model")
    common(p, data=False)
    p.add_argument("--kind", choices=["ggm", "ising", "var"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=5, help="number of variables for the default chain model")
    p.add_argument("--strength", type=float, default=0.3,
                   help="chain partial correlation (ggm), coupling (ising) or spectral radius (var)")
    p.add_argument("--params", help="JSON with precision | weights+thresholds | coefficients+noise_sds")
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--spec-out", help="spec sidecar (default: <out>.spec)")

    p = sub.add_parser("viz", help="render a model with predictability rings")
    common(p, data=False)
    p.add_argument("--model", required=True)
    p.add_argument("--report", help="report JSON from `predict`")
    p.add_argument("--out", help="SVG output")
    p.add_argument("--dot", help="DOT output")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--size", type=int, default=600)
    p.add_argument("--lag-index", type=int, default=0)
    return ap


def _config_echo(args) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())
            if k not in ("verbose",)}


def _prepare_training(args):
    spec = load_spec(args.spec)
    d = load_csv(args.data, spec)
    scales = None
    if args.zscore:
        scales = continuous_scales(d)
        d = zscore_continuous(d, scales)
    return center_continuous(d), scales


def _cv_config(args) -> CvConfig:
    return CvConfig(args.folds, args.n_lambda, args.lambda_min_ratio, args.seed)


def _finish_fit(model, d, scales, args, out: Outputs, time=None):
    if scales is not None:
        model.extra["scales"] = [None if np.isnan(s) else float(s) for s in scales]
    if args.self_evaluate:
        model.extra["self_evaluation"] = evaluate(model, d, time).to_dict()
    out.add(args.out, dumps(model_to_dict(model, _config_echo(args))))


def cmd_fit_mgm(args, out: Outputs):
    d, scales = _prepare_training(args)
    model = fit_mgm(d, args.rule.upper(), _cv_config(args), args.seed,
                    binary_sign=args.binary_sign, threads=args.threads)
    _finish_fit(model, d, scales, args, out)


def cmd_fit_var(args, out: Outputs):
    d, scales = _prepare_training(args)
    time = load_time_index(args.time_index) if args.time_index else None
    model = fit_mvar(d, args.lags, time, _cv_config(args), args.seed,
                     binary_sign=args.binary_sign, threads=args.threads)
    _finish_fit(model, d, scales, args, out, time)


def cmd_predict(args, out: Outputs):
    model = load_model(args.model)
    if args.spec is not None and spec_hash(load_spec(args.spec)) != spec_hash(model.spec):
        raise DataError("spec mismatch")
    d = load_csv(args.data, model.spec)
    scales = model.extra.get("scales")
    if scales is not None:
        d = zscore_continuous(d, np.array([np.nan if s is None else s for s in scales]))
    time = load_time_index(args.time_index) if args.time_index else None
    report = evaluate(model, d, time)
    report.extra["provenance"] = provenance(model.spec, args.seed, _config_echo(args))
    report.extra["model_kind"] = model.model_kind
    out.add(args.out, dumps(report.to_dict()))
    out.add(args.table, report.to_table())


def _load_params(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"params file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def cmd_simulate(args, out: Outputs):
    params = _load_params(args.params) if args.params else {}
    if args.kind == "ggm":
        precision = params.get("precision", chain_precision(args.p, args.strength))
        d = sample_ggm(precision, args.n, args.seed)
    elif args.kind == "ising":
        p = args.p
        default_w = np.zeros((p, p))
        i = np.arange(p - 1)
        default_w[i, i + 1] = default_w[i + 1, i] = args.strength
        weights = np.array(params.get("weights", default_w), dtype=float)
        thresholds = params.get("thresholds", -weights.sum(axis=1) / 2)
        d = sample_ising_gibbs(weights, thresholds, args.n, seed=args.seed)
    else:
        B = params.get("coefficients")
        if B is None:
            B = random_stable_var(args.p, args.strength, seed=args.seed)
        B = np.array(B, dtype=float)
        d = simulate_var(B, params.get("noise_sds", 1.0), args.n, args.seed)
    header = [f"netpred {__version__} simulate", f"spec_hash={spec_hash(d.spec)} seed={args.seed}",
              "config=" + json.dumps(_config_echo(args), sort_keys=True)]
    out.add(args.out, csv_text(d, header))
    out.add(args.spec_out or f"{args.out}.spec", spec_text(d.spec, header))


def cmd_viz(args, out: Outputs):
    if args.out is None and args.dot is None:
        raise UsageError("viz needs --out and/or --dot")
    model = load_model(args.model)
    report = None
    if args.report:
        try:
            report = PredictabilityReport.from_dict(json.loads(Path(args.report).read_text(encoding="utf-8")))
        except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot read report {args.report}: {exc}") from None
        if report.names != [v.name for v in model.spec]:
            raise DataError("spec mismatch between model and report")
    graph = graph_from_model(model, report, lag_index=args.lag_index, iterations=args.iterations,
                             seed=args.seed)
    prov = provenance(model.spec, args.seed, _config_echo(args))
    out.add(args.out, render_svg(graph, {"size": args.size, "metadata": prov}))
    out.add(args.dot, export_dot(graph, [json.dumps(prov, sort_keys=True)]))


COMMANDS = {
    "fit-mgm": cmd_fit_mgm,
    "fit-var": cmd_fit_var,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "viz": cmd_viz,
}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": message, "kind": kind, "exit": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.threads < 1:
        return _fail(EXIT_USAGE, "usage", "--threads must be at least 1")
    out = Outputs()
    try:
        COMMANDS[args.command](args, out)
        out.commit()
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except (DataError, CvError, ModelError, SchemaError, FileNotFoundError) as exc:
        return _fail(EXIT_DATA, "data", str(exc))
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", str(exc))
    except ValueError as exc:
        return _fail(EXIT_DATA, "data", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

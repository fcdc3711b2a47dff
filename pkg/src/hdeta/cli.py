"""Command-line entry point: ``hdeta {simulate,estimate,precision,ci,bench}``.

Exit codes: 0 success, 1 usage error, 2 data or estimation error.
Results go to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import io as hio
from .adaptive import AdaptiveConfig, calibrate_c0, calibrate_c0_clime, eta_adaptive, eta_adaptive_clime
from .bench import BenchConfig, run_bench, write_outputs
from .clime import clime_from_data, split_and_fit, split_sample
from .confidence import DENSE_IC, SPARSE_IC, calibrate_c_alpha, ci_for_data
from .core_model import HdetaError, ParameterError, true_eta
from .dense import eta_dense, eta_dense_plugin
from .known_sigma import eta_dense_known_sigma, eta_gauss_lasso
from .simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset
from .sqrt_lasso import eta_sqrt_lasso, fit_sqrt_lasso

METHODS = ["dense", "dense-plugin", "sl", "adaptive", "adaptive-clime", "dense-ks", "gl-ks"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _lambda0(text: str):
    try:
        return float(text)
    except ValueError:
        if text in ("conservative", "universal"):
            return text
        raise argparse.ArgumentTypeError(f"expected a number, 'conservative' or 'universal', got {text!r}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="base random seed (default 0, with a warning)")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for bench and CLIME (default 1)")
    common.add_argument("--format", choices=["json", "csv"], default="json",
                        help="output format (default json)")

    parser = _Parser(prog="hdeta", description="Estimate the proportion of explained variance "
                     "in high-dimensional linear regression.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="draw a synthetic dataset")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--p", type=_positive_int, required=True)
    s.add_argument("--k", default="1", help="number of nonzeros of beta, or 'dense'")
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--cov", default="identity", help="identity | ar1:RHO | banded:B:V")
    s.add_argument("--sigma", type=float, default=1.0, help="noise level (default 1)")
    s.add_argument("--out", required=True, help="output file; .csv for CSV, otherwise binary")
    s.add_argument("--truth", help="optional JSON file for the generating parameters")

    e = sub.add_parser("estimate", parents=[common], help="estimate eta from a dataset")
    e.add_argument("--method", choices=METHODS, required=True)
    e.add_argument("--in", dest="input", required=True, help="dataset (CSV or binary)")
    e.add_argument("--omega", default="identity",
                   help="precision matrix for dense/adaptive: identity | file:PATH")
    e.add_argument("--lambda0", type=_lambda0, default=None,
                   help="square-root Lasso level: number, 'conservative' (default) or 'universal'")
    e.add_argument("--tol", type=float, default=1e-8)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--c0", type=float, help="adaptive threshold constant")
    g.add_argument("--calibrate", type=_positive_int, metavar="R",
                   help="calibrate c0 with R Monte Carlo replicates")
    e.add_argument("--sigma", type=float, help="known noise level (dense-ks, gl-ks)")
    e.add_argument("--out", help="write the result here instead of stdout")

    pr = sub.add_parser("precision", parents=[common], help="CLIME precision matrix")
    pr.add_argument("--in", dest="input", required=True)
    pr.add_argument("--out", required=True, help="binary container for the estimate; "
                    "metadata goes to OUT.json")
    pr.add_argument("--lambda", dest="lam", default="auto", help="auto | V")
    pr.add_argument("--split", choices=["none", "EvenOdd", "FirstHalf"], default="none",
                    help="fit on the second half-sample only (default: all rows)")

    c = sub.add_parser("ci", parents=[common], help="confidence interval for eta")
    c.add_argument("--method", choices=["dense", "sl"], required=True)
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--k", type=_positive_int, help="assumed sparsity (sl)")
    c.add_argument("--sigma-cond", type=float, default=1.0,
                   help="condition number bound of the covariance (sl)")
    c.add_argument("--lambda0", type=_lambda0, default="universal")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--c-alpha", type=float, help="interval constant")
    g.add_argument("--calibrate", type=_positive_int, metavar="R", default=None,
                   help="calibrate the constant with R replicates per reference (default 500)")
    c.add_argument("--out")

    b = sub.add_parser("bench", parents=[common], help="Monte Carlo risk study")
    b.add_argument("--config", required=True, help="JSON config (see bench module docs)")
    b.add_argument("--out", required=True, help="output directory")
    return parser


def _seed(args) -> int:
    if args.seed is None:
        print("warning: no --seed given, using seed 0", file=sys.stderr)
        return 0
    return args.seed


def _emit(payload: dict, args, out: Optional[str] = None):
    if args.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(payload)
        w.writerow(keys)
        w.writerow([json.dumps(v) if isinstance(v, (dict, list)) else v for v in payload.values()])
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_omega(spec: str):
    if spec == "identity":
        return None
    if spec.startswith("file:"):
        return hio.read_matrix(spec[5:])
    raise UsageError(f"--omega must be 'identity' or 'file:PATH', got {spec!r}")


def cmd_simulate(args):
    seed = _seed(args)
    if args.k != "dense" and not args.k.isdigit():
        raise UsageError(f"--k must be a non-negative integer or 'dense', got {args.k!r}")
    try:
        cov = CovarianceSpec.parse(args.cov, args.p)
        if args.k == "dense":
            spec = BetaSpec("dense", args.eta, seed=seed)
        else:
            spec = BetaSpec("sparse", args.eta, k=int(args.k), seed=seed)
        gt = calibrate_beta(spec, cov, args.sigma)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    data = sample_dataset(gt, args.n, seed)
    hio.write_dataset(args.out, data)
    if args.truth:
        hio.write_ground_truth(args.truth, gt)
    _emit({"out": args.out, "n": args.n, "p": args.p, "k": gt.sparsity, "eta": true_eta(gt),
           "cov": cov.label(), "seed": seed}, args)


def cmd_estimate(args):
    m = args.method
    if m in ("dense-ks", "gl-ks") and args.sigma is None:
        raise UsageError(f"--method {m} requires --sigma")
    if m not in ("adaptive", "adaptive-clime") and (args.c0 is not None or args.calibrate):
        raise UsageError("--c0 and --calibrate only apply to adaptive methods")
    if m in ("adaptive", "adaptive-clime") and args.c0 is None and not args.calibrate:
        raise UsageError(f"--method {m} requires --c0 or --calibrate")
    data = hio.read_dataset(args.input)
    extra = {}
    if m == "dense":
        est = eta_dense(data, _load_omega(args.omega))
    elif m == "dense-plugin":
        first, omega_hat = split_and_fit(data, threads=args.threads)
        est = eta_dense_plugin(first, omega_hat)
    elif m == "sl":
        fit = fit_sqrt_lasso(data, args.lambda0, args.tol)
        est = eta_sqrt_lasso(fit, data)
        extra["fit"] = fit.summary()
    elif m == "adaptive":
        omega = _load_omega(args.omega)
        cfg = (AdaptiveConfig(args.c0) if args.c0 is not None
               else calibrate_c0(data.n, data.p, omega, args.calibrate, _seed(args)))
        fit = fit_sqrt_lasso(data, args.lambda0, args.tol)
        est, dec = eta_adaptive(data, omega, cfg, fit=fit)
        extra["decision"] = vars(dec)
        extra["c0_source"] = cfg.c0_source
    elif m == "adaptive-clime":
        first, _, _, rows2 = split_sample(data)
        omega_hat = clime_from_data(data.subset(rows2), sample_rows=rows2, threads=args.threads)
        if args.c0 is not None:
            cfg = AdaptiveConfig(args.c0)
        else:
            cov = CovarianceSpec("explicit", data.p, matrix=_sym(np.linalg.inv(omega_hat.omega_hat)))
            cfg = calibrate_c0_clime(data.n, data.p, cov, args.calibrate, _seed(args))
        est, dec = eta_adaptive_clime(first, omega_hat, cfg,
                                      fit=fit_sqrt_lasso(first, args.lambda0, args.tol))
        extra["decision"] = vars(dec)
        extra["c0_source"] = cfg.c0_source
    elif m == "dense-ks":
        est = eta_dense_known_sigma(data, args.sigma)
    else:
        est = eta_gauss_lasso(data, args.sigma, fit_sqrt_lasso(data, args.lambda0, args.tol))
    payload = est.to_dict()
    payload["eta"] = payload["value"]
    payload.update(extra)
    _emit(_plain(payload), args, args.out)


def _sym(m):
    return (m + m.T) / 2


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def cmd_precision(args):
    data = hio.read_dataset(args.input)
    rows = None
    if args.split != "none":
        _, data, _, rows = split_sample(data, args.split)
    if args.lam == "auto":
        lam = None
    else:
        try:
            lam = float(args.lam)
        except ValueError:
            raise UsageError(f"--lambda must be 'auto' or a number, got {args.lam!r}") from None
    est = clime_from_data(data, lambda_n=lam, threads=args.threads, sample_rows=rows)
    hio.write_matrix(args.out, est.omega_hat)
    meta = est.metadata()
    Path(args.out + ".json").write_text(json.dumps(meta, indent=2))
    meta.pop("sample_rows")
    _emit({"out": args.out, **meta}, args)


def cmd_ci(args):
    if not 0 < args.alpha < 1:
        raise UsageError(f"--alpha must be in (0, 1), got {args.alpha}")
    method = DENSE_IC if args.method == "dense" else SPARSE_IC
    if method == SPARSE_IC and args.k is None:
        raise UsageError("--method sl requires --k")
    data = hio.read_dataset(args.input)
    if args.c_alpha is not None:
        c_alpha, source = args.c_alpha, "Manual"
    else:
        c_alpha = calibrate_c_alpha(method, args.alpha, data.n, data.p, args.k,
                                    replicates=args.calibrate or 500, seed=_seed(args),
                                    lambda0=args.lambda0)
        source = "Calibrated"
    ci = ci_for_data(data, method, args.alpha, c_alpha, args.k, args.sigma_cond, args.lambda0, source)
    _emit({**ci.to_dict(), "c_alpha": c_alpha}, args, args.out)


def cmd_bench(args):
    cfg = BenchConfig.load(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    result = run_bench(cfg, threads=args.threads)
    csv_path, json_path = write_outputs(result, args.out)
    invalid = [r for r in result.rows if not r["valid"]]
    for r in invalid:
        print(f"warning: cell {r['cell']} estimator {r['estimator']} invalid "
              f"({r['failures']} failures)", file=sys.stderr)
    _emit({"results": str(csv_path), "summary": str(json_path), "cells": len(cfg.cells),
           "invalid": len(invalid)}, args)


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "precision": cmd_precision,
            "ci": cmd_ci, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.print_usage(sys.stderr)
        print(f"hdeta {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (HdetaError, OSError, json.JSONDecodeError) as exc:
        print(f"hdeta {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

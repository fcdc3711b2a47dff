"""Monte Carlo harness: empirical risk per estimator over a grid of designs.

Within a cell every estimator sees the same simulated replicates, and
replicate ``r`` is always drawn with seed ``base_seed + r``.  Replicates run on
a thread pool but results are collected in replicate order, so output files
do not depend on the number of workers.

Config file (JSON)::

    {
      "base_seed": 0,
      "cells": [
        {"n": 100, "p": 200, "beta": "dense", "eta": 0.5, "cov": "identity",
         "estimators": ["dense", "sl"], "replicates": 200, "group": "dense-rate",
         "k": 1, "lambda0": "universal", "c0": null,
         "calibration": {"replicates": 200, "quantile": 0.99}}
      ]
    }

``beta`` is ``dense`` or ``sparse`` (with ``k`` nonzeros); ``cov`` uses the
``identity | ar1:RHO | banded:B:V`` syntax.  Only ``n``, ``p``, ``eta`` and
``estimators`` are required.  Known estimators are listed in ``ESTIMATORS``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from .adaptive import AdaptiveConfig, calibrate_c0, calibrate_c0_clime, eta_adaptive, eta_adaptive_clime
from .clime import clime_from_data, default_lambda_n, empirical_covariance, fit_clime, split_sample
from .core_model import Dataset, GroundTruth, HdetaError, ParameterError, true_eta
from .dense import eta_dense, eta_dense_plugin
from .known_sigma import eta_dense_known_sigma, eta_gauss_lasso
from .simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset, sym_sqrt
from .sqrt_lasso import eta_sqrt_lasso, fit_sqrt_lasso

MAX_FAILURE_FRACTION = 0.02
CALIBRATION_SEED_OFFSET = 50_000_000


@dataclass
class Cell:
    n: int
    p: int
    eta: float
    estimators: list
    replicates: int = 200
    beta: str = "sparse"
    k: int = 1
    cov: str = "identity"
    sigma: float = 1.0
    group: str = ""
    lambda0: Union[str, float] = "universal"
    c0: Optional[float] = None
    calibration: dict = field(default_factory=lambda: {"replicates": 200, "quantile": 0.99})

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ParameterError(f"cell needs n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if self.replicates < 2:
            raise ParameterError(f"cell needs at least 2 replicates, got {self.replicates}")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ParameterError(f"unknown estimators {unknown}; known: {sorted(ESTIMATORS)}")
        if self.beta not in ("sparse", "dense"):
            raise ParameterError(f"beta must be 'sparse' or 'dense', got {self.beta!r}")

    @property
    def sparsity(self) -> int:
        return self.p if self.beta == "dense" else self.k


@dataclass
class BenchConfig:
    cells: list
    base_seed: int = 0
    output_path: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        if "cells" not in d or not isinstance(d["cells"], list) or not d["cells"]:
            raise ParameterError("bench config needs a non-empty 'cells' list")
        cells = []
        for i, c in enumerate(d["cells"]):
            try:
                cells.append(Cell(**c))
            except TypeError as exc:
                raise ParameterError(f"cell {i}: {exc}") from None
        return cls(cells, int(d.get("base_seed", 0)), d.get("output_path"))

    @classmethod
    def load(cls, path) -> "BenchConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class CellContext:
    cell: Cell
    truth: GroundTruth
    eta: float
    omega: Optional[np.ndarray]
    sigma_sqrt: Optional[np.ndarray]
    cov: CovarianceSpec
    adaptive_cfg: Optional[AdaptiveConfig] = None
    adaptive_clime_cfg: Optional[AdaptiveConfig] = None


class _Replicate:
    """Per-replicate cache so estimators share fits."""

    def __init__(self, data: Dataset, ctx: CellContext):
        self.data = data
        self.ctx = ctx
        self._fit = None
        self._split = None

    def sl_fit(self):
        if self._fit is None:
            self._fit = fit_sqrt_lasso(self.data, self.ctx.cell.lambda0)
        return self._fit

    def clime_split(self):
        if self._split is None:
            first, second, _, rows2 = split_sample(self.data)
            est = clime_from_data(second, sample_rows=rows2)
            self._split = (first, est, fit_sqrt_lasso(first, self.ctx.cell.lambda0))
        return self._split


def _oracle(rep):
    return rep.ctx.eta, {}


def _dense(rep):
    return eta_dense(rep.data, rep.ctx.omega).value, {}


def _dense_trunc(rep):
    return eta_dense(rep.data, rep.ctx.omega).truncated, {}


def _dense_plugin(rep):
    first, est, _ = rep.clime_split()
    return eta_dense_plugin(first, est).value, {}


def _sl(rep):
    return eta_sqrt_lasso(rep.sl_fit(), rep.data).value, {}


def _adaptive(rep):
    est, dec = eta_adaptive(rep.data, rep.ctx.omega, rep.ctx.adaptive_cfg, fit=rep.sl_fit())
    return est.value, {"sparse": dec.chosen == "Sparse"}


def _adaptive_clime(rep):
    first, omega_hat, fit = rep.clime_split()
    est, dec = eta_adaptive_clime(first, omega_hat, rep.ctx.adaptive_clime_cfg, fit=fit)
    return est.value, {"sparse": dec.chosen == "Sparse"}


def _dense_ks(rep):
    return eta_dense_known_sigma(rep.data, rep.ctx.truth.sigma).value, {}


def _gl_ks(rep):
    return eta_gauss_lasso(rep.data, rep.ctx.truth.sigma, rep.sl_fit()).value, {}


ESTIMATORS: dict[str, Callable] = {
    "oracle": _oracle,
    "dense": _dense,
    "dense_trunc": _dense_trunc,
    "dense_plugin": _dense_plugin,
    "sl": _sl,
    "adaptive": _adaptive,
    "adaptive_clime": _adaptive_clime,
    "dense_ks": _dense_ks,
    "gl_ks": _gl_ks,
}


def _prepare(cell: Cell, base_seed: int, index: int) -> CellContext:
    cov = CovarianceSpec.parse(cell.cov, cell.p)
    kind = "dense" if cell.beta == "dense" else "sparse"
    gt = calibrate_beta(BetaSpec(kind, cell.eta, k=cell.k, seed=base_seed), cov, cell.sigma)
    omega = None if cov.kind == "identity" else cov.precision()
    sqrt_cov = None if cov.kind == "identity" else sym_sqrt(cov.covariance())
    ctx = CellContext(cell, gt, true_eta(gt), omega, sqrt_cov, cov)
    cal_seed = base_seed + CALIBRATION_SEED_OFFSET + 1000 * index
    cal = dict(cell.calibration or {})
    if "adaptive" in cell.estimators:
        if cell.c0 is not None:
            ctx.adaptive_cfg = AdaptiveConfig(float(cell.c0), "Manual")
        else:
            ctx.adaptive_cfg = calibrate_c0(cell.n, cell.p, omega, cal.get("replicates", 200),
                                            cal_seed, cal.get("quantile", 0.99))
    if "adaptive_clime" in cell.estimators:
        if cell.c0 is not None:
            ctx.adaptive_clime_cfg = AdaptiveConfig(float(cell.c0), "Manual")
        else:
            ctx.adaptive_clime_cfg = calibrate_c0_clime(cell.n, cell.p, cov, cal.get("replicates", 200),
                                                        cal_seed, cal.get("quantile", 0.99))
    return ctx


def _run_replicate(ctx: CellContext, base_seed: int, r: int):
    data = sample_dataset(ctx.truth, ctx.cell.n, base_seed + r, sigma_sqrt=ctx.sigma_sqrt)
    rep = _Replicate(data, ctx)
    out = {}
    for name in ctx.cell.estimators:
        t0 = time.perf_counter()
        try:
            value, info = ESTIMATORS[name](rep)
            err = None
        except HdetaError as exc:
            value, info, err = math.nan, {}, str(exc)
        out[name] = (value, info, time.perf_counter() - t0, err)
    return out


def fit_rate_slope(points) -> dict:
    """OLS of ``log(rmse)`` on ``log(n)``.

    Returns ``slope``, ``intercept``, ``stderr`` (of the slope) and ``r2``.
    """
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < 3:
        raise ParameterError(f"slope fit needs at least 3 points, got {len(pts)}")
    if any(a <= 0 for a, _ in pts) or any(not b > 0 for _, b in pts):
        raise ParameterError("slope fit needs positive n and rmse values")
    x = np.log([a for a, _ in pts])
    y = np.log([b for _, b in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise ParameterError("slope fit needs at least two distinct n values")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ssr = float((resid ** 2).sum())
    sst = float(((y - ym) ** 2).sum())
    stderr = math.sqrt(ssr / (len(pts) - 2) / sxx)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return {"slope": slope, "intercept": intercept, "stderr": stderr, "r2": r2}


@dataclass
class BenchResult:
    rows: list
    slopes: list
    runtimes: dict
    calibration: dict

    def to_csv(self) -> str:
        return rows_to_csv(self.rows, RESULT_COLUMNS)

    def summary(self) -> dict:
        return {"cells": self.rows, "slopes": self.slopes, "mean_runtime": self.runtimes,
                "calibration": self.calibration}

    def row(self, cell: int, estimator: str) -> dict:
        for r in self.rows:
            if r["cell"] == cell and r["estimator"] == estimator:
                return r
        raise KeyError((cell, estimator))


RESULT_COLUMNS = ["cell", "group", "n", "p", "k", "eta", "cov", "estimator", "replicates",
                  "failures", "valid", "mean_sq_error", "rmse", "bias", "mc_stderr",
                  "sparse_fraction"]


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def run_bench(cfg: BenchConfig, threads: int = 1, keep_errors: bool = False) -> BenchResult:
    """Run every cell of ``cfg``; failures are counted, never fatal."""
    rows, runtimes, calibration = [], {}, {}
    errors_by_cell = {}
    for ci, cell in enumerate(cfg.cells):
        ctx = _prepare(cell, cfg.base_seed, ci)
        for name, acfg in (("adaptive", ctx.adaptive_cfg), ("adaptive_clime", ctx.adaptive_clime_cfg)):
            if acfg is not None:
                calibration[f"{ci}:{name}"] = {"c0": acfg.c0, "source": acfg.c0_source,
                                               **(acfg.calibration or {})}

        def job(r, ctx=ctx):
            return _run_replicate(ctx, cfg.base_seed, r)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                reps = list(pool.map(job, range(cell.replicates)))
        else:
            reps = [job(r) for r in range(cell.replicates)]

        for name in cell.estimators:
            vals = np.array([rep[name][0] for rep in reps])
            ok = ~np.isnan(vals)
            fails = int((~ok).sum())
            err = vals[ok] - ctx.eta
            m = int(ok.sum())
            sq = err ** 2
            mse = float(np.mean(sq)) if m else math.nan
            sparse_flags = [rep[name][1]["sparse"] for rep in reps if "sparse" in rep[name][1]]
            rows.append({
                "cell": ci, "group": cell.group, "n": cell.n, "p": cell.p, "k": cell.sparsity,
                "eta": ctx.eta, "cov": ctx.cov.label(), "estimator": name,
                "replicates": cell.replicates, "failures": fails,
                "valid": fails <= MAX_FAILURE_FRACTION * cell.replicates,
                "mean_sq_error": mse, "rmse": math.sqrt(mse) if m else math.nan,
                "bias": float(np.mean(err)) if m else math.nan,
                "mc_stderr": float(np.std(sq, ddof=1) / math.sqrt(m)) if m > 1 else math.nan,
                "sparse_fraction": float(np.mean(sparse_flags)) if sparse_flags else math.nan,
            })
            runtimes[f"{ci}:{name}"] = float(np.mean([rep[name][2] for rep in reps]))
            if keep_errors:
                errors_by_cell[(ci, name)] = [rep[name][3] for rep in reps if rep[name][3]]
    result = BenchResult(rows, _slopes(rows), runtimes, calibration)
    if keep_errors:
        result.errors = errors_by_cell
    return result


def _slopes(rows) -> list:
    out = []
    groups = sorted({(r["group"], r["estimator"]) for r in rows if r["group"]})
    for group, est in groups:
        pts = [(r["n"], r["rmse"]) for r in rows if r["group"] == group and r["estimator"] == est]
        entry = {"group": group, "estimator": est, "points": pts}
        try:
            entry.update(fit_rate_slope(pts))
        except ParameterError as exc:
            entry["error"] = str(exc)
        out.append(entry)
    return out


def write_outputs(result: BenchResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "results.csv", out / "summary.json"
    csv_path.write_text(result.to_csv())
    json_path.write_text(json.dumps(_clean(result.summary()), indent=2))
    return csv_path, json_path


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


CLIME_COLUMNS = ["n", "p", "replicate", "lambda_n", "feasibility_gap", "symmetric",
                 "op_error", "min_eigenvalue", "lp_iterations"]


def run_clime_study(cov: CovarianceSpec, n_grid, replicates: int, base_seed: int = 0,
                    threads: int = 1, lambda_rule: str = "pragmatic") -> list:
    """CLIME accuracy over a grid of sample sizes; one row per (n, replicate)."""
    p = cov.dim
    omega = cov.precision()
    gt = GroundTruth(np.zeros(p), 1.0, cov.covariance())
    root = sym_sqrt(gt.sigma_mat)
    rows = []
    for n in n_grid:
        lam = default_lambda_n(n, p, rule=lambda_rule)

        def job(r, n=n, lam=lam):
            data = sample_dataset(gt, n, base_seed + r, sigma_sqrt=root)
            est = fit_clime(empirical_covariance(data), lam)
            return {"n": n, "p": p, "replicate": r, "lambda_n": lam,
                    "feasibility_gap": est.feasibility_gap, "symmetric": est.symmetric,
                    "op_error": float(np.linalg.norm(est.omega_hat - omega, 2)),
                    "min_eigenvalue": est.min_eigenvalue, "lp_iterations": est.lp_iterations}

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows.extend(pool.map(job, range(replicates)))
        else:
            rows.extend(job(r) for r in range(replicates))
    return rows

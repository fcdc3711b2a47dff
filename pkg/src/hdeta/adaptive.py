"""Sparsity-adaptive combination of the dense and square-root Lasso estimators.

The sparse estimate is kept when it lies within ``c0 sqrt(p log p) / n`` of
the truncated dense estimate, otherwise the dense estimate is returned.

The constant ``c0`` is twice a deviation constant of the dense estimator that
has no explicit value; :func:`calibrate_c0` estimates it by Monte Carlo.
With an estimated precision matrix the theoretical constant becomes
``c0(M, M1) = 4 C1 M1^2 + 2 C3 M^2 M1^3``, which is equally non-explicit, so the
same calibration is run with CLIME in the loop (:func:`calibrate_c0_clime`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .clime import PrecisionEstimate, clime_from_data, split_sample
from .core_model import Dataset, EtaEstimate, Method, ParameterError
from .dense import eta_dense_plugin, eta_dense_truncated
from .simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset, sym_sqrt
from .sqrt_lasso import SqrtLassoFit, eta_sqrt_lasso, fit_sqrt_lasso

SPARSE, DENSE = "Sparse", "Dense"


@dataclass
class AdaptiveConfig:
    c0: float
    c0_source: str = "Manual"
    calibration: Optional[dict] = None

    def __post_init__(self):
        if not self.c0 >= 0 or math.isnan(self.c0):
            raise ParameterError(f"c0 must be non-negative, got {self.c0}")
        if self.c0_source not in ("Manual", "Calibrated"):
            raise ParameterError(f"c0_source must be Manual or Calibrated, got {self.c0_source!r}")


@dataclass
class AdaptiveDecision:
    chosen: str
    gap: float
    threshold: float
    sparse_value: float = field(default=float("nan"))
    dense_value: float = field(default=float("nan"))


def adaptive_threshold(c0: float, n: int, p: int) -> float:
    """``c0 sqrt(p log p) / n`` with the natural logarithm."""
    return c0 * math.sqrt(p * math.log(p)) / n if p > 1 else 0.0


def _combine(dense: EtaEstimate, sparse: EtaEstimate, c0: float, n: int, p: int,
             method: Method) -> tuple[EtaEstimate, AdaptiveDecision]:
    gap = abs(dense.value - sparse.value)
    threshold = adaptive_threshold(c0, n, p)
    chosen = SPARSE if gap <= threshold else DENSE
    decision = AdaptiveDecision(chosen, gap, threshold, sparse.value, dense.value)
    value = sparse.value if chosen == SPARSE else dense.value
    diag = {"chosen": chosen, "gap": gap, "threshold": threshold, "c0": c0,
            "sparse_value": sparse.value, "dense_value": dense.value,
            "sqrt_lasso": {k: sparse.diagnostics.get(k) for k in
                           ("sigma_tilde", "outer_iters", "kkt_residual", "converged")}}
    return EtaEstimate(value, method, diag), decision


def eta_adaptive(data: Dataset, omega: Optional[np.ndarray], cfg: AdaptiveConfig,
                 lambda0: Union[float, str, None] = None,
                 fit: Optional[SqrtLassoFit] = None) -> tuple[EtaEstimate, AdaptiveDecision]:
    """Adaptive estimate with a known precision matrix (``None`` = identity).

    A precomputed square-root Lasso ``fit`` on the same data may be passed.
    """
    if fit is None:
        fit = fit_sqrt_lasso(data, lambda0)
    sparse = eta_sqrt_lasso(fit, data)
    dense = eta_dense_truncated(data, omega)
    return _combine(dense, sparse, cfg.c0, data.n, data.p, Method.Adaptive)


def eta_adaptive_clime(data: Dataset, omega_hat: PrecisionEstimate, cfg: AdaptiveConfig,
                       lambda0: Union[float, str, None] = None,
                       fit: Optional[SqrtLassoFit] = None) -> tuple[EtaEstimate, AdaptiveDecision]:
    """Adaptive estimate with a CLIME precision matrix.

    ``data`` is the half-sample used for eta; ``omega_hat`` must come from the
    other half.
    """
    if fit is None:
        fit = fit_sqrt_lasso(data, lambda0)
    sparse = eta_sqrt_lasso(fit, data)
    plug = eta_dense_plugin(data, omega_hat)
    dense = EtaEstimate(plug.truncated, Method.DensePlugIn, plug.diagnostics)
    return _combine(dense, sparse, cfg.c0, data.n, data.p, Method.AdaptiveClime)


def _reference_truths(p: int, cov: CovarianceSpec, etas, seed: int):
    return [calibrate_beta(BetaSpec("dense", eta, seed=seed + i), cov) for i, eta in enumerate(etas)]


def calibrate_c0(n: int, p: int, omega: Optional[np.ndarray] = None, replicates: int = 200,
                 seed: int = 0, quantile: float = 0.99,
                 reference_etas=(0.0, 0.5)) -> AdaptiveConfig:
    """Monte Carlo calibration of ``c0``.

    For each reference model (dense Gaussian ``beta`` at each eta in
    ``reference_etas``) the statistic ``|eta_D_T - eta| n / sqrt(p log p)`` is
    simulated ``replicates`` times; ``c0`` is twice the largest of the
    per-model ``quantile``-quantiles.
    """
    if replicates < 100:
        raise ParameterError(f"calibration needs at least 100 replicates, got {replicates}")
    if not 0 < quantile < 1:
        raise ParameterError(f"quantile must be in (0, 1), got {quantile}")
    if p < 2:
        raise ParameterError("calibration needs p >= 2")
    if omega is None:
        cov = CovarianceSpec("identity", p)
    else:
        sigma = np.linalg.inv(omega)
        cov = CovarianceSpec("explicit", p, matrix=(sigma + sigma.T) / 2)
    truths = _reference_truths(p, cov, reference_etas, seed)
    sqrt_cov = None if omega is None else sym_sqrt(cov.covariance())
    scale = n / math.sqrt(p * math.log(p))
    quantiles = []
    for m, gt in enumerate(truths):
        eta = reference_etas[m]
        stats = np.empty(replicates)
        for r in range(replicates):
            data = sample_dataset(gt, n, seed + 1_000_003 * (m + 1) + r, sigma_sqrt=sqrt_cov)
            stats[r] = abs(eta_dense_truncated(data, omega).value - eta) * scale
        quantiles.append(float(np.quantile(stats, quantile)))
    c0 = 2.0 * max(quantiles)
    return AdaptiveConfig(c0, "Calibrated", {
        "replicates": replicates, "seed": seed, "quantile": quantile, "n": n, "p": p,
        "reference_etas": list(reference_etas), "per_reference_quantiles": quantiles})


def calibrate_c0_clime(n: int, p: int, cov: CovarianceSpec, replicates: int = 200, seed: int = 0,
                       quantile: float = 0.99, reference_etas=(0.0, 0.5),
                       lambda_n: Optional[float] = None) -> AdaptiveConfig:
    """Calibration of ``c0(M, M1)`` with CLIME estimated on the second half-sample.

    ``n`` is the full sample size; the statistic uses the half-sample size.
    """
    if replicates < 100:
        raise ParameterError(f"calibration needs at least 100 replicates, got {replicates}")
    truths = _reference_truths(p, cov, reference_etas, seed)
    sqrt_cov = sym_sqrt(cov.covariance())
    quantiles = []
    n1 = (n + 1) // 2
    scale = n1 / math.sqrt(p * math.log(p))
    for m, gt in enumerate(truths):
        eta = reference_etas[m]
        stats = np.empty(replicates)
        for r in range(replicates):
            data = sample_dataset(gt, n, seed + 1_000_003 * (m + 1) + r, sigma_sqrt=sqrt_cov)
            first, second, _, rows2 = split_sample(data)
            est = clime_from_data(second, lambda_n=lambda_n, sample_rows=rows2)
            stats[r] = abs(eta_dense_plugin(first, est).truncated - eta) * scale
        quantiles.append(float(np.quantile(stats, quantile)))
    return AdaptiveConfig(2.0 * max(quantiles), "Calibrated", {
        "replicates": replicates, "seed": seed, "quantile": quantile, "n": n, "p": p,
        "reference_etas": list(reference_etas), "per_reference_quantiles": quantiles,
        "with_clime": True})

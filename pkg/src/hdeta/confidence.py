"""Confidence intervals for eta and chi-square tail thresholds.

Interval widths are ``C(alpha) sqrt(p) / n`` around the dense estimator and
``C'(alpha) (n^-1/2 + k log(p) / n * cond(Sigma)^2)`` around the square-root
Lasso estimator.  The constants have no explicit value; they are calibrated
as ``(1 - alpha)``-quantiles of ``|eta_hat - eta| / width`` over reference
designs, taking the largest quantile across reference models so the interval
is valid for each of them.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core_model import Dataset, EtaEstimate, ParameterError
from .dense import eta_dense
from .simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset
from .sqrt_lasso import sqrt_lasso_eta

DENSE_IC, SPARSE_IC = "DenseIC", "SparseIC"


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    alpha: float
    method: str
    k_assumed: Optional[int] = None
    constant_source: str = "Manual"

    @property
    def lo(self) -> float:
        return min(1.0, max(0.0, self.center - self.half_width))

    @property
    def hi(self) -> float:
        return min(1.0, max(0.0, self.center + self.half_width))

    def contains(self, eta: float) -> bool:
        return self.lo <= eta <= self.hi

    def to_dict(self) -> dict:
        return {"center": self.center, "lo": self.lo, "hi": self.hi, "alpha": self.alpha,
                "half_width": self.half_width, "method": self.method,
                "k_assumed": self.k_assumed, "constant_source": self.constant_source}


def _check(alpha: float, c_alpha: float):
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    if not c_alpha >= 0:
        raise ParameterError(f"c_alpha must be non-negative, got {c_alpha}")


def dense_rate(n: int, p: int) -> float:
    return math.sqrt(p) / n


def sparse_rate(n: int, p: int, k: int, sigma_cond: float = 1.0) -> float:
    return 1 / math.sqrt(n) + k * math.log(p) / n * sigma_cond ** 2


def ci_dense(est: Union[EtaEstimate, float], n: int, p: int, alpha: float, c_alpha: float,
             constant_source: str = "Manual") -> ConfidenceInterval:
    """Interval ``eta_D +/- c_alpha sqrt(p) / n``, endpoints clipped to [0, 1]."""
    _check(alpha, c_alpha)
    center = float(getattr(est, "value", est))
    return ConfidenceInterval(center, c_alpha * dense_rate(n, p), alpha, DENSE_IC,
                              None, constant_source)


def ci_sparse(est: Union[EtaEstimate, float], n: int, p: int, k: int, sigma_cond: float,
              alpha: float, c_alpha: float, constant_source: str = "Manual") -> ConfidenceInterval:
    """Interval ``eta_SL +/- c_alpha (n^-1/2 + k log(p)/n * sigma_cond^2)``."""
    _check(alpha, c_alpha)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not sigma_cond >= 1:
        raise ParameterError(f"sigma_cond must be >= 1, got {sigma_cond}")
    center = float(getattr(est, "value", est))
    return ConfidenceInterval(center, c_alpha * sparse_rate(n, p, k, sigma_cond), alpha,
                              SPARSE_IC, k, constant_source)


def chi2_tail_bound(trace: float, frob: float, op_norm: float, t: float) -> float:
    """Upper threshold ``tr(A) + 2 ||A||_F sqrt(t) + 2 ||A||_op t``.

    For a standard Gaussian vector ``Z``, ``P[Z'AZ >= threshold] <= exp(-t)``.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    if frob < 0 or op_norm < 0:
        raise ParameterError("norms must be non-negative")
    return trace + 2 * frob * math.sqrt(t) + 2 * op_norm * t


def chi2_lower_threshold(k: int, t: float) -> float:
    """``k - 2 sqrt(k t)``: ``P[chi2(k) <= threshold] <= exp(-t)``."""
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    return k - 2 * math.sqrt(k * t)


def chi2_identity_bound(k: int, t: float) -> float:
    """Upper threshold for ``A = I_k``: ``k + 2 sqrt(k t) + 2 t``."""
    return chi2_tail_bound(k, math.sqrt(k), 1.0, t)


_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _pivots(method, n, p, k, gt, eta, replicates, seed, lambda0, sigma_cond):
    out = np.empty(replicates)
    for r in range(replicates):
        data = sample_dataset(gt, n, seed + r)
        if method == DENSE_IC:
            out[r] = abs(eta_dense(data).value - eta) / dense_rate(n, p)
        else:
            out[r] = abs(sqrt_lasso_eta(data, lambda0).value - eta) / sparse_rate(n, p, k, sigma_cond)
    return out


def calibrate_c_alpha(method: str, alpha: float, n: int, p: int, k: Optional[int] = None,
                      replicates: int = 500, seed: int = 0,
                      reference_etas=(0.0, 0.25, 0.5, 0.75),
                      lambda0: Union[float, str, None] = "universal") -> float:
    """Monte Carlo calibration of the interval constant on identity-covariance designs.

    Dense intervals use Gaussian dense ``beta``; sparse intervals use
    ``k``-sparse equal-magnitude ``beta``.  Results are cached per argument set.
    """
    if method not in (DENSE_IC, SPARSE_IC):
        raise ParameterError(f"unknown interval method {method!r}")
    if method == SPARSE_IC and (k is None or k < 1):
        raise ParameterError("sparse interval calibration needs k >= 1")
    if replicates < 2:
        raise ParameterError("replicates must be >= 2")
    key = (method, alpha, n, p, k, replicates, seed, tuple(reference_etas), lambda0)
    with _CACHE_LOCK:
        if key in _CACHE:
            return _CACHE[key]
    cov = CovarianceSpec("identity", p)
    quantiles = []
    for m, eta in enumerate(reference_etas):
        if method == DENSE_IC:
            spec = BetaSpec("dense", eta, seed=seed + m)
        else:
            spec = BetaSpec("sparse", eta, k=k, seed=seed + m)
        gt = calibrate_beta(spec, cov)
        piv = _pivots(method, n, p, k, gt, eta, replicates, seed + 7_919 * (m + 1), lambda0, 1.0)
        quantiles.append(float(np.quantile(piv, 1 - alpha)))
    value = max(quantiles)
    with _CACHE_LOCK:
        _CACHE[key] = value
    return value


def ci_for_data(data: Dataset, method: str, alpha: float, c_alpha: float, k: Optional[int] = None,
                sigma_cond: float = 1.0, lambda0: Union[float, str, None] = "universal",
                constant_source: str = "Manual") -> ConfidenceInterval:
    """Estimate and interval in one call (identity precision for the dense case)."""
    if method == DENSE_IC:
        return ci_dense(eta_dense(data), data.n, data.p, alpha, c_alpha, constant_source)
    return ci_sparse(sqrt_lasso_eta(data, lambda0), data.n, data.p, k or 1, sigma_cond, alpha,
                     c_alpha, constant_source)

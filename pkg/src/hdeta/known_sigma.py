"""Estimators that use a known noise level ``sigma``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .core_model import Dataset, EtaEstimate, Method, ParameterError
from .sqrt_lasso import SqrtLassoFit


@dataclass
class GaussLassoFit:
    support: np.ndarray
    projected_norm_sq: float
    rank_deficient: bool
    rank: int


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return sigma


def eta_dense_known_sigma(data: Dataset, sigma: float) -> EtaEstimate:
    """``1 - n sigma^2 / ||Y||^2`` (raw; may be negative)."""
    sigma = _check_sigma(sigma)
    ynorm = float(data.y @ data.y)
    if ynorm == 0:
        return EtaEstimate(0.0, Method.KnownSigmaDense, {"degenerate": True, "y_norm_sq": 0.0})
    value = 1.0 - data.n * sigma ** 2 / ynorm
    return EtaEstimate(value, Method.KnownSigmaDense, {"degenerate": False, "y_norm_sq": ynorm})


def project_onto_columns(x: np.ndarray, y: np.ndarray, rank_tol: float = 1e-10) -> tuple[np.ndarray, int, bool]:
    """Orthogonal projection of ``y`` on the column span of ``x``.

    Uses a pivoted thin QR; columns whose ``|R_ii|`` falls below
    ``rank_tol * |R_00|`` are treated as dependent.  Returns
    ``(projection, rank, rank_deficient)``.
    """
    if x.shape[1] == 0:
        return np.zeros_like(y), 0, False
    q, r, _ = qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rank_tol * diag[0])) if diag[0] > 0 else 0
    qr_ = q[:, :rank]
    return qr_ @ (qr_.T @ y), rank, rank < x.shape[1]


def gauss_lasso_fit(data: Dataset, fit: SqrtLassoFit) -> GaussLassoFit:
    support = np.asarray(fit.support, dtype=int)
    proj, rank, deficient = project_onto_columns(data.x[:, support], data.y)
    return GaussLassoFit(support, float(proj @ proj), deficient, rank)


def eta_gauss_lasso(data: Dataset, sigma: float, fit: SqrtLassoFit) -> EtaEstimate:
    """``(||P_J Y||^2 / n) / (sigma^2 + ||P_J Y||^2 / n)`` on the Lasso support ``J``."""
    sigma = _check_sigma(sigma)
    gl = gauss_lasso_fit(data, fit)
    signal = gl.projected_norm_sq / data.n
    value = signal / (sigma ** 2 + signal)
    return EtaEstimate(value, Method.GaussLassoKnownSigma, {
        "support": gl.support.tolist(), "projected_norm_sq": gl.projected_norm_sq,
        "rank": gl.rank, "rank_deficient": gl.rank_deficient})

"""Dense (U-type) estimator of the proportion of explained variance.

With ``A = X Omega X' - tr(X Omega X') I_n / n`` the estimator is

    eta_D(Omega) = Y' A Y / ((n + 1) ||Y||^2).

``Y' X Omega X' Y`` is evaluated as ``v' Omega v`` with ``v = X' Y`` and the
trace as ``sum((X Omega) * X)``, so no ``n x n`` matrix is ever formed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core_model import Dataset, EstimationError, EtaEstimate, Method, ParameterError


@dataclass
class DenseDiagnostics:
    t_stat: float
    v_hat: float
    trace_term: float
    y_norm_sq: float


def t_statistic(data: Dataset) -> float:
    """``T = Y'(XX' - tr(XX') I_n / n) Y / n^2``."""
    n = data.n
    if n == 1:
        return 0.0
    xty = data.x.T @ data.y
    trace = float(np.sum(data.x * data.x))
    return (float(xty @ xty) - trace * float(data.y @ data.y) / n) / n ** 2


def t_statistic_spectral(data: Dataset) -> float:
    """Same statistic through the eigenpairs of ``XX'``.

    ``T = n^-2 sum_i (l_i - mean(l)) (Y'u_i)^2``; kept as an independent
    evaluation path for testing.
    """
    n = data.n
    gram = data.x @ data.x.T
    lam, u = np.linalg.eigh(gram)
    proj = u.T @ data.y
    return float(np.sum((lam - lam.mean()) * proj ** 2)) / n ** 2


def normalized_v(data: Dataset) -> float:
    """``V = T n^2 / (||Y||^2 (n + 1))``; 0 when ``Y = 0``."""
    ynorm = float(data.y @ data.y)
    if ynorm == 0:
        return 0.0
    return t_statistic(data) * data.n ** 2 / (ynorm * (data.n + 1))


def _check_omega(omega: np.ndarray, p: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (p, p):
        raise ParameterError(f"omega has shape {omega.shape}, expected {(p, p)}")
    scale = max(1.0, float(np.abs(omega).max()))
    if not np.allclose(omega, omega.T, rtol=0, atol=1e-12 * scale):
        raise ParameterError("omega must be symmetric")
    return omega


def eta_dense(data: Dataset, omega: Optional[np.ndarray] = None,
              centering: str = "trace",
              method: Method = Method.DenseKnownOmega) -> EtaEstimate:
    """Dense estimator ``eta_D(Omega)``.

    Parameters
    ----------
    data : Dataset
    omega : (p, p) array or None
        Precision matrix of the design rows; ``None`` means the identity.
    centering : {"trace", "p"}
        Centre with ``tr(X Omega X')`` (default) or with ``p``.

    Returns
    -------
    EtaEstimate
        Raw value in ``value``; ``diagnostics`` holds ``t_stat``, ``v_hat``,
        ``trace_term`` (``tr(X Omega X') / n``) and ``y_norm_sq``.
    """
    if centering not in ("trace", "p"):
        raise ParameterError(f"centering must be 'trace' or 'p', got {centering!r}")
    n, p = data.n, data.p
    x, y = data.x, data.y
    xty = x.T @ y
    if omega is None:
        quad = float(xty @ xty)
        trace = float(np.sum(x * x))
    else:
        omega = _check_omega(omega, p)
        quad = float(xty @ omega @ xty)
        trace = float(np.sum((x @ omega) * x))
    if centering == "p":
        trace = float(n * p)
    ynorm = float(y @ y)
    diag = DenseDiagnostics(t_stat=0.0, v_hat=0.0, trace_term=trace / n, y_norm_sq=ynorm)
    extra = {"centering": centering, "degenerate": False}
    if ynorm == 0 or n == 1:
        # n = 1: the centred matrix is exactly zero
        extra["degenerate"] = True
        return EtaEstimate(0.0, method, {**asdict(diag), **extra})
    num = quad - trace * ynorm / n
    diag.t_stat = num / n ** 2
    diag.v_hat = num / ((n + 1) * ynorm)
    return EtaEstimate(diag.v_hat, method, {**asdict(diag), **extra})


def eta_dense_truncated(data: Dataset, omega: Optional[np.ndarray] = None,
                        centering: str = "trace") -> EtaEstimate:
    """Dense estimator clipped to ``[0, 1]`` (the clipped value is ``value``)."""
    est = eta_dense(data, omega, centering)
    return EtaEstimate(est.truncated, est.method, {**est.diagnostics, "raw": est.value})


def eta_dense_plugin(data: Dataset, omega_hat, centering: str = "trace",
                     min_singular: float = 1e-10) -> EtaEstimate:
    """Dense estimator with an estimated precision matrix.

    ``omega_hat`` is a :class:`~hdeta.clime.PrecisionEstimate` (or a bare
    matrix).  It has to be non-singular; its minimum singular value is checked
    against ``min_singular``.
    """
    mat = getattr(omega_hat, "omega_hat", omega_hat)
    mat = np.asarray(mat, dtype=float)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] < min_singular:
        cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
        raise EstimationError(
            f"estimated precision matrix is singular (min singular value {sv[-1]:.3g}, "
            f"condition number {cond:.3g})")
    est = eta_dense(data, mat, centering, method=Method.DensePlugIn)
    rows = getattr(omega_hat, "sample_rows", None)
    est.diagnostics["omega_sample_rows"] = None if rows is None else np.asarray(rows).tolist()
    est.diagnostics["omega_condition"] = float(sv[0] / sv[-1])
    return est

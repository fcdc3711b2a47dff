"""Square-root (scaled) Lasso and the explained-variance estimate built on it.

The solver minimises the joint criterion

    J(beta, s) = n s / 2 + ||Y - W beta||^2 / (2 s) + lambda0 ||beta||_1

over ``beta`` and ``s > 0`` on the column-standardised design ``W`` by
alternating exact minimisation in ``s`` (``s = ||Y - W beta|| / sqrt(n)``)
with a Lasso solve in ``beta`` (threshold ``lambda0 * s``) by cyclic
coordinate descent.  Minimising ``J`` over ``s`` gives back the square-root
Lasso criterion ``sqrt(n) (||Y - W beta|| + lambda0 / sqrt(n) ||beta||_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit

from .core_model import Dataset, EtaEstimate, Method, ParameterError


@dataclass
class SqrtLassoFit:
    beta_std: np.ndarray
    beta_raw: np.ndarray
    sigma_tilde: float
    lambda0: float
    outer_iters: int
    kkt_residual: float
    support: np.ndarray
    converged: bool = True
    perfect_fit: bool = False
    objective_history: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "support": self.support.tolist(),
            "sigma_tilde": self.sigma_tilde,
            "lambda0": self.lambda0,
            "outer_iters": self.outer_iters,
            "kkt_residual": self.kkt_residual,
            "converged": self.converged,
            "perfect_fit": self.perfect_fit,
        }


def conservative_lambda0(p: int) -> float:
    """Conservative tuning ``13 sqrt(log p)``."""
    return 13.0 * math.sqrt(math.log(max(p, 2)))


def universal_lambda0(p: int) -> float:
    """Universal tuning ``sqrt(2 log p)``."""
    return math.sqrt(2.0 * math.log(max(p, 2)))


LAMBDA0_RULES = {"conservative": conservative_lambda0, "universal": universal_lambda0}


def resolve_lambda0(lambda0: Union[float, str, None], p: int) -> float:
    if lambda0 is None:
        lambda0 = "conservative"
    if isinstance(lambda0, str):
        try:
            return LAMBDA0_RULES[lambda0](p)
        except KeyError:
            raise ParameterError(f"unknown lambda0 rule {lambda0!r}") from None
    lambda0 = float(lambda0)
    if not lambda0 > 0:
        raise ParameterError(f"lambda0 must be positive, got {lambda0}")
    return lambda0


def standardize_columns(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Scale every column of X to unit Euclidean norm.

    Returns the Fortran-ordered standardised matrix and the original norms.
    """
    norms = np.linalg.norm(data.x, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ParameterError(f"column x{zero[0] + 1} of the design is identically zero")
    return np.asfortranarray(data.x / norms), norms


@njit(cache=True, nogil=True)
def _cd_sweeps(w, sq_norms, beta, r, thresh, delta_tol, max_sweeps):
    """Cyclic coordinate descent for 0.5 ||r||^2 + thresh ||beta||_1.

    ``r`` must equal ``y - w @ beta`` on entry and is kept in sync.  After a
    full sweep, sweeps are restricted to the active set until they stall,
    then a full sweep checks for new variables.  Returns the sweep count.
    """
    n, p = w.shape
    sweeps = 0
    active_only = False
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            if active_only and bj == 0.0:
                continue
            g = 0.0
            for i in range(n):
                g += w[i, j] * r[i]
            z = g + sq_norms[j] * bj
            if z > thresh:
                new = (z - thresh) / sq_norms[j]
            elif z < -thresh:
                new = (z + thresh) / sq_norms[j]
            else:
                new = 0.0
            d = new - bj
            if d != 0.0:
                for i in range(n):
                    r[i] -= d * w[i, j]
                beta[j] = new
                ad = abs(d)
                if ad > max_delta:
                    max_delta = ad
        sweeps += 1
        if max_delta <= delta_tol:
            if active_only:
                active_only = False
            else:
                break
        else:
            active_only = True
    return sweeps


def joint_objective(w: np.ndarray, y: np.ndarray, beta: np.ndarray, s: float, lambda0: float) -> float:
    r = y - w @ beta
    n = y.shape[0]
    return n * s / 2 + float(r @ r) / (2 * s) + lambda0 * float(np.abs(beta).sum())


def kkt_residual(w: np.ndarray, r: np.ndarray, beta: np.ndarray, s: float, lambda0: float) -> float:
    """Largest violation of the optimality conditions at noise level ``s``.

    Uses ``g_j = W_j'r / s``: ``|g_j - lambda0 sign(beta_j)|`` on the support
    and ``max(0, |g_j| - lambda0)`` off it, divided by ``sqrt(n)``.
    """
    if beta.size == 0:
        return 0.0
    g = (w.T @ r) / s
    active = beta != 0
    viol = np.where(active, np.abs(g - lambda0 * np.sign(beta)),
                    np.maximum(np.abs(g) - lambda0, 0.0))
    return float(viol.max()) / math.sqrt(r.shape[0])


def fit_sqrt_lasso(data: Dataset, lambda0: Union[float, str, None] = None, tol: float = 1e-8,
                   max_outer: int = 100, max_sweeps: int = 10_000) -> SqrtLassoFit:
    """Fit the scaled Lasso by alternating minimisation.

    Parameters
    ----------
    data : Dataset
    lambda0 : float or {"conservative", "universal"}, optional
        Penalty level.  Defaults to ``13 sqrt(log p)``; ``"universal"`` is
        ``sqrt(2 log p)``.
    tol : float
        Bound on the relative change of the noise level between outer
        iterations and on the KKT residual.
    max_outer, max_sweeps : int
        Outer iteration cap and coordinate-descent sweep budget per inner solve.

    Returns
    -------
    SqrtLassoFit
        ``converged`` is False when ``max_outer`` was hit; ``perfect_fit`` is set
        when the noise level collapsed to the floor ``1e-12 ||Y|| / sqrt(n)``.
    """
    lam = resolve_lambda0(lambda0, data.p)
    w, norms = standardize_columns(data)
    y = np.ascontiguousarray(data.y)
    n, p = w.shape
    sq_norms = np.einsum("ij,ij->j", w, w)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        zero = np.zeros(p)
        return SqrtLassoFit(zero, zero.copy(), 0.0, lam, 0, 0.0, np.zeros(0, dtype=int),
                            objective_history=[0.0])

    floor = 1e-12 * ynorm / math.sqrt(n)
    beta = np.zeros(p)
    r = y.copy()
    s = ynorm / math.sqrt(n)
    history = [joint_objective(w, y, beta, s, lam)]
    converged = perfect = False
    kkt = math.inf
    it = 0
    for it in range(1, max_outer + 1):
        delta = max(tol * s, floor)
        budget = max_sweeps
        while True:
            used = _cd_sweeps(w, sq_norms, beta, r, lam * s, delta, budget)
            budget -= used
            r = y - w @ beta
            kkt = kkt_residual(w, r, beta, s, lam)
            if kkt <= tol or budget <= 0 or delta < 1e-300:
                break
            delta *= 1e-2
        s_new = float(np.linalg.norm(r)) / math.sqrt(n)
        if s_new < floor:
            perfect = True
            s_new = floor
        history.append(joint_objective(w, y, beta, s_new, lam))
        rel = abs(s_new - s) / s
        s = s_new
        if rel <= tol and kkt <= tol:
            converged = True
            break

    if not beta.any():
        r = y.copy()
    sigma_tilde = float(np.linalg.norm(r)) / math.sqrt(n)
    kkt_final = kkt_residual(w, r, beta, max(sigma_tilde, floor), lam)
    return SqrtLassoFit(
        beta_std=beta,
        beta_raw=beta / norms,
        sigma_tilde=sigma_tilde,
        lambda0=lam,
        outer_iters=it,
        kkt_residual=kkt_final,
        support=np.flatnonzero(beta),
        converged=converged,
        perfect_fit=perfect,
        objective_history=history,
    )


def eta_sqrt_lasso(fit: SqrtLassoFit, data: Dataset) -> EtaEstimate:
    """``1 - n sigma_tilde^2 / ||Y||^2``."""
    ynorm = float(data.y @ data.y)
    diag = fit.summary()
    if ynorm == 0:
        return EtaEstimate(0.0, Method.SqrtLasso, {**diag, "degenerate": True})
    if fit.support.size == 0:
        # empty fit: sigma_tilde^2 = ||Y||^2 / n, so the estimate is exactly 0
        return EtaEstimate(0.0, Method.SqrtLasso, {**diag, "degenerate": False})
    value = 1.0 - data.n * fit.sigma_tilde ** 2 / ynorm
    # the fit never increases the residual norm above ||Y||; guard rounding only
    value = min(1.0, max(0.0, value))
    return EtaEstimate(value, Method.SqrtLasso, {**diag, "degenerate": False})


def sqrt_lasso_eta(data: Dataset, lambda0: Union[float, str, None] = None, tol: float = 1e-8) -> EtaEstimate:
    """Fit and estimate in one call."""
    return eta_sqrt_lasso(fit_sqrt_lasso(data, lambda0, tol), data)

"""CLIME precision-matrix estimation.

Each column ``w_j`` of the raw estimate solves

    min ||w||_1   s.t.   ||S w - e_j||_inf <= lambda_n

written with ``w = w+ - w-`` and a bounded residual variable ``s``::

    S w+ - S w- - s = e_j,   w+, w- >= 0,   -lambda_n <= s <= lambda_n.

The raw estimate is then symmetrised entrywise by keeping, of ``(i, j)`` and
``(j, i)``, the entry of smaller magnitude.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core_model import Dataset, EstimationError, ParameterError
from .lp import INFEASIBLE, OPTIMAL, solve_bounded_lp


@dataclass
class PrecisionEstimate:
    omega_hat: np.ndarray
    lambda_n: float
    feasibility_gap: float
    symmetric: bool
    sample_rows: Optional[np.ndarray]
    min_eigenvalue: float
    omega_raw: np.ndarray = field(repr=False, default=None)
    lp_iterations: int = 0

    def metadata(self) -> dict:
        return {
            "lambda_n": self.lambda_n,
            "feasibility_gap": self.feasibility_gap,
            "symmetric": self.symmetric,
            "min_eigenvalue": self.min_eigenvalue,
            "sample_rows": None if self.sample_rows is None else self.sample_rows.tolist(),
            "lp_iterations": self.lp_iterations,
            "p": int(self.omega_hat.shape[0]),
        }


def split_sample(data: Dataset, policy: str = "EvenOdd") -> tuple[Dataset, Dataset, np.ndarray, np.ndarray]:
    """Split rows into two disjoint halves.

    ``EvenOdd`` puts even rows first; ``FirstHalf`` takes the first
    ``ceil(n / 2)`` rows.  The first part is meant for the estimate of eta and
    the second for the precision matrix.  Row indices are returned too.
    """
    n = data.n
    if n < 2:
        raise ParameterError(f"need at least 2 rows to split, got {n}")
    idx = np.arange(n)
    if policy == "EvenOdd":
        first, second = idx[0::2], idx[1::2]
    elif policy == "FirstHalf":
        cut = (n + 1) // 2
        first, second = idx[:cut], idx[cut:]
    else:
        raise ParameterError(f"unknown split policy {policy!r}")
    return data.subset(first), data.subset(second), first, second


def empirical_covariance(data: Dataset) -> np.ndarray:
    """Uncentred ``X'X / n``."""
    s = data.x.T @ data.x / data.n
    return (s + s.T) / 2


def pragmatic_lambda_n(n: int, p: int, m_l1: float = 1.0, c: float = 2.0) -> float:
    """``c * m_l1 * sqrt(log p / n)``."""
    return c * m_l1 * math.sqrt(math.log(p) / n)


def theoretical_lambda_n(n: int, p: int, m1: float, m_l1: float) -> float:
    """Proof-level tuning ``2 (25 v M1) (3 + e^3 (5 v sqrt(M1))^2) M sqrt(log p / n)``.

    Experimental: the bracket is closed after the squared term so that the
    level vanishes as ``n`` grows.
    """
    if n < 2 or p < 2 or m1 < 1 or m_l1 <= 0:
        raise ParameterError("theoretical_lambda_n needs n >= 2, p >= 2, m1 >= 1, m_l1 > 0")
    return (2.0 * max(25.0, m1) * (3.0 + math.e ** 3 * max(5.0, math.sqrt(m1)) ** 2)
            * m_l1 * math.sqrt(math.log(p) / n))


def default_lambda_n(n: int, p: int, m1: float = 1.0, m_l1: float = 1.0,
                     rule: str = "pragmatic", c: float = 2.0) -> float:
    if n < 2 or p < 2:
        raise ParameterError("default_lambda_n needs n >= 2 and p >= 2")
    if rule == "pragmatic":
        return pragmatic_lambda_n(n, p, m_l1, c)
    if rule == "theoretical":
        return theoretical_lambda_n(n, p, m1, m_l1)
    raise ParameterError(f"unknown lambda_n rule {rule!r}")


def clime_column(sigma_hat: np.ndarray, j: int, lambda_n: float):
    """Solve the LP for column ``j``; returns the LP result and the column."""
    p = sigma_hat.shape[0]
    A = np.hstack([sigma_hat, -sigma_hat, -np.eye(p)])
    c = np.concatenate([np.ones(2 * p), np.zeros(p)])
    b = np.zeros(p)
    b[j] = 1.0
    lo = np.concatenate([np.zeros(2 * p), np.full(p, -lambda_n)])
    hi = np.concatenate([np.full(2 * p, np.inf), np.full(p, lambda_n)])
    res = solve_bounded_lp(c, A, b, lo, hi)
    return res, res.x[:p] - res.x[p:2 * p]


def symmetrize_min_magnitude(raw: np.ndarray) -> np.ndarray:
    """Keep the smaller-magnitude entry of each ``(i, j)``/``(j, i)`` pair.

    Magnitude ties with different signs resolve to the upper-triangle entry so
    the output is exactly symmetric.
    """
    upper = np.triu(raw) + np.triu(raw, 1).T  # upper-triangle value mirrored
    lower = np.tril(raw) + np.tril(raw, -1).T
    out = np.where(np.abs(lower) < np.abs(upper), lower, upper)
    return out


def fit_clime(sigma_hat: np.ndarray, lambda_n: float, lp_tolerance: float = 1e-8,
              threads: int = 1, sample_rows: Optional[np.ndarray] = None) -> PrecisionEstimate:
    """Column-wise CLIME followed by min-magnitude symmetrisation.

    Raises
    ------
    EstimationError
        When a column LP is infeasible or the solution violates the constraint
        by more than ``lp_tolerance``.
    """
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    p = sigma_hat.shape[0]
    if sigma_hat.shape != (p, p):
        raise ParameterError("sigma_hat must be square")
    if not lambda_n > 0:
        raise ParameterError(f"lambda_n must be positive, got {lambda_n}")

    def solve(j):
        return clime_column(sigma_hat, j, lambda_n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, range(p)))
    else:
        results = [solve(j) for j in range(p)]

    raw = np.empty((p, p))
    iters = 0
    for j, (res, col) in enumerate(results):
        if res.status == INFEASIBLE:
            raise EstimationError(f"CLIME LP for column {j} is infeasible at lambda_n={lambda_n:.4g}")
        if res.status != OPTIMAL:
            raise EstimationError(f"CLIME LP for column {j} ended with status {res.status_name}")
        raw[:, j] = col
        iters += res.iterations
    resid = sigma_hat @ raw - np.eye(p)
    gap = max(0.0, float(np.abs(resid).max()) - lambda_n)
    if gap > lp_tolerance:
        bad = int(np.argmax(np.abs(resid).max(axis=0)))
        raise EstimationError(f"CLIME column {bad} violates the constraint by {gap:.3g}")
    omega = symmetrize_min_magnitude(raw)
    return PrecisionEstimate(
        omega_hat=omega,
        lambda_n=float(lambda_n),
        feasibility_gap=gap,
        symmetric=bool(np.array_equal(omega, omega.T)),
        sample_rows=None if sample_rows is None else np.asarray(sample_rows),
        min_eigenvalue=float(np.linalg.eigvalsh(omega)[0]),
        omega_raw=raw,
        lp_iterations=iters,
    )


def clime_from_data(data: Dataset, lambda_n: Optional[float] = None, rule: str = "pragmatic",
                    m1: float = 1.0, m_l1: float = 1.0, threads: int = 1,
                    sample_rows: Optional[np.ndarray] = None) -> PrecisionEstimate:
    """CLIME on the empirical covariance of ``data``."""
    if lambda_n is None:
        lambda_n = default_lambda_n(data.n, data.p, m1, m_l1, rule)
    return fit_clime(empirical_covariance(data), lambda_n, threads=threads, sample_rows=sample_rows)


def split_and_fit(data: Dataset, policy: str = "EvenOdd", **kw):
    """Split the sample, fit CLIME on the second half, return ``(first_half, estimate)``."""
    first, second, _, rows2 = split_sample(data, policy)
    est = clime_from_data(second, sample_rows=rows2, **kw)
    return first, est


def class_u_report(omega: np.ndarray, n: int, m: float, m1: float) -> dict:
    """Check membership of ``omega`` in the sparse, well-conditioned class."""
    omega = np.asarray(omega, dtype=float)
    p = omega.shape[0]
    eig = np.linalg.eigvalsh(omega)
    l1 = float(np.abs(omega).sum(axis=0).max())
    col_nnz = int(np.count_nonzero(omega, axis=0).max())
    sparsity_cap = math.sqrt(p / (n * math.log(p))) if p > 1 else math.inf
    checks = {
        "eigen_bounds": bool(1 / m1 <= eig[0] and eig[-1] <= m1),
        "l1_norm": bool(l1 <= m),
        "column_sparsity": bool(col_nnz <= sparsity_cap),
    }
    return {**checks, "member": all(checks.values()), "min_eig": float(eig[0]),
            "max_eig": float(eig[-1]), "l1_norm_value": l1, "max_column_nnz": col_nnz,
            "sparsity_cap": sparsity_cap}

"""Bounded-variable primal simplex on a dense tableau.

Solves ``min c'x  s.t.  A x = b,  lo <= x <= hi`` with finite lower bounds
and possibly infinite upper bounds.  Non-basic variables sit at one of their
bounds, so box constraints never become rows.  Phase 1 minimises the sum of
artificial variables that are only added for rows without a usable slack.
Pricing is Dantzig's rule; after a degenerate step it switches to Bland's
rule until the objective moves again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2, 3
STATUS_NAMES = {OPTIMAL: "optimal", INFEASIBLE: "infeasible",
                UNBOUNDED: "unbounded", ITERATION_LIMIT: "iteration_limit"}


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    status: int
    iterations: int

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]


@njit(cache=True, nogil=True)
def _pivot(t, xb, d, r, q):
    m, ncol = t.shape
    piv = t[r, q]
    for k in range(ncol):
        t[r, k] /= piv
    for i in range(m):
        if i != r:
            f = t[i, q]
            if f != 0.0:
                for k in range(ncol):
                    t[i, k] -= f * t[r, k]
                t[i, q] = 0.0
    f = d[q]
    if f != 0.0:
        for k in range(ncol):
            d[k] -= f * t[r, k]
        d[q] = 0.0
    t[r, q] = 1.0


@njit(cache=True, nogil=True)
def _iterate(t, xb, basis, is_basic, x, lo, hi, d, max_iter, tol, piv_tol):
    """Run simplex iterations for reduced costs ``d``; returns (status, iters)."""
    m, ncol = t.shape
    bland = False
    it = 0
    while it < max_iter:
        # pricing
        q = -1
        best = 0.0
        direction = 0.0
        for j in range(ncol):
            if is_basic[j] or hi[j] - lo[j] <= 0.0:
                continue
            dj = d[j]
            at_lower = x[j] == lo[j]
            if at_lower and dj < -tol:
                score = -dj
                dirj = 1.0
            elif (not at_lower) and dj > tol:
                score = dj
                dirj = -1.0
            else:
                continue
            if bland:
                q = j
                direction = dirj
                break
            if score > best:
                best = score
                q = j
                direction = dirj
        if q < 0:
            return 0, it
        it += 1

        # ratio test
        theta = hi[q] - lo[q]
        r = -1
        best_alpha = 0.0
        for i in range(m):
            a = direction * t[i, q]
            bi = basis[i]
            if a > piv_tol:
                lim = (xb[i] - lo[bi]) / a
            elif a < -piv_tol:
                if hi[bi] == np.inf:
                    continue
                lim = (hi[bi] - xb[i]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            take = False
            if lim < theta - 1e-12 * (1.0 + abs(theta)) or r < 0 and lim <= theta:
                take = True
            elif abs(lim - theta) <= 1e-12 * (1.0 + abs(theta)) and r >= 0:
                if bland:
                    take = bi < basis[r]
                else:
                    take = abs(a) > best_alpha
            if take:
                theta = lim
                r = i
                best_alpha = abs(a)
        if theta == np.inf:
            return 2, it

        for i in range(m):
            xb[i] -= theta * direction * t[i, q]
        if r < 0:
            # bound flip of the entering variable
            x[q] = hi[q] if direction > 0 else lo[q]
        else:
            leaving = basis[r]
            a = direction * t[r, q]
            x[leaving] = lo[leaving] if a > 0 else hi[leaving]
            is_basic[leaving] = False
            enter_val = x[q] + direction * theta
            _pivot(t, xb, d, r, q)
            basis[r] = q
            is_basic[q] = True
            xb[r] = enter_val
            x[q] = enter_val
        bland = theta <= tol
    return 3, it


def solve_bounded_lp(c, A, b, lo, hi, tol: float = 1e-10, piv_tol: float = 1e-9,
                     max_iter: int = 50_000) -> LPResult:
    """Minimise ``c'x`` subject to ``A x = b`` and ``lo <= x <= hi``."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    m, n = A.shape
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")

    x0 = lo.copy()
    res = b - A @ x0

    # crash basis: slack-like columns whose required value is within bounds
    nnz = np.count_nonzero(A, axis=0)
    basis = np.full(m, -1, dtype=np.int64)
    for j in np.flatnonzero(nnz == 1):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] >= 0:
            continue
        v = x0[j] + res[i] / A[i, j]
        if lo[j] - 1e-12 <= v <= hi[j] + 1e-12:
            basis[i] = j
    art_rows = np.flatnonzero(basis < 0)
    n_art = art_rows.size
    A_ext = np.zeros((m, n + n_art))
    A_ext[:, :n] = A
    for k, i in enumerate(art_rows):
        A_ext[i, n + k] = 1.0 if res[i] >= 0 else -1.0
        basis[i] = n + k
    lo_ext = np.concatenate([lo, np.zeros(n_art)])
    hi_ext = np.concatenate([hi, np.full(n_art, np.inf)])
    x = np.concatenate([x0, np.zeros(n_art)])

    diag = A_ext[np.arange(m), basis]
    t = A_ext / diag[:, None]
    # B is diagonal here, so x_B = (b - N x_N) / diag
    is_basic = np.zeros(n + n_art, dtype=np.bool_)
    is_basic[basis] = True
    xn = np.where(is_basic, 0.0, x)
    xb = (b - A_ext @ xn) / diag
    x[basis] = xb
    iters = 0

    if n_art:
        cost1 = np.zeros(n + n_art)
        cost1[n:] = 1.0
        d = cost1 - cost1[basis] @ t
        status, it = _iterate(t, xb, basis, is_basic, x, lo_ext, hi_ext, d, max_iter, tol, piv_tol)
        iters += it
        if status == ITERATION_LIMIT:
            return LPResult(x[:n], np.nan, status, iters)
        x[basis] = xb
        infeas = float(x[n:].sum())
        if infeas > 1e-8 * max(1.0, float(np.abs(b).max())):
            return LPResult(x[:n], np.nan, INFEASIBLE, iters)
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if basis[r] >= n:
                cand = np.flatnonzero((~is_basic[:n]) & (np.abs(t[r, :n]) > piv_tol))
                if cand.size:
                    q = int(cand[np.argmax(np.abs(t[r, cand]))])
                    dummy = np.zeros(n + n_art)
                    val = x[q]
                    _pivot(t, xb, dummy, r, q)
                    is_basic[basis[r]] = False
                    x[basis[r]] = 0.0
                    basis[r] = q
                    is_basic[q] = True
                    xb[r] = val
        hi_ext[n:] = 0.0
        x[n:][~is_basic[n:]] = 0.0

    cost2 = np.concatenate([c, np.zeros(n_art)])
    d = cost2 - cost2[basis] @ t
    status, it = _iterate(t, xb, basis, is_basic, x, lo_ext, hi_ext, d, max_iter, tol, piv_tol)
    iters += it

    # recompute basic values from the original data for accuracy
    xn = np.where(is_basic, 0.0, x)
    B = A_ext[:, basis]
    try:
        xb_ref = np.linalg.solve(B, b - A_ext @ xn)
        x[basis] = xb_ref
    except np.linalg.LinAlgError:
        x[basis] = xb
    sol = x[:n].copy()
    return LPResult(sol, float(c @ sol), status, iters)

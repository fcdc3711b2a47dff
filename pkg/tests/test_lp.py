import numpy as np
import pytest
from scipy.optimize import linprog

from hdeta.clime import clime_column, empirical_covariance
from hdeta.core_model import Dataset
from hdeta.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_bounded_lp

from oracles import clime_vertex_oracle


def _random_lp(rng, m, n):
    A = rng.standard_normal((m, n))
    x_feas = rng.uniform(0, 1, n)
    b = A @ x_feas
    c = rng.standard_normal(n)
    lo = np.zeros(n)
    hi = np.where(rng.random(n) < 0.5, 2.0, np.inf)
    return c, A, b, lo, hi


@pytest.mark.parametrize("seed", range(40))
def test_matches_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    c, A, b, lo, hi = _random_lp(rng, rng.integers(2, 7), rng.integers(7, 15))
    ref = linprog(c, A_eq=A, b_eq=b, bounds=list(zip(lo, np.where(np.isinf(hi), None, hi))),
                  method="highs")
    res = solve_bounded_lp(c, A, b, lo, hi)
    if ref.status == 3:
        assert res.status == UNBOUNDED
    else:
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(ref.fun, abs=1e-8 * max(1, abs(ref.fun)))
        np.testing.assert_allclose(A @ res.x, b, atol=1e-8)
        assert np.all(res.x >= lo - 1e-9) and np.all(res.x <= hi + 1e-9)


def test_infeasible_and_unbounded():
    A = np.array([[1.0, 1.0]])
    assert solve_bounded_lp([1, 1], A, [5.0], [0, 0], [1, 1]).status == INFEASIBLE
    assert solve_bounded_lp([-1, 0], np.array([[1.0, -1.0]]), [0.0], [0, 0],
                            [np.inf, np.inf]).status == UNBOUNDED


def test_degenerate_problem_terminates():
    # many ties in the ratio test
    A = np.array([[1.0, 1.0, 1.0, 1.0, 0.0], [1.0, -1.0, 1.0, -1.0, 1.0]])
    res = solve_bounded_lp([-1, -1, -1, -1, 0], A, [0.0, 0.0], np.zeros(5), np.full(5, 1.0))
    assert res.status == OPTIMAL and res.objective == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p,seed", [(3, 0), (4, 1), (5, 2), (6, 3), (8, 4)])
def test_clime_columns_match_vertex_enumeration(p, seed):
    rng = np.random.default_rng(seed)
    s = empirical_covariance(Dataset(rng.standard_normal((3 * p, p)), np.zeros(3 * p)))
    lam = 0.3
    for j in range(min(p, 3)):
        res, col = clime_column(s, j, lam)
        assert res.status == OPTIMAL
        assert np.abs(col).sum() == pytest.approx(clime_vertex_oracle(s, j, lam), abs=1e-9)

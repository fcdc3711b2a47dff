import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdeta.confidence import (DENSE_IC, SPARSE_IC, calibrate_c_alpha, chi2_identity_bound,
                              chi2_lower_threshold, chi2_tail_bound, ci_dense, ci_for_data, ci_sparse)
from hdeta.core_model import Dataset, EtaEstimate, Method, ParameterError


def test_zero_constant_gives_point_interval():
    ci = ci_dense(0.4, 100, 50, 0.1, 0.0)
    assert ci.lo == ci.hi == 0.4 and ci.contains(0.4)


def test_dense_width_halves_when_n_doubles():
    a = ci_dense(0.5, 100, 400, 0.1, 2.0)
    b = ci_dense(0.5, 200, 400, 0.1, 2.0)
    assert b.half_width == pytest.approx(a.half_width / 2, rel=1e-15)


def test_sparse_width_limits_and_monotonicity():
    ci = ci_sparse(0.5, 10 ** 8, 10, 1, 1.0, 0.1, 3.0)
    assert ci.half_width == pytest.approx(3.0 / math.sqrt(10 ** 8), rel=1e-3)
    widths = [ci_sparse(0.5, 200, 400, k, 1.0, 0.1, 1.0).half_width for k in (1, 2, 5, 10)]
    assert widths == sorted(widths) and len(set(widths)) == 4
    with pytest.raises(ParameterError):
        ci_sparse(0.5, 200, 400, 0, 1.0, 0.1, 1.0)
    with pytest.raises(ParameterError):
        ci_sparse(0.5, 200, 400, 1, 0.5, 0.1, 1.0)


def test_endpoints_are_clipped():
    est = EtaEstimate(-0.1, Method.DenseKnownOmega)
    ci = ci_dense(est, 10, 100, 0.1, 1.0)
    assert ci.lo == 0.0 and 0 <= ci.hi <= 1
    d = ci.to_dict()
    assert set(d) >= {"center", "lo", "hi", "alpha"}
    with pytest.raises(ParameterError):
        ci_dense(0.5, 10, 10, 1.5, 1.0)


def test_chi2_identity_threshold():
    assert chi2_identity_bound(7, 2.0) == pytest.approx(7 + 2 * math.sqrt(14) + 4)
    assert chi2_tail_bound(3.0, 1.0, 1.0, 1e-12) == pytest.approx(3.0, abs=1e-5)
    with pytest.raises(ParameterError):
        chi2_tail_bound(1.0, 1.0, 1.0, 0.0)


_norm = st.one_of(st.just(0.0), st.floats(1e-3, 20))


@given(st.floats(0, 50), _norm, _norm, st.floats(0.01, 10), st.floats(0.01, 3))
def test_chi2_threshold_increasing_in_each_argument(tr, fro, op, t, bump):
    base = chi2_tail_bound(tr, fro, op, t)
    assert chi2_tail_bound(tr + bump, fro, op, t) > base
    assert chi2_tail_bound(tr, fro + bump, op, t) > base
    assert chi2_tail_bound(tr, fro, op + bump, t) >= base
    grown = chi2_tail_bound(tr, fro, op, t + bump)
    assert grown > base if fro + op > 0 else grown == base


def test_chi2_exceedance_is_below_bound():
    rng = np.random.default_rng(0)
    draws = rng.chisquare(50, 100_000)
    assert np.mean(draws >= chi2_identity_bound(50, 3.0)) <= math.exp(-3)
    assert np.mean(draws <= chi2_lower_threshold(50, 3.0)) <= math.exp(-3)


def test_general_quadratic_form_exceedance():
    rng = np.random.default_rng(1)
    eig = np.linspace(0.1, 2.0, 30)
    z = rng.standard_normal((100_000, 30))
    q = (z ** 2) @ eig
    thr = chi2_tail_bound(eig.sum(), np.linalg.norm(eig), eig.max(), 3.0)
    assert np.mean(q >= thr) <= math.exp(-3)


def test_calibrated_constants_nest_and_cache():
    a = calibrate_c_alpha(DENSE_IC, 0.05, 100, 200, replicates=200, seed=3)
    b = calibrate_c_alpha(DENSE_IC, 0.2, 100, 200, replicates=200, seed=3)
    assert a >= b > 0
    assert calibrate_c_alpha(DENSE_IC, 0.05, 100, 200, replicates=200, seed=3) == a
    with pytest.raises(ParameterError):
        calibrate_c_alpha(SPARSE_IC, 0.1, 100, 200)
    with pytest.raises(ParameterError):
        calibrate_c_alpha("Other", 0.1, 100, 200)


def test_ci_for_data(rng):
    d = Dataset(rng.standard_normal((50, 80)), rng.standard_normal(50))
    ci = ci_for_data(d, SPARSE_IC, 0.1, 1.0, k=2)
    assert ci.method == SPARSE_IC and ci.k_assumed == 2 and ci.lo <= ci.center <= ci.hi

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdeta.clime import (class_u_report, clime_from_data, default_lambda_n, empirical_covariance,
                         fit_clime, theoretical_lambda_n, split_sample, symmetrize_min_magnitude)
from hdeta.core_model import Dataset, EstimationError, GroundTruth, ParameterError
from hdeta.dense import eta_dense, eta_dense_plugin
from hdeta.simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset, sym_sqrt


def _data(n, p, seed=0):
    return Dataset(np.random.default_rng(seed).standard_normal((n, p)), np.arange(n, dtype=float))


def test_split_examples():
    first, second, r1, r2 = split_sample(_data(4, 2), "EvenOdd")
    assert r1.tolist() == [0, 2] and r2.tolist() == [1, 3]
    np.testing.assert_array_equal(first.y, [0.0, 2.0])
    first, second, _, _ = split_sample(_data(5, 2), "FirstHalf")
    assert (first.n, second.n) == (3, 2)
    with pytest.raises(ParameterError):
        split_sample(_data(1, 2))


@given(st.integers(2, 50), st.sampled_from(["EvenOdd", "FirstHalf"]))
def test_split_is_a_partition(n, policy):
    _, _, r1, r2 = split_sample(_data(n, 1), policy)
    assert sorted(np.concatenate([r1, r2]).tolist()) == list(range(n))
    assert not set(r1) & set(r2)


def test_empirical_covariance_examples(rng):
    assert not empirical_covariance(Dataset(np.zeros((3, 4)), np.zeros(3))).any()
    x = np.array([[1.0, -2.0, 3.0]])
    np.testing.assert_array_equal(empirical_covariance(Dataset(x, np.zeros(1))), np.outer(x, x))
    x = rng.standard_normal((50, 20))
    naive = np.zeros((20, 20))
    for i in range(20):
        for j in range(20):
            naive[i, j] = sum(x[r, i] * x[r, j] for r in range(50)) / 50
    np.testing.assert_allclose(empirical_covariance(Dataset(x, np.zeros(50))), naive, atol=1e-12)


def test_identity_covariance_solution():
    est = fit_clime(np.eye(3), 0.1)
    np.testing.assert_allclose(est.omega_hat, 0.9 * np.eye(3), atol=1e-12)
    est = fit_clime(np.eye(3), 1.0)
    assert not est.omega_hat.any()


def test_lambda_rules():
    assert default_lambda_n(100, 50) == pytest.approx(2 * math.sqrt(math.log(50) / 100))
    assert default_lambda_n(100, 50, m_l1=2) > default_lambda_n(100, 50)
    assert default_lambda_n(100, 500) > default_lambda_n(100, 50)
    assert default_lambda_n(10 ** 8, 50) < 1e-3
    expected = 2 * 25 * (3 + math.e ** 3 * 25) * math.sqrt(math.log(50) / 100)
    assert theoretical_lambda_n(100, 50, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)
    assert default_lambda_n(100, 50, rule="theoretical") == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ParameterError):
        default_lambda_n(100, 50, rule="other")


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 7))
def test_symmetrisation_rule(seed, p):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((p, p)).round(1)  # rounding creates magnitude ties
    out = symmetrize_min_magnitude(raw)
    assert np.array_equal(out, out.T)
    np.testing.assert_array_equal(np.abs(out), np.minimum(np.abs(raw), np.abs(raw.T)))


def test_fit_reports_diagnostics(rng):
    d = Dataset(rng.standard_normal((80, 10)), np.zeros(80))
    est = clime_from_data(d, threads=2)
    assert est.symmetric and est.feasibility_gap <= 1e-8
    s = empirical_covariance(d)
    assert np.abs(s @ est.omega_raw - np.eye(10)).max() <= est.lambda_n + 1e-8
    meta = est.metadata()
    assert meta["p"] == 10 and meta["lambda_n"] == est.lambda_n


def test_threads_do_not_change_result(rng):
    s = empirical_covariance(Dataset(rng.standard_normal((60, 12)), np.zeros(60)))
    a, b = fit_clime(s, 0.2, threads=1), fit_clime(s, 0.2, threads=3)
    assert a.omega_hat.tobytes() == b.omega_hat.tobytes()


def test_infeasible_is_an_error():
    # rank-one covariance cannot reach e_2 within a small box
    s = np.outer([1.0, 0.0], [1.0, 0.0])
    with pytest.raises(EstimationError, match="infeasible"):
        fit_clime(s, 0.1)
    with pytest.raises(ParameterError):
        fit_clime(np.eye(2), 0.0)


def test_error_decreases_with_n():
    cov = CovarianceSpec.parse("banded:1:0.3", 60)
    omega = cov.precision()
    gt = GroundTruth(np.zeros(60), 1.0, cov.covariance())
    root = sym_sqrt(gt.sigma_mat)
    med = []
    for n in (150, 300, 600):
        errs = [np.linalg.norm(clime_from_data(sample_dataset(gt, n, s, root)).omega_hat - omega, 2)
                for s in range(10)]
        med.append(np.median(errs))
    assert med[0] > med[1] > med[2]


def test_class_u_report():
    omega = CovarianceSpec.parse("banded:1:0.3", 100).precision()
    rep = class_u_report(omega, 150, m=2.0, m1=2.5)  # eigenvalues lie in [0.4, 1.6]
    assert rep["eigen_bounds"] and rep["l1_norm"]
    assert rep["max_column_nnz"] == 3
    # the column-sparsity cap sqrt(p / (n log p)) is below 3 at this size
    assert not rep["column_sparsity"]


def test_plugin_error_comparable_to_known_precision():
    # CLIME on one half, eta on the other; known-omega baseline uses the same half
    p, n = 60, 300
    cov = CovarianceSpec.parse("banded:1:0.3", p)
    gt = calibrate_beta(BetaSpec("dense", 0.5, seed=1), cov)
    root = sym_sqrt(cov.covariance())
    omega = cov.precision()
    plug, known = [], []
    for r in range(200):
        first, second, _, rows2 = split_sample(sample_dataset(gt, n, 40_000 + r, root))
        est = clime_from_data(second, sample_rows=rows2)
        plug.append(eta_dense_plugin(first, est).value - 0.5)
        known.append(eta_dense(first, omega).value - 0.5)
    assert np.sqrt(np.mean(np.square(plug))) <= 3 * np.sqrt(np.mean(np.square(known)))

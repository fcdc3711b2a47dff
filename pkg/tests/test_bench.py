import json

import numpy as np
import pytest

from hdeta.bench import (BenchConfig, Cell, fit_rate_slope, run_bench, run_clime_study, rows_to_csv,
                         CLIME_COLUMNS, write_outputs)
from hdeta.core_model import ParameterError
from hdeta.simulate import CovarianceSpec


def test_slope_exact_power_law():
    pts = [(n, 1.0 / n) for n in (10, 20, 40, 80)]
    assert fit_rate_slope(pts)["slope"] == pytest.approx(-1.0, abs=1e-12)
    assert fit_rate_slope([(n, 0.3) for n in (10, 20, 40)])["slope"] == 0.0
    fit = fit_rate_slope(pts)
    assert fit["r2"] == pytest.approx(1.0) and fit["stderr"] == pytest.approx(0.0, abs=1e-12)


def test_slope_noisy_synthetic():
    rng = np.random.default_rng(0)
    ns = [100, 200, 400, 800, 1600]
    pts = [(n, 3 * n ** -0.5 * (1 + 0.01 * rng.standard_normal())) for n in ns]
    assert -0.55 <= fit_rate_slope(pts)["slope"] <= -0.45


@pytest.mark.parametrize("pts", [[(10, 1.0), (20, 0.5)], [(10, 1.0), (20, 0.0), (40, 0.1)],
                                 [(10, 1.0), (20, -1.0), (40, 0.1)]])
def test_slope_errors(pts):
    with pytest.raises(ParameterError):
        fit_rate_slope(pts)


def test_config_validation():
    with pytest.raises(ParameterError):
        BenchConfig.from_dict({"cells": []})
    with pytest.raises(ParameterError):
        Cell(n=1, p=5, eta=0.5, estimators=["dense"])
    with pytest.raises(ParameterError):
        Cell(n=10, p=5, eta=0.5, estimators=["dense"], replicates=1)
    with pytest.raises(ParameterError):
        Cell(n=10, p=5, eta=0.5, estimators=["magic"])
    with pytest.raises(ParameterError):
        BenchConfig.from_dict({"cells": [{"n": 10, "p": 5, "eta": 0.5, "estimators": [], "x": 1}]})


def _small_config():
    return BenchConfig.from_dict({"base_seed": 4, "cells": [
        {"n": 40, "p": 60, "eta": 0.5, "k": 2, "replicates": 12, "group": "g",
         "estimators": ["oracle", "dense", "dense_trunc", "sl", "adaptive", "dense_ks", "gl_ks"],
         "c0": 2.0},
        {"n": 80, "p": 60, "eta": 0.5, "k": 2, "replicates": 12, "group": "g",
         "estimators": ["oracle", "dense", "sl"]},
        {"n": 160, "p": 60, "eta": 0.5, "k": 2, "replicates": 12, "group": "g",
         "estimators": ["oracle", "dense", "sl"]},
        {"n": 60, "p": 20, "eta": 0.3, "beta": "dense", "cov": "banded:1:0.3", "replicates": 4,
         "estimators": ["dense", "dense_plugin", "adaptive_clime"], "c0": 1.0},
    ]})


def test_oracle_has_zero_risk_and_invariants():
    res = run_bench(_small_config())
    assert res.row(0, "oracle")["mean_sq_error"] == 0.0
    for r in res.rows:
        assert r["failures"] == 0 and r["valid"]
        assert r["mean_sq_error"] >= r["bias"] ** 2 - 1e-15
    slopes = {(s["group"], s["estimator"]): s for s in res.slopes}
    assert "slope" in slopes[("g", "dense")]
    assert "error" in slopes[("g", "oracle")]  # zero rmse cannot be fitted


def test_estimators_share_replicates():
    res = run_bench(_small_config())
    # gl_ks and adaptive reuse the same square-root Lasso fit as sl on identical data
    assert res.row(0, "adaptive")["sparse_fraction"] >= 0.0
    again = run_bench(BenchConfig.from_dict({"base_seed": 4, "cells": [
        {"n": 40, "p": 60, "eta": 0.5, "k": 2, "replicates": 12, "estimators": ["sl"]}]}))
    assert again.row(0, "sl")["mean_sq_error"] == res.row(0, "sl")["mean_sq_error"]


def test_thread_count_does_not_change_output(tmp_path):
    a = run_bench(_small_config(), threads=1).to_csv()
    b = run_bench(_small_config(), threads=3).to_csv()
    assert a == b


def test_failures_are_counted_not_fatal():
    cfg = BenchConfig.from_dict({"cells": [
        {"n": 6, "p": 30, "eta": 0.5, "replicates": 4, "estimators": ["dense", "dense_plugin"],
         "cov": "banded:1:0.3"}]})
    res = run_bench(cfg, keep_errors=True)
    row = res.row(0, "dense_plugin")
    assert row["failures"] == 4 and not row["valid"]
    assert res.row(0, "dense")["valid"]
    assert len(res.errors[(0, "dense_plugin")]) == 4


def test_outputs_written(tmp_path):
    res = run_bench(_small_config())
    csv_path, json_path = write_outputs(res, tmp_path / "out")
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 1 + len(res.rows)
    summary = json.loads(json_path.read_text())
    assert {"cells", "slopes", "mean_runtime"} <= set(summary)


def test_clime_study_rows():
    rows = run_clime_study(CovarianceSpec.parse("banded:1:0.3", 10), (30, 60), 3, base_seed=2)
    assert len(rows) == 6
    assert all(r["symmetric"] and r["feasibility_gap"] <= 1e-8 for r in rows)
    assert rows_to_csv(rows, CLIME_COLUMNS).count("\n") == 7

"""Estimation of the proportion of explained variance in high-dimensional regression."""

from .adaptive import AdaptiveConfig, AdaptiveDecision, calibrate_c0, eta_adaptive, eta_adaptive_clime
from .bench import BenchConfig, BenchResult, fit_rate_slope, run_bench
from .clime import PrecisionEstimate, clime_from_data, fit_clime, split_sample
from .confidence import ConfidenceInterval, calibrate_c_alpha, ci_dense, ci_sparse
from .core_model import (DataError, Dataset, EstimationError, EtaEstimate, GroundTruth, HdetaError,
                         Method, ParameterError, signal_strength, true_eta)
from .dense import eta_dense, eta_dense_plugin, eta_dense_truncated, t_statistic
from .known_sigma import eta_dense_known_sigma, eta_gauss_lasso
from .simulate import BetaSpec, CovarianceSpec, calibrate_beta, sample_dataset
from .sqrt_lasso import SqrtLassoFit, eta_sqrt_lasso, fit_sqrt_lasso, sqrt_lasso_eta

__all__ = [
    "AdaptiveConfig", "AdaptiveDecision", "BenchConfig", "BenchResult", "BetaSpec",
    "ConfidenceInterval", "CovarianceSpec", "DataError", "Dataset", "EstimationError",
    "EtaEstimate", "GroundTruth", "HdetaError", "Method", "ParameterError", "PrecisionEstimate",
    "SqrtLassoFit", "calibrate_beta", "calibrate_c0", "calibrate_c_alpha", "ci_dense", "ci_sparse",
    "clime_from_data", "eta_adaptive", "eta_adaptive_clime", "eta_dense", "eta_dense_known_sigma",
    "eta_dense_plugin", "eta_dense_truncated", "eta_gauss_lasso", "eta_sqrt_lasso", "fit_clime",
    "fit_rate_slope", "fit_sqrt_lasso", "run_bench", "sample_dataset", "signal_strength",
    "split_sample", "sqrt_lasso_eta", "t_statistic", "true_eta",
]

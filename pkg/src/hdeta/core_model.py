"""Data model: observed datasets, generating parameters and estimate records.

The regression model is ``y = X beta + eps`` with rows of ``X`` drawn i.i.d.
from ``N(0, Sigma)`` and ``eps ~ N(0, sigma^2 I_n)``.  The target of every
estimator in this package is the proportion of explained variance

    eta = theta / (1 + theta),   theta = beta' Sigma beta / sigma^2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class HdetaError(Exception):
    """Base class for all package errors."""


class ParameterError(HdetaError, ValueError):
    """Invalid parameter or input shape."""


class EstimationError(HdetaError, RuntimeError):
    """An estimator could not produce a value (singular matrix, infeasible LP...)."""


class DataError(HdetaError, ValueError):
    """Malformed data file."""


class Method(str, enum.Enum):
    DenseKnownOmega = "DenseKnownOmega"
    DensePlugIn = "DensePlugIn"
    SqrtLasso = "SqrtLasso"
    Adaptive = "Adaptive"
    AdaptiveClime = "AdaptiveClime"
    KnownSigmaDense = "KnownSigmaDense"
    GaussLassoKnownSigma = "GaussLassoKnownSigma"


def truncate_unit(value: float) -> float:
    """Clip ``value`` to ``[0, 1]``."""
    return min(1.0, max(0.0, float(value)))


@dataclass(frozen=True)
class Dataset:
    """Observed design ``x`` (n x p) and response ``y`` (n,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise ParameterError(f"x must be a matrix, got ndim={x.ndim}")
        n, p = x.shape
        if n < 1 or p < 1:
            raise ParameterError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ParameterError(f"y has length {y.shape[0]} but x has {n} rows")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ParameterError("dataset contains non-finite entries")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.x[rows], self.y[rows])


@dataclass(frozen=True)
class GroundTruth:
    """Generating parameters of a simulated regression problem."""

    beta: np.ndarray
    sigma: float
    sigma_mat: np.ndarray
    sparsity: int = field(default=-1)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        sigma_mat = np.atleast_2d(np.asarray(self.sigma_mat, dtype=float))
        p = beta.shape[0]
        if sigma_mat.shape != (p, p):
            raise ParameterError(
                f"sigma_mat has shape {sigma_mat.shape}, expected {(p, p)}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not np.allclose(sigma_mat, sigma_mat.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma_mat).max())):
            raise ParameterError("sigma_mat is not symmetric")
        if np.linalg.eigvalsh(sigma_mat)[0] <= 0:
            raise ParameterError("sigma_mat is not positive definite")
        k = int(np.count_nonzero(beta))
        if self.sparsity not in (-1, k):
            raise ParameterError(f"sparsity={self.sparsity} but beta has {k} nonzeros")
        beta.setflags(write=False)
        sigma_mat.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma_mat", sigma_mat)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "sparsity", k)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta": self.beta.tolist(),
            "sigma": self.sigma,
            "sigma_mat": self.sigma_mat.tolist(),
            "sparsity": self.sparsity,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GroundTruth":
        try:
            return cls(np.asarray(d["beta"]), float(d["sigma"]),
                       np.asarray(d["sigma_mat"]), int(d.get("sparsity", -1)))
        except KeyError as exc:
            raise DataError(f"ground truth JSON is missing key {exc}") from None


@dataclass
class EtaEstimate:
    """Point estimate of eta with its truncation to [0, 1]."""

    value: float
    method: Method
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def truncated(self) -> float:
        return truncate_unit(self.value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method.value,
            "value": self.value,
            "truncated": self.truncated,
            "diagnostics": _jsonable(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EtaEstimate":
        return cls(float(d["value"]), Method(d["method"]), dict(d.get("diagnostics", {})))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def signal_strength(gt: GroundTruth) -> float:
    """Signal-to-noise ratio ``theta = beta' Sigma beta / sigma^2``."""
    return float(gt.beta @ gt.sigma_mat @ gt.beta) / gt.sigma ** 2


def true_eta(gt: GroundTruth) -> float:
    """Proportion of explained variance of the generating model."""
    signal = float(gt.beta @ gt.sigma_mat @ gt.beta)
    return signal / (signal + gt.sigma ** 2)

"""Synthetic data from the random-design Gaussian linear model.

Every draw uses a Philox counter-based generator keyed by a 64-bit seed, so
replicate ``r`` of a Monte Carlo run can use ``base_seed + r`` independently
of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core_model import Dataset, GroundTruth, ParameterError


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def sym_sqrt(mat: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Symmetric square root (or inverse square root) via eigendecomposition."""
    mat = np.asarray(mat, dtype=float)
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"eigendecomposition failed: {exc}") from None
    if vals[0] < 0:
        if vals[0] < -1e-10 * max(1.0, vals[-1]):
            raise ParameterError(f"matrix is not positive semidefinite (min eigenvalue {vals[0]:.3g})")
        vals = np.clip(vals, 0.0, None)
    if inverse:
        if vals[0] <= 0:
            raise ParameterError("matrix is singular, no inverse square root")
        root = 1.0 / np.sqrt(vals)
    else:
        root = np.sqrt(vals)
    out = (vecs * root) @ vecs.T
    return (out + out.T) / 2


def _is_identity(mat: np.ndarray) -> bool:
    return mat.shape[0] == mat.shape[1] and np.array_equal(mat, np.eye(mat.shape[0]))


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance family of the design rows.

    ``kind`` is one of ``identity``, ``ar1`` (``rho``), ``banded`` (banded
    precision with ``bandwidth`` and ``offdiag``) or ``explicit`` (``matrix``).
    """

    kind: str
    dim: int
    rho: float = 0.0
    bandwidth: int = 0
    offdiag: float = 0.0
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.kind == "ar1" and not -1 < self.rho < 1:
            raise ParameterError(f"ar1 needs rho in (-1, 1), got {self.rho}")
        if self.kind == "banded" and self.bandwidth < 0:
            raise ParameterError("bandwidth must be >= 0")
        if self.kind not in ("identity", "ar1", "banded", "explicit"):
            raise ParameterError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "explicit":
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.dim, self.dim):
                raise ParameterError(f"explicit matrix shape {m.shape} != ({self.dim}, {self.dim})")

    @classmethod
    def parse(cls, text: str, dim: int) -> "CovarianceSpec":
        """Parse ``identity``, ``ar1:RHO`` or ``banded:B:V``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "identity" and len(parts) == 1:
                return cls("identity", dim)
            if parts[0] == "ar1" and len(parts) == 2:
                return cls("ar1", dim, rho=float(parts[1]))
            if parts[0] == "banded" and len(parts) == 3:
                return cls("banded", dim, bandwidth=int(parts[1]), offdiag=float(parts[2]))
        except ValueError:
            pass
        raise ParameterError(f"cannot parse covariance spec {text!r}")

    def label(self) -> str:
        if self.kind == "ar1":
            return f"ar1:{self.rho:g}"
        if self.kind == "banded":
            return f"banded:{self.bandwidth}:{self.offdiag:g}"
        return self.kind

    def precision(self) -> np.ndarray:
        p = self.dim
        if self.kind == "identity":
            return np.eye(p)
        if self.kind == "banded":
            idx = np.arange(p)
            dist = np.abs(idx[:, None] - idx[None, :])
            omega = np.where(dist == 0, 1.0, np.where(dist <= self.bandwidth, self.offdiag, 0.0))
            if np.linalg.eigvalsh(omega)[0] <= 0:
                raise ParameterError(
                    f"banded precision (b={self.bandwidth}, v={self.offdiag}) is not positive definite")
            return omega
        if self.kind == "ar1":
            r = self.rho
            omega = np.zeros((p, p))
            main = np.full(p, 1 + r * r)
            if p > 1:
                main[0] = main[-1] = 1.0
            else:
                main[0] = 1 - r * r
            omega[np.diag_indices(p)] = main
            i = np.arange(p - 1)
            omega[i, i + 1] = omega[i + 1, i] = -r
            return omega / (1 - r * r)
        return np.linalg.inv(self.covariance())

    def covariance(self) -> np.ndarray:
        p = self.dim
        if self.kind == "identity":
            return np.eye(p)
        if self.kind == "ar1":
            idx = np.arange(p)
            return self.rho ** np.abs(idx[:, None] - idx[None, :])
        if self.kind == "banded":
            sigma = np.linalg.inv(self.precision())
            return (sigma + sigma.T) / 2
        return np.asarray(self.matrix, dtype=float)


@dataclass(frozen=True)
class BetaSpec:
    """Regression vector family.

    ``kind``: ``sparse`` (``k`` equal-magnitude entries with random signs on a
    random support), ``dense`` (i.i.d. Gaussian entries) or ``explicit``.
    ``target_eta`` fixes the magnitude; ``None`` keeps an explicit vector as is.
    """

    kind: str
    target_eta: Optional[float] = 0.5
    k: int = 1
    vector: Optional[np.ndarray] = None
    seed: int = 0


def calibrate_beta(spec: BetaSpec, cov: CovarianceSpec, sigma: float = 1.0) -> GroundTruth:
    """Scale a unit pattern so that the model's eta equals ``spec.target_eta``."""
    p = cov.dim
    sigma_mat = cov.covariance()
    eta = spec.target_eta
    if eta is not None and not 0 <= eta < 1:
        raise ParameterError(f"target_eta must lie in [0, 1), got {eta}")
    rng = make_rng(spec.seed)
    if spec.kind == "sparse":
        if not 0 <= spec.k <= p:
            raise ParameterError(f"k must be in [0, {p}], got {spec.k}")
        pattern = np.zeros(p)
        support = np.sort(rng.permutation(p)[:spec.k])
        pattern[support] = rng.choice([-1.0, 1.0], size=spec.k)
    elif spec.kind == "dense":
        pattern = rng.standard_normal(p)
    elif spec.kind == "explicit":
        pattern = np.asarray(spec.vector, dtype=float).reshape(-1)
        if pattern.shape[0] != p:
            raise ParameterError(f"beta has length {pattern.shape[0]}, covariance has dim {p}")
    else:
        raise ParameterError(f"unknown beta kind {spec.kind!r}")

    if eta is None:
        return GroundTruth(pattern, sigma, sigma_mat)
    if eta == 0:
        return GroundTruth(np.zeros(p), sigma, sigma_mat)
    energy = float(pattern @ sigma_mat @ pattern)
    if energy <= 0:
        raise ParameterError("beta pattern is zero; cannot reach a positive eta")
    beta = pattern * np.sqrt(sigma ** 2 * eta / (1 - eta) / energy)
    return GroundTruth(beta, sigma, sigma_mat)


def sample_dataset(gt: GroundTruth, n: int, rng_seed: int,
                   sigma_sqrt: Optional[np.ndarray] = None) -> Dataset:
    """Draw ``n`` observations: ``X = Z Sigma^{1/2}``, ``y = X beta + eps``.

    ``sigma_sqrt`` may be passed to skip the eigendecomposition when the same
    ground truth is sampled many times.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(rng_seed)
    z = rng.standard_normal((n, gt.p))
    eps = gt.sigma * rng.standard_normal(n)
    if sigma_sqrt is None and not _is_identity(gt.sigma_mat):
        sigma_sqrt = sym_sqrt(gt.sigma_mat)
    x = z if sigma_sqrt is None else z @ sigma_sqrt
    return Dataset(x, x @ gt.beta + eps)


def standard_normals(n: int, p: int, rng_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``(Z, eps / sigma)`` draws that :func:`sample_dataset` uses for a seed."""
    rng = make_rng(rng_seed)
    z = rng.standard_normal((n, p))
    return z, rng.standard_normal(n)

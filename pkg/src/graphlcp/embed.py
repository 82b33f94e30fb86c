"""PCA projection and Gaussian similarity kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParameterError

EIGH_MAX_DIM = 512
SCALE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (d, c), orthonormal columns
    eigenvalues: np.ndarray  # (c,), descending

    @property
    def dim(self) -> int:
        return int(self.components.shape[1])

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PcaModel":
        return cls(
            np.asarray(data["mean"], dtype=np.float64),
            np.asarray(data["components"], dtype=np.float64).reshape(len(data["mean"]), -1),
            np.asarray(data["eigenvalues"], dtype=np.float64),
        )


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def fit_pca(x, c: int, method: str = "auto") -> PcaModel:
    """Top-``c`` principal components of ``x`` (rows are samples).

    Covariance is ``Xc^T Xc / n`` on the centred data. ``method`` is
    ``"eigh"`` (covariance eigendecomposition), ``"svd"`` (thin SVD of the
    centred matrix) or ``"auto"`` (eigh up to 512 features).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InputError("embeddings must be a 2-D array")
    n, d = x.shape
    if n < 2:
        raise ParameterError("PCA needs at least 2 rows")
    if not 1 <= c <= min(n - 1, d):
        raise ParameterError(f"c={c} outside [1, {min(n - 1, d)}]")
    if not np.all(np.isfinite(x)):
        raise InputError("embeddings contain non-finite values")
    mean = x.mean(axis=0)
    xc = x - mean
    if method == "auto":
        method = "eigh" if d <= EIGH_MAX_DIM else "svd"
    if method == "eigh":
        cov = xc.T @ xc / n
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1][:c]
        vals, vecs = vals[order], vecs[:, order]
    elif method == "svd":
        _, s, vt = np.linalg.svd(xc, full_matrices=False)
        vals, vecs = (s[:c] ** 2) / n, vt[:c].T
    else:
        raise ParameterError(f"unknown PCA method {method!r}")
    vals = np.where(vals < 0, 0.0, vals)
    return PcaModel(mean, _fix_signs(vecs), vals)


def project(model: PcaModel, x) -> np.ndarray:
    """``components^T (x - mean)`` for a vector or for each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise InputError(f"expected {model.mean.shape[0]} features, got {x.shape[-1]}")
    return (x - model.mean) @ model.components


@dataclass(frozen=True, eq=False)
class AnisotropicKernel:
    """``exp(-0.5 * sum_k (z_k - z'_k)^2 / scale_k)`` with ``scale = h^2 * eigenvalues``."""

    h: float
    scale: np.ndarray

    @classmethod
    def from_pca(cls, model: PcaModel, h: float) -> "AnisotropicKernel":
        if h <= 0:
            raise ParameterError("bandwidth h must be positive")
        scale = h * h * np.asarray(model.eigenvalues, dtype=np.float64)
        top = scale.max(initial=0.0)
        if top <= 0.0:
            # all calibration points coincide; distances are identically zero
            scale = np.ones_like(scale)
        else:
            scale = np.maximum(scale, SCALE_FLOOR * top)
        return cls(float(h), scale)

    def sq_distance(self, z, z2) -> np.ndarray:
        diff = np.asarray(z, dtype=np.float64) - np.asarray(z2, dtype=np.float64)
        return np.sum(diff * diff / self.scale, axis=-1)

    def whiten(self, z) -> np.ndarray:
        """Rescale so the kernel becomes ``exp(-0.5 * ||a - b||^2)``."""
        return np.asarray(z, dtype=np.float64) / np.sqrt(self.scale)


def kernel_value(kernel: AnisotropicKernel, z, z2) -> float:
    return float(np.exp(-0.5 * kernel.sq_distance(z, z2)))


def isotropic_log_kernel(h: float, x, x2) -> np.ndarray:
    """Log of the normalized isotropic Gaussian density with bandwidth ``h``."""
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    d = x.shape[-1]
    diff = x - x2
    return -np.sum(diff * diff, axis=-1) / (2.0 * h * h) - 0.5 * d * np.log(2.0 * np.pi * h * h)


def isotropic_kernel_value(h: float, x, x2) -> float:
    if h <= 0:
        raise ParameterError("bandwidth h must be positive")
    return float(np.exp(isotropic_log_kernel(h, x, x2)))

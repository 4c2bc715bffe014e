"""Covariance kernels and Gram-matrix construction.

Distances are taken in raw coordinate units (degrees of longitude/latitude,
degrees of joint angle, percent of gradient); no geodesic correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

FAMILIES = ("gaussian", "exponential", "anisotropic_gaussian")

# Jitter policy: escalate geometrically from 1e-8*variance until the
# Cholesky factorization succeeds, capped at 1e-2*variance.
JITTER_START = 1e-8
JITTER_FACTOR = 10.0
JITTER_CAP = 1e-2


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its positive parameters.

    The anisotropic family treats the last coordinate of each input
    location as a surface gradient with its own lengthscale and the
    remaining coordinates as joint angles sharing ``lengthscale``.
    """

    family: str
    variance: float
    lengthscale: float
    gradient_lengthscale: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise ValueError("variance must be positive and finite")
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise ValueError("lengthscale must be positive and finite")
        if self.family == "anisotropic_gaussian":
            g = self.gradient_lengthscale
            if g is None or not (np.isfinite(g) and g > 0):
                raise ValueError(
                    "anisotropic_gaussian requires a positive gradient_lengthscale"
                )


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric positive-definite kernel matrix with its jitter on record.

    ``matrix`` already includes ``jitter`` on the diagonal and
    ``chol_lower`` is its lower Cholesky factor.
    """

    matrix: np.ndarray
    jitter: float
    chol_lower: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix k(x_i, y_j) without jitter."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch between location sets")
    if spec.family == "gaussian":
        d2 = _sq_dists(X, Y)
        return spec.variance * np.exp(-d2 / (2.0 * spec.lengthscale**2))
    if spec.family == "exponential":
        d = np.sqrt(_sq_dists(X, Y))
        return spec.variance * np.exp(-d / spec.lengthscale)
    # anisotropic_gaussian: squared-exponential on joint angles plus a
    # separate squared-exponential factor on the surface gradient.
    if X.shape[1] < 2:
        raise ValueError("anisotropic_gaussian needs >= 2 coordinates")
    da2 = _sq_dists(X[:, :-1], Y[:, :-1])
    ds2 = (X[:, -1][:, None] - Y[:, -1][None, :]) ** 2
    return spec.variance * np.exp(
        -da2 / (2.0 * spec.lengthscale**2)
        - ds2 / (2.0 * spec.gradient_lengthscale**2)
    )


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of input locations."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    return float(kernel_matrix(spec, x[None, :], y[None, :])[0, 0])


def build_gram(spec: KernelSpec, locations) -> GramMatrix:
    """Assemble the kernel matrix over ``locations`` with escalating jitter."""
    X = np.asarray(locations, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise ValueError("need at least one location")
    if not np.all(np.isfinite(X)):
        raise ValueError("locations must be finite")
    K0 = kernel_matrix(spec, X, X)
    K0 = 0.5 * (K0 + K0.T)
    eye = np.eye(X.shape[0])
    jitter = JITTER_START * spec.variance
    cap = JITTER_CAP * spec.variance
    while True:
        try:
            L = np.linalg.cholesky(K0 + jitter * eye)
            return GramMatrix(K0 + jitter * eye, jitter, L)
        except np.linalg.LinAlgError:
            if jitter >= cap:
                raise NumericalError("kernel matrix numerically singular") from None
            jitter = min(jitter * JITTER_FACTOR, cap)

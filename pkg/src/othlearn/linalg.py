"""Dense symmetric linear algebra used by the estimators.

Everything goes through one Cholesky factorization type so covariance
inverses, log-determinants, and reweighted least-squares steps share the
same numerics. Matrices are small (n is the feature count), so dense
row-major storage is all we need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import OthlearnError


class NotPositiveDefinite(OthlearnError):
    """Factorization failed; the underlying features are degenerate."""


class DimensionMismatch(OthlearnError):
    pass


@dataclass(frozen=True)
class SpdFactorization:
    """Lower-triangular L with A + ridge*I = L @ L.T."""

    lower: np.ndarray
    ridge: float = 0.0

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def spd_factor(a: np.ndarray, ridge: float = 0.0) -> SpdFactorization:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    try:
        lower = np.linalg.cholesky(a + ridge * np.eye(a.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return SpdFactorization(lower=lower, ridge=ridge)


def spd_factor_auto(a: np.ndarray) -> SpdFactorization:
    """Factor with a ridge ladder: none, then 1e-8*tr/n, then 1e-4*tr/n."""
    a = np.asarray(a, dtype=np.float64)
    scale = np.trace(a) / max(a.shape[0], 1)
    last: Exception | None = None
    for ridge in (0.0, 1e-8 * scale, 1e-4 * scale):
        try:
            return spd_factor(a, ridge=ridge)
        except NotPositiveDefinite as exc:
            last = exc
    raise NotPositiveDefinite(
        f"matrix stayed indefinite after ridge up to {1e-4 * scale:g}"
    ) from last


def solve(f: SpdFactorization, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != f.dim:
        raise DimensionMismatch(f"factor dim {f.dim}, rhs length {b.shape[0]}")
    return scipy.linalg.cho_solve((f.lower, True), b)


def inverse(f: SpdFactorization) -> np.ndarray:
    return scipy.linalg.cho_solve((f.lower, True), np.eye(f.dim))


def log_det(f: SpdFactorization) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def weighted_normal_solve(
    x: np.ndarray, weights: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """Solve the weighted normal equations (X'WX) b = X'Wz.

    This is one reweighted least-squares step; `weights` is the diagonal
    of W and must be non-negative.
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("design matrix must be 2-D")
    if weights.shape != (x.shape[0],) or z.shape != (x.shape[0],):
        raise DimensionMismatch(
            f"design has {x.shape[0]} rows, weights {weights.shape}, z {z.shape}"
        )
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    xw = x * weights[:, None]
    f = spd_factor(x.T @ xw)
    return solve(f, xw.T @ z)

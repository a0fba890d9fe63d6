"""Marginal-regression screening: raw design and response to correlated z-statistics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, DegenerateColumn, DimensionMismatch


@dataclass(frozen=True, eq=False)
class ZStatistics:
    """Test statistics with optional simulation-only ground truth.

    ``latent`` holds the standard normal draw used to synthesize ``z`` when it
    came from the simulator; its first ``k`` entries are the realized factors.
    """

    z: np.ndarray
    null_mask: Optional[np.ndarray] = None
    latent: Optional[np.ndarray] = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1:
            raise DimensionMismatch("z must be one-dimensional")
        if not np.all(np.isfinite(z)):
            raise DataError("z-statistics must be finite")
        object.__setattr__(self, "z", z)
        if self.null_mask is not None:
            mask = np.asarray(self.null_mask, dtype=bool)
            if mask.shape != z.shape:
                raise DimensionMismatch("null_mask must match z")
            object.__setattr__(self, "null_mask", mask)

    def __len__(self):
        return self.z.shape[0]


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray
    Y: np.ndarray
    sigma: float

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def column_sd(X):
    """Sample standard deviation of each column with divisor n."""
    X = np.asarray(X, dtype=float)
    centered = X - X.mean(axis=0)
    return np.sqrt(np.mean(centered ** 2, axis=0))


def marginal_z(design):
    """z-statistics of the p simple regressions of Y on each column of X.

    Each regression includes an intercept. With ``s_j`` the divisor-n sample
    standard deviation of column j, ``z_j = sqrt(n) * s_j * slope_j / sigma``.
    The second return value is the sample correlation matrix of the columns,
    which is the exact covariance of ``z`` conditional on X.
    """
    X = np.asarray(design.X, dtype=float)
    Y = np.asarray(design.Y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-d matrix")
    n, p = X.shape
    if Y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but Y has {Y.shape[0]} entries")
    if n < 3:
        raise DataError(f"need at least 3 samples, got {n}")
    if not design.sigma > 0:
        raise DataError("noise standard deviation must be positive")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("X and Y must be finite")

    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean()
    s = np.sqrt(np.mean(Xc ** 2, axis=0))
    scale = np.maximum(np.max(np.abs(X), axis=0), np.finfo(float).tiny)
    bad = np.flatnonzero(s <= 1e-12 * scale)
    if bad.size:
        raise DegenerateColumn(f"column(s) {bad.tolist()} have zero variance")

    slope = (Xc.T @ Yc) / (n * s ** 2)
    z = np.sqrt(n) * s * slope / design.sigma

    U = Xc / (np.sqrt(n) * s)
    corr = U.T @ U
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return ZStatistics(z), corr

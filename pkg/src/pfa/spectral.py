"""Spectral decomposition of a known correlation matrix into principal factors.

A correlation matrix ``Sigma`` is split as ``L L^T + A`` where ``L`` holds the
top ``k`` scaled eigenvectors (the loadings) and ``A`` is the weakly
dependent remainder built from the tail of the spectrum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    IndefiniteBeyondTolerance,
    InvalidEpsilon,
    NotSymmetric,
    NotUnitDiagonal,
    UsageError,
)

SYMMETRY_TOL = 1e-10
DIAGONAL_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-8  # multiplied by p
STANDARDIZER_FLOOR = 1e-8
DEFAULT_EPSILON = 0.01


def validate_correlation(sigma):
    """Return ``sigma`` as a float array after checking the correlation invariants."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise NotSymmetric("matrix has non-finite entries")
    asym = np.max(np.abs(sigma - sigma.T))
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"max |S - S^T| = {asym:.3g} exceeds {SYMMETRY_TOL}")
    diag_err = np.max(np.abs(np.diag(sigma) - 1.0))
    if diag_err > DIAGONAL_TOL:
        raise NotUnitDiagonal(f"max |diag - 1| = {diag_err:.3g} exceeds {DIAGONAL_TOL}")
    return sigma


def _fix_signs(vectors):
    # largest-magnitude entry positive; argmax returns the lowest index on ties
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigendecompose(sigma):
    """Full eigendecomposition of a correlation matrix.

    Parameters
    ----------
    sigma : (p, p) array_like
        Symmetric, unit-diagonal, positive semidefinite matrix.

    Returns
    -------
    eigenvalues : (p,) ndarray
        Sorted in decreasing order; values in ``[-1e-8 p, 0)`` are set to 0.
    eigenvectors : (p, p) ndarray
        Orthonormal columns, each with its largest-magnitude entry positive.
    """
    sigma = validate_correlation(sigma)
    p = sigma.shape[0]
    values, vectors = np.linalg.eigh(sigma)
    # descending; a stable sort keeps LAPACK's order within tied eigenvalues
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = np.ascontiguousarray(vectors[:, order])
    if values[-1] < -NEGATIVE_EIG_TOL * p:
        raise IndefiniteBeyondTolerance(
            f"smallest eigenvalue {values[-1]:.3g} is below -{NEGATIVE_EIG_TOL:g}*p"
        )
    values[values < 0] = 0.0
    return values, _fix_signs(vectors)


def tail_ratios(eigenvalues):
    """``sqrt(sum_{i>k} lambda_i^2) / sum_i lambda_i`` for every k in 0..p."""
    lam = np.asarray(eigenvalues, dtype=float)
    tail_sq = np.concatenate([np.cumsum((lam ** 2)[::-1])[::-1], [0.0]])
    return np.sqrt(tail_sq) / lam.sum()


def select_num_factors(eigenvalues, epsilon=DEFAULT_EPSILON):
    """Smallest number of factors whose discarded tail has relative size below ``epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0 or lam.sum() <= 0:
        raise UsageError("eigenvalues must not be all zero")
    ratios = tail_ratios(lam)
    return int(np.flatnonzero(ratios < epsilon)[0])


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Principal factor model of a correlation matrix.

    ``loadings[:, h] = sqrt(eigenvalues[h]) * eigenvectors[:, h]`` for the
    first ``k`` factors and ``standardizers[i] = (1 - ||b_i||^2)^(-1/2)``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    k: int
    loadings: np.ndarray
    standardizers: np.ndarray

    @property
    def p(self):
        return self.eigenvalues.shape[0]

    @property
    def communalities(self):
        """Row sums of squared loadings, ``sum_h b_ih^2``."""
        return np.einsum("ij,ij->i", self.loadings, self.loadings)

    def eta(self, w):
        """Common-factor component ``B w`` of every test statistic."""
        w = np.asarray(w, dtype=float)
        if self.k == 0:
            return np.zeros(self.p)
        return self.loadings @ w

    def residual_matrix(self):
        """The weakly dependent remainder ``A = sum_{i>k} lambda_i gamma_i gamma_i^T``."""
        vecs = self.eigenvectors[:, self.k:]
        return (vecs * self.eigenvalues[self.k:]) @ vecs.T

    def with_k(self, k):
        """Same spectrum, different number of kept factors."""
        return _assemble(self.eigenvalues, self.eigenvectors, k)


def _assemble(eigenvalues, eigenvectors, k):
    p = eigenvalues.shape[0]
    if not 0 <= k <= p:
        raise UsageError(f"number of factors must lie in [0, {p}], got {k}")
    loadings = eigenvectors[:, :k] * np.sqrt(eigenvalues[:k])
    radicand = 1.0 - np.einsum("ij,ij->i", loadings, loadings)
    standardizers = 1.0 / np.sqrt(np.maximum(radicand, STANDARDIZER_FLOOR))
    return SpectralModel(eigenvalues, eigenvectors, int(k), loadings, standardizers)


def build_factor_model(sigma, epsilon=DEFAULT_EPSILON, k=None):
    """Decompose ``sigma`` and keep ``k`` factors (chosen by ``epsilon`` unless given)."""
    eigenvalues, eigenvectors = eigendecompose(sigma)
    if k is None:
        k = select_num_factors(eigenvalues, epsilon)
    return _assemble(eigenvalues, eigenvectors, k)

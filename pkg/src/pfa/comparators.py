"""Baseline procedures: Benjamini-Hochberg, Storey, and Efron's dispersion estimator."""

import math

import numpy as np

from .errors import DomainError
from .fdp import count_rejections, normal_pdf, normal_quantile

STOREY_LAMBDA = 0.5


def bh_rejections(P, alpha):
    """Indices rejected by the Benjamini-Hochberg step-up procedure at level ``alpha``.

    Hypotheses are ordered by p-value with ties broken by index, and the
    ``k`` smallest are rejected for ``k = max{i : p_(i) <= i alpha / p}``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    P = np.asarray(P, dtype=float)
    p = P.shape[0]
    order = np.argsort(P, kind="stable")
    passed = np.flatnonzero(P[order] <= alpha * np.arange(1, p + 1) / p)
    if passed.size == 0:
        return np.zeros(0, dtype=int)
    return np.sort(order[: passed[-1] + 1])


def storey_p0(P, lam=STOREY_LAMBDA):
    """``#{P_i > lam} / (1 - lam)``, Storey's estimate of the true-null count."""
    P = np.asarray(P, dtype=float)
    return float(np.count_nonzero(P > lam) / (1.0 - lam))


def storey_fdp(P, t, p0_hat):
    """``p0_hat * t / max(R(t), 1)``."""
    return float(p0_hat) * t / max(count_rejections(P, t), 1)


def efron_A_hat(eta_hat, communalities, p0):
    """Dispersion variate matching the second-order expansion of the PFA estimator.

    ``A_hat = sum_i (eta_hat_i^2 - E eta_hat_i^2) / (sqrt(2) p0)`` over the
    supplied (null-surrogate) indices, with ``E eta_hat_i^2 = sum_h b_ih^2``.
    """
    eta_hat = np.asarray(eta_hat, dtype=float)
    communalities = np.asarray(communalities, dtype=float)
    return float(np.sum(eta_hat ** 2 - communalities) / (math.sqrt(2.0) * p0))


def efron_fdp(t, R, p0, A_hat, clamp=True):
    """Efron's conditional FDP ``p0 t [1 + 2 A (-z) phi(z) / (sqrt(2) t)] / max(R, 1)``.

    ``z = Phi^{-1}(t/2)``. The parametric form can leave [0, 1]; pass
    ``clamp=False`` for the raw value.
    """
    zt = normal_quantile(t / 2.0)
    bracket = 1.0 + 2.0 * A_hat * (-zt) * normal_pdf(zt) / (math.sqrt(2.0) * t)
    value = p0 * t * bracket / max(R, 1)
    return min(max(value, 0.0), 1.0) if clamp else value

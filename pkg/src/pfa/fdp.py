"""P-values, rejection counts and the principal-factor FDP estimator."""

from dataclasses import asdict, dataclass, field
from typing import Dict

import numpy as np
from scipy import special

from .errors import DimensionMismatch, DomainError, MissingMask

# Phi values below this are flushed to zero to keep denormals out of sums.
CDF_FLOOR = 1e-300


def normal_cdf(x):
    """Standard normal CDF, flushed to exactly 0 below 1e-300."""
    out = special.ndtr(np.asarray(x, dtype=float))
    out = np.where(out < CDF_FLOOR, 0.0, out)
    return out if out.ndim else float(out)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return out if out.ndim else float(out)


def normal_quantile(q):
    """Inverse standard normal CDF on the open interval (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0.0) & (q < 1.0))):
        raise DomainError("normal quantile needs q strictly between 0 and 1")
    out = special.ndtri(q)
    return out if out.ndim else float(out)


def _check_t(t):
    if not 0.0 < t < 1.0:
        raise DomainError(f"threshold t must lie in (0, 1), got {t}")


def pvalues(z):
    """Two-sided p-values ``2 Phi(-|z|)``."""
    z = np.asarray(getattr(z, "z", z), dtype=float)
    return 2.0 * normal_cdf(-np.abs(z))


def count_rejections(P, t):
    """``R(t)``: number of p-values at or below ``t``."""
    return int(np.count_nonzero(np.asarray(P) <= t))


def limit_sum(model, eta, t, subset=None, mu=None):
    """Sum over ``subset`` of ``Phi(a_i(z_{t/2} + eta_i + mu_i)) + Phi(a_i(z_{t/2} - eta_i - mu_i))``.

    With ``mu`` omitted this is the conditional expected number of
    rejections among the indices in ``subset`` given the factor component
    ``eta``. ``subset`` may be an index array or a boolean mask; ``None``
    means every index.
    """
    _check_t(t)
    a = model.standardizers
    shift = np.asarray(eta, dtype=float)
    if shift.shape != a.shape:
        raise DimensionMismatch(f"eta has shape {shift.shape}, model has p={a.shape[0]}")
    if mu is not None:
        shift = shift + np.asarray(mu, dtype=float)
    if subset is not None:
        a = a[subset]
        shift = shift[subset]
    zt = normal_quantile(t / 2.0)
    terms = normal_cdf(a * (zt + shift)) + normal_cdf(a * (zt - shift))
    return float(np.sum(terms))


def limit_sums(model, eta_rows, t, subset=None):
    """Row-wise :func:`limit_sum` for a (draws, p) matrix of factor components."""
    _check_t(t)
    a = model.standardizers
    eta_rows = np.asarray(eta_rows, dtype=float)
    if subset is not None:
        a = a[subset]
        eta_rows = eta_rows[:, subset]
    zt = normal_quantile(t / 2.0)
    terms = normal_cdf(a * (zt + eta_rows)) + normal_cdf(a * (zt - eta_rows))
    return terms.sum(axis=1)


@dataclass
class FdpReport:
    t: float
    R: int
    V_hat: float
    fdp_hat: float
    method: str
    k_used: int
    m_used: int
    comparators: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        """Flat mapping; comparator values become extra keys."""
        out = asdict(self)
        out.update(out.pop("comparators"))
        return out


def _ratio(v_hat, R):
    return min(v_hat, R) / R if R > 0 else 0.0


def estimate_fdp(z, model, factors, t):
    """Estimated realized FDP at threshold ``t``.

    ``V_hat`` is the limit sum over all p indices with the factor component
    ``eta_hat = B w_hat``; true nulls are unknown, so the non-nulls are
    included as a conservative surrogate.
    """
    _check_t(t)
    zvec = np.asarray(getattr(z, "z", z), dtype=float)
    if zvec.shape[0] != model.p:
        raise DimensionMismatch(f"{zvec.shape[0]} statistics for a model of dimension {model.p}")
    R = count_rejections(pvalues(zvec), t)
    if model.k == 0:
        # eta = 0 and a = 1, so each summand is exactly 2 Phi(z_{t/2}) = t
        v_hat = model.p * t
    else:
        v_hat = limit_sum(model, model.eta(factors.w_hat), t)
    return FdpReport(
        t=float(t),
        R=R,
        V_hat=float(v_hat),
        fdp_hat=float(_ratio(v_hat, R)),
        method="PFA",
        k_used=model.k,
        m_used=int(factors.m_used),
    )


def fdp_a(model, eta, t, R):
    """Uncapped ``FDP_A(t)``: the all-index limit sum over the observed ``R``."""
    return limit_sum(model, eta, t) / R if R > 0 else 0.0


def fdp_limit(model, eta, t, null_mask, mu):
    """The a.s. limit of FDP: true-null limit sum over the mean-shifted all-index sum."""
    null_mask = np.asarray(null_mask, dtype=bool)
    num = limit_sum(model, eta, t, subset=null_mask)
    den = limit_sum(model, eta, t, mu=mu)
    return num / den if den > 0 else 0.0


@dataclass(frozen=True)
class TrueCounts:
    V: int
    S: int
    R: int
    fdp: float


def true_fdp(P, null_mask, t):
    """Exact ``V, S, R`` and ``FDP = V / R`` (0 when nothing is rejected)."""
    if null_mask is None:
        raise MissingMask("true FDP needs the ground-truth null mask")
    P = np.asarray(P)
    null_mask = np.asarray(null_mask, dtype=bool)
    if null_mask.shape != P.shape:
        raise DimensionMismatch("null mask must match the p-values")
    rejected = P <= t
    V = int(np.count_nonzero(rejected & null_mask))
    R = int(np.count_nonzero(rejected))
    return TrueCounts(V, R - V, R, V / R if R else 0.0)

"""Monte-Carlo evaluation of the approximate FDR and the variance of V(t).

All quantities are expectations over the k-variate standard normal factor
vector W. One set of draws is made per call and reused for every threshold
evaluated (common random numbers), so the estimated FDR curve is monotone in
t and a bracketing root search on it is well defined.
"""

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import DomainError, TargetUnreachable, UsageError
from .fdp import normal_cdf, normal_quantile

T_LO = 1e-12
T_HI = 0.5
_CACHE_LIMIT = 25_000_000  # doubles kept for the eta matrix (~200 MB)
_CHUNK = 1000


@dataclass(frozen=True)
class McConfig:
    n_draws: int = 10_000
    seed: int = 0
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_draws < 100:
            raise UsageError(f"n_draws must be at least 100, got {self.n_draws}")
        if not self.tolerance > 0:
            raise UsageError("tolerance must be positive")


class FactorDraws:
    """Fixed draws of W for one model, reusable across thresholds.

    The scaled factor components ``a_i * b_i^T W`` are kept in memory when
    they fit (about 200 MB), otherwise recomputed in blocks of draws.
    """

    def __init__(self, model, mc):
        self.model = model
        self.mc = mc
        rng = np.random.default_rng(mc.seed)
        self.W = rng.standard_normal((mc.n_draws, model.k))
        self._scaled = None
        if model.k and mc.n_draws * model.p <= _CACHE_LIMIT:
            self._scaled = self._block(0, mc.n_draws)

    def _block(self, start, stop):
        return (self.W[start:stop] @ self.model.loadings.T) * self.model.standardizers

    def _blocks(self):
        if self._scaled is not None:
            yield self._scaled
            return
        for start in range(0, self.mc.n_draws, _CHUNK):
            yield self._block(start, start + _CHUNK)

    def sums(self, t, subset=None):
        """Limit sum at ``t`` for every draw."""
        if not 0.0 < t < 1.0:
            raise DomainError(f"threshold t must lie in (0, 1), got {t}")
        a = self.model.standardizers
        centre = a * normal_quantile(t / 2.0)
        if subset is not None:
            centre = centre[subset]
        out = []
        for block in self._blocks():
            if subset is not None:
                block = block[:, subset]
            out.append((normal_cdf(centre + block) + normal_cdf(centre - block)).sum(axis=1))
        return np.concatenate(out)


def _check(t, p1, p):
    if not 0.0 < t < 1.0:
        raise DomainError(f"threshold t must lie in (0, 1), got {t}")
    if not 0 <= p1 < p:
        raise UsageError(f"p1 must lie in [0, p), got {p1}")


def _fdr_from_sums(s, p1):
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = s / (s + p1)
    return np.where(s + p1 > 0, vals, 0.0)


def _fdr_stats(draws, model, p1, t):
    """(mean, standard error) of the approximate FDR at ``t``."""
    if model.k == 0:
        return float(_fdr_from_sums(np.array([model.p * t]), p1)[0]), 0.0
    vals = _fdr_from_sums(draws.sums(t), p1)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))


def fdr_expectation(model, p1, t, mc=McConfig()):
    """``E[s(W) / (s(W) + p1)]`` with ``s(W)`` the all-index limit sum at ``t``.

    Exact (no sampling) when the model has no factors.
    """
    _check(t, p1, model.p)
    draws = FactorDraws(model, mc) if model.k else None
    return _fdr_stats(draws, model, p1, t)[0]


@dataclass(frozen=True)
class ThresholdResult:
    t_star: float
    fdr_at_t: float
    mc_se: float
    n_draws: int
    seed: int
    clamped: Optional[str] = None  # "lower" or "upper" when alpha is out of reach

    def to_dict(self):
        return {
            "t_star": self.t_star,
            "fdr_at_t": self.fdr_at_t,
            "mc_se": self.mc_se,
            "n_draws": self.n_draws,
            "seed": self.seed,
            "clamped": self.clamped,
        }


def find_threshold(model, p1, alpha, mc=McConfig(), strict=False):
    """Solve ``fdr_expectation(t) = alpha`` for t in ``[1e-12, 0.5]``.

    The root is bracketed and located with Brent's method (bisection
    safeguarded by inverse quadratic interpolation) to ``mc.tolerance`` in t.
    Every evaluation reuses the same draws of W, so the function being
    solved is monotone and the bracket stays valid. If ``alpha`` lies outside
    the FDR range over the interval the nearer endpoint is returned with
    ``clamped`` set, or ``TargetUnreachable`` is raised when ``strict``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    _check(T_HI, p1, model.p)
    draws = FactorDraws(model, mc) if model.k else None

    @functools.lru_cache(maxsize=None)
    def fdr(t):
        return _fdr_stats(draws, model, p1, t)

    def result(t, clamped=None):
        value, se = fdr(t)
        return ThresholdResult(float(t), value, se, mc.n_draws, mc.seed, clamped)

    for end, side, unreachable in ((T_LO, "lower", lambda v: v >= alpha), (T_HI, "upper", lambda v: v <= alpha)):
        if unreachable(fdr(end)[0]):
            if strict:
                raise TargetUnreachable(f"alpha={alpha} is outside the FDR range at the {side} end")
            return result(end, side)
    t_star = optimize.brentq(lambda t: fdr(t)[0] - alpha, T_LO, T_HI, xtol=mc.tolerance, rtol=1e-12)
    return result(t_star)


@dataclass(frozen=True)
class VarianceResult:
    variance: float
    mc_se: float
    mean: float
    t: float
    n_draws: int
    seed: int

    def to_dict(self):
        return {
            "variance": self.variance,
            "mc_se": self.mc_se,
            "mean": self.mean,
            "t": self.t,
            "n_draws": self.n_draws,
            "seed": self.seed,
        }


def variance_of_v(model, subset=None, t=0.001, mc=McConfig()):
    """Sample variance over W of the limit sum restricted to ``subset``.

    ``subset=None`` (all indices) approximates the variance of the number of
    false discoveries through the all-index surrogate; passing the true-null
    indices gives the exact-null-set version.
    """
    if not 0.0 < t < 1.0:
        raise DomainError(f"threshold t must lie in (0, 1), got {t}")
    if model.k == 0:
        size = model.p if subset is None else np.arange(model.p)[subset].size
        return VarianceResult(0.0, 0.0, float(size * t), t, mc.n_draws, mc.seed)
    s = FactorDraws(model, mc).sums(t, subset)
    dev2 = (s - s.mean()) ** 2
    var = float(s.var(ddof=1))
    se = float(dev2.std(ddof=1) / np.sqrt(s.size))
    return VarianceResult(var, se, float(s.mean()), t, mc.n_draws, mc.seed)

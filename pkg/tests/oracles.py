"""Independent reference implementations used by the tests.

None of these share code with the package: the normal CDF is a Taylor
series in arbitrary precision, expectations over one Gaussian factor use
Gauss-Hermite quadrature, BH is an exhaustive cutoff search, and 1-D LAD is
a grid search.
"""

import mpmath
import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import optimize

mpmath.mp.dps = 60


def _phi_lower_cf(x, depth=4000):
    # Laplace continued fraction pdf(x) / (u + 1/(u + 2/(u + 3/(u + ...)))), u = -x > 0
    u = -x
    tail = u
    for j in range(depth, 0, -1):
        tail = u + j / tail
    return mpmath.exp(-x * x / 2) / mpmath.sqrt(2 * mpmath.pi) / tail


def phi_series(x):
    """Phi(x) = 1/2 + pdf(x) * sum_n x^(2n+1) / (2n+1)!!, summed in 60-digit arithmetic.

    Below x = -6 the Laplace continued fraction is used instead, which
    avoids cancellation in the deep lower tail.
    """
    x = mpmath.mpf(x)
    if x < -6:
        return _phi_lower_cf(x)
    term = x
    total = x
    n = 1
    while abs(term) > mpmath.mpf(10) ** -70 * max(abs(total), 1):
        term = term * x * x / (2 * n + 1)
        total += term
        n += 1
    pdf = mpmath.exp(-x * x / 2) / mpmath.sqrt(2 * mpmath.pi)
    return mpmath.mpf("0.5") + pdf * total


def phi_inv_series(q):
    """Inverse of :func:`phi_series` by Newton iteration on ``log Phi``."""
    q = mpmath.mpf(q)
    if q > mpmath.mpf("0.5"):
        return -phi_inv_series(1 - q)
    x = -mpmath.sqrt(-2 * mpmath.log(q)) if q < mpmath.mpf("0.1") else mpmath.mpf(0)
    for _ in range(200):
        cdf = phi_series(x)
        pdf = mpmath.exp(-x * x / 2) / mpmath.sqrt(2 * mpmath.pi)
        step = (mpmath.log(cdf) - mpmath.log(q)) * cdf / pdf
        x -= step
        if abs(step) < mpmath.mpf(10) ** -40 * max(1, abs(x)):
            break
    return x


def equicorrelation(p, rho):
    S = np.full((p, p), float(rho))
    np.fill_diagonal(S, 1.0)
    return S


def gh_expectation(f, n_nodes=200):
    """E f(W) for W ~ N(0, 1) by probabilists' Gauss-Hermite quadrature."""
    nodes, weights = hermegauss(n_nodes)
    weights = weights / np.sqrt(2 * np.pi)
    return float(sum(w * f(x) for x, w in zip(nodes, weights)))


def one_factor_sum(b, a, t, w):
    """All-index limit sum for a one-factor model at factor value ``w``."""
    from scipy.stats import norm

    zt = norm.ppf(t / 2)
    return float(np.sum(norm.cdf(a * (zt + b * w)) + norm.cdf(a * (zt - b * w))))


def one_factor_fdr(b, a, p1, t, n_nodes=200):
    return gh_expectation(lambda w: (lambda s: s / (s + p1))(one_factor_sum(b, a, t, w)), n_nodes)


def one_factor_threshold(b, a, p1, alpha, n_nodes=200):
    """Root of ``one_factor_fdr(t) = alpha`` found with Brent's method in log t."""
    g = lambda u: one_factor_fdr(b, a, p1, float(np.exp(u)), n_nodes) - alpha  # noqa: E731
    u = optimize.brentq(g, np.log(1e-12), np.log(0.5), xtol=1e-14, rtol=1e-14)
    return float(np.exp(u))


def one_factor_sum_moments(b, a, t, subset=None, n_nodes=200):
    """(mean, variance) of the limit sum over a single standard normal factor."""
    if subset is not None:
        b, a = b[subset], a[subset]
    m1 = gh_expectation(lambda w: one_factor_sum(b, a, t, w), n_nodes)
    m2 = gh_expectation(lambda w: one_factor_sum(b, a, t, w) ** 2, n_nodes)
    return m1, m2 - m1 * m1


def bh_exhaustive(P, alpha):
    """Largest cutoff c among the p-values with c <= alpha * #{P <= c} / p; reject all P <= c."""
    P = list(P)
    p = len(P)
    best = None
    for c in P:
        if c <= alpha * sum(1 for x in P if x <= c) / p:
            if best is None or c > best:
                best = c
    if best is None:
        return set()
    return {i for i, x in enumerate(P) if x <= best}


def lad_grid_1d(z, b, lo=-10.0, hi=10.0, step=1e-4):
    """Minimizer of sum |z - b w| over a uniform grid (ties to the smallest w)."""
    z = np.asarray(z, dtype=float)
    b = np.asarray(b, dtype=float)
    grid = np.arange(lo, hi + step / 2, step)
    obj = np.zeros_like(grid)
    for zi, bi in zip(z, b):
        obj += np.abs(zi - bi * grid)
    return float(grid[np.argmin(obj)]), float(obj.min())


def l1(z, B, w):
    return float(np.abs(np.asarray(z) - np.asarray(B) @ np.atleast_1d(w)).sum())


def lad_linprog(z, B):
    """LAD as a linear program solved by HiGHS: min 1'(u+v) s.t. B w + u - v = z."""
    z = np.asarray(z, dtype=float)
    B = np.asarray(B, dtype=float)
    m, k = B.shape
    c = np.concatenate([np.zeros(k), np.ones(2 * m)])
    A = np.hstack([B, np.eye(m), -np.eye(m)])
    bounds = [(None, None)] * k + [(0, None)] * (2 * m)
    res = optimize.linprog(c, A_eq=A, b_eq=z, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return res.x[:k], float(res.fun)

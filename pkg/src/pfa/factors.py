"""Recovery of the realized common factors from the central z-statistics.

The factors are estimated by least-absolute-deviation regression of the
``m`` smallest ``|z_i|`` on their loadings. Large signals mostly land outside
the calibration set, and the L1 loss keeps the ones that do not from
dragging the fit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonConvergence, RankDeficientLoadings, UsageError

DEFAULT_FRACTION = 0.90
IRLS_MAX_ITER = 500
IRLS_STAGE_ITER = 3  # per tau; the vertex descent finishes the job
TAU_SCHEDULE = tuple(10.0 ** -e for e in range(2, 11))
DESCENT_MAX_STEPS = 5000


@dataclass(frozen=True, eq=False)
class RealizedFactors:
    w_hat: np.ndarray
    method: str
    m_used: int
    objective: float
    iterations: int = 0

    @property
    def k(self):
        return self.w_hat.shape[0]


def select_calibration_set(z, fraction=DEFAULT_FRACTION):
    """Indices (ascending) of the ``ceil(fraction * p)`` smallest ``|z_i|``.

    Ties in ``|z_i|`` go to the lower index.
    """
    z = np.asarray(getattr(z, "z", z), dtype=float)
    p = z.shape[0]
    if p < 1:
        raise UsageError("need at least one statistic")
    if not 0.0 < fraction <= 1.0:
        raise UsageError(f"fraction must lie in (0, 1], got {fraction}")
    m = min(p, math.ceil(fraction * p - 1e-9))
    order = np.argsort(np.abs(z), kind="stable")
    return np.sort(order[:m])


def _check_design(z_sub, B_sub):
    z_sub = np.asarray(z_sub, dtype=float).ravel()
    B_sub = np.asarray(B_sub, dtype=float)
    if B_sub.ndim == 1:
        B_sub = B_sub[:, None]
    m, k = B_sub.shape
    if z_sub.shape[0] != m:
        raise DimensionMismatch(f"{z_sub.shape[0]} responses for {m} loading rows")
    if k < 1 or m < k:
        raise RankDeficientLoadings(f"need m >= k >= 1, got m={m}, k={k}")
    sv = np.linalg.svd(B_sub, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficientLoadings(
            f"loadings have numerical rank below {k} (sv ratio {sv[-1] / sv[0]:.3g})"
        )
    return z_sub, B_sub


def l1_objective(z_sub, B_sub, beta):
    return float(np.sum(np.abs(np.asarray(z_sub) - np.asarray(B_sub) @ beta)))


def _irls(z, B, beta, max_iter):
    """Majorize-minimize on sum sqrt(r^2 + tau^2) with a shrinking tau."""
    used = 0
    for tau in TAU_SCHEDULE:
        prev = np.inf
        for _ in range(IRLS_STAGE_ITER):
            if used >= max_iter:
                break
            r = z - B @ beta
            smooth = np.sqrt(r * r + tau * tau)
            obj = smooth.sum()
            if prev - obj <= 1e-12 * obj:
                break
            prev = obj
            sw = 1.0 / np.sqrt(smooth)
            beta = np.linalg.lstsq(B * sw[:, None], z * sw, rcond=None)[0]
            used += 1
    return beta, used


def _initial_basis(B, order, k):
    """Greedy pick of k linearly independent rows, preferring small residuals."""
    q = np.zeros((k, B.shape[1]))
    chosen = []
    for i in order:
        b = B[i]
        v = b - q[: len(chosen)].T @ (q[: len(chosen)] @ b)
        nv = np.linalg.norm(v)
        if nv > 1e-8 * max(np.linalg.norm(b), 1e-300):
            q[len(chosen)] = v / nv
            chosen.append(int(i))
            if len(chosen) == k:
                return np.array(chosen)
    raise RankDeficientLoadings("could not find k independent loading rows")


def _vertex_descent(z, B, beta):
    """Exact LAD optimum by edge steps between basic solutions.

    At a vertex (k zero residuals, basis Z) the point is optimal iff the
    multipliers ``u`` solving ``B_Z^T u = -sum_{i not in Z} sign(r_i) b_i`` all
    satisfy ``|u| <= 1``. Otherwise releasing the row with the largest
    ``|u_j|`` gives a descent edge, searched exactly by a weighted median.
    """
    m, k = B.shape
    scale = max(1.0, float(np.max(np.abs(z))))
    basis = _initial_basis(B, np.argsort(np.abs(z - B @ beta), kind="stable"), k)
    beta = np.linalg.solve(B[basis], z[basis])
    for step in range(DESCENT_MAX_STEPS):
        r = z - B @ beta
        s = np.sign(r)
        s[np.abs(r) <= 1e-12 * scale] = 0.0
        s[basis] = 0.0
        BZ = B[basis]
        u = np.linalg.solve(BZ.T, -(B.T @ s))
        j = int(np.argmax(np.abs(u)))
        if abs(u[j]) <= 1.0 + 1e-10:
            return beta, step
        e = np.zeros(k)
        e[j] = -np.sign(u[j])
        d = np.linalg.solve(BZ, e)
        c = B @ d
        c[basis] = 0.0
        c[basis[j]] = e[j]
        live = np.flatnonzero(np.abs(c) > 1e-14 * max(1.0, np.max(np.abs(c))))
        alpha = r[live] / c[live]
        alpha[live == basis[j]] = 0.0
        weights = np.abs(c[live])
        order = np.lexsort((live, alpha))
        cum = np.cumsum(weights[order])
        pos = int(np.searchsorted(cum, 0.5 * cum[-1]))
        entering = int(live[order[pos]])
        if entering == basis[j] or entering in basis:
            # degenerate pivot: take another row tied at the same step length
            tied = [int(live[o]) for o in order if alpha[o] == alpha[order[pos]]]
            tied = [i for i in tied if i not in basis]
            if not tied:
                return beta, step
            entering = tied[0]
        step_len = float(max(alpha[order[pos]], 0.0))
        beta = beta + step_len * d
        basis = basis.copy()
        basis[j] = entering
        beta = np.linalg.solve(B[basis], z[basis])
    raise NonConvergence(f"LAD vertex descent did not converge in {DESCENT_MAX_STEPS} steps")


def lad_fit(z_sub, B_sub, max_iter=IRLS_MAX_ITER):
    """Least-absolute-deviation fit of ``z_sub`` on the rows of ``B_sub``.

    Returns the minimizer of ``sum_i |z_i - b_i^T beta|``. When the optimum is
    not unique any minimizer may be returned.
    """
    z, B = _check_design(z_sub, B_sub)
    beta0 = np.linalg.lstsq(B, z, rcond=None)[0]
    beta, used = _irls(z, B, beta0, max_iter)
    beta_v, steps = _vertex_descent(z, B, beta)
    obj_v = l1_objective(z, B, beta_v)
    obj_i = l1_objective(z, B, beta)
    if obj_i < obj_v:
        beta_v, obj_v = beta, obj_i
    return RealizedFactors(beta_v, "LAD", B.shape[0], obj_v, used + steps)


def ls_fit(z_sub, B_sub):
    """Ordinary least-squares factor estimate ``(B^T B)^{-1} B^T z``."""
    z, B = _check_design(z_sub, B_sub)
    beta = np.linalg.lstsq(B, z, rcond=None)[0]
    return RealizedFactors(beta, "LS", B.shape[0], l1_objective(z, B, beta))


def estimate_factors(z, model, fraction=DEFAULT_FRACTION, method="LAD"):
    """Fit the realized factors of ``model`` from the calibration subset of ``z``."""
    zvec = np.asarray(getattr(z, "z", z), dtype=float)
    if zvec.shape[0] != model.p:
        raise DimensionMismatch(f"{zvec.shape[0]} statistics for a model of dimension {model.p}")
    idx = select_calibration_set(zvec, fraction)
    if model.k == 0:
        return RealizedFactors(np.zeros(0), method.upper(), idx.size, float(np.abs(zvec[idx]).sum()))
    fit = lad_fit if method.upper() == "LAD" else ls_fit
    return fit(zvec[idx], model.loadings[idx])

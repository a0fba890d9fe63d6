"""Seeded simulation harness.

The design matrix X is drawn once per :class:`DgpSpec`; its sample
correlation matrix is the known covariance of the z-statistics, and every
replicate redraws only ``Z ~ N(mu, Sigma)`` conditional on X.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .comparators import efron_A_hat, efron_fdp, storey_fdp
from .errors import InvalidSpec
from .factors import DEFAULT_FRACTION, estimate_factors
from .fdp import TrueCounts, estimate_fdp, fdp_a, fdp_limit, pvalues, true_fdp
from .screening import Design, ZStatistics, column_sd, marginal_z
from .spectral import DEFAULT_EPSILON, SpectralModel, build_factor_model, eigendecompose

STRUCTURES = (
    "EqualCorrelation",
    "FanSong",
    "IndependentCauchy",
    "ThreeFactor",
    "TwoFactor",
    "NonlinearFactor",
)
_ALIASES = {s.lower(): s for s in STRUCTURES}
_ALIASES.update({
    "equal": "EqualCorrelation",
    "equal_correlation": "EqualCorrelation",
    "fan_song": "FanSong",
    "cauchy": "IndependentCauchy",
    "independent_cauchy": "IndependentCauchy",
    "three_factor": "ThreeFactor",
    "two_factor": "TwoFactor",
    "nonlinear": "NonlinearFactor",
    "nonlinear_factor": "NonlinearFactor",
})

METHODS = ("pfa", "fdp_a", "limit", "storey", "efron")

# stream tags mixed into the seed so design, signal and replicates never share draws
_DESIGN, _SIGNAL, _REPLICATE = 0, 2, 1


def canonical_structure(name):
    try:
        return _ALIASES[str(name).lower()]
    except KeyError:
        raise InvalidSpec(f"unknown structure {name!r}; choose from {', '.join(STRUCTURES)}")


@dataclass(frozen=True)
class DgpSpec:
    """One data-generating process.

    ``beta`` is the common nonzero coefficient, or the string ``"uniform"``
    to draw each nonzero coefficient from U(0, 1) once per design.
    """

    structure: str = "EqualCorrelation"
    n: int = 100
    p: int = 2000
    p1: int = 10
    beta: Union[float, str] = 1.0
    sigma: float = 2.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "structure", canonical_structure(self.structure))
        if self.n < 3:
            raise InvalidSpec(f"n must be at least 3, got {self.n}")
        if self.p < 1 or not 0 <= self.p1 <= self.p:
            raise InvalidSpec(f"need 0 <= p1 <= p, got p1={self.p1}, p={self.p}")
        if not self.sigma > 0:
            raise InvalidSpec("sigma must be positive")
        if isinstance(self.beta, str) and self.beta != "uniform":
            raise InvalidSpec(f"beta must be a number or 'uniform', got {self.beta!r}")
        if self.structure == "FanSong" and math.floor(0.95 * self.p) < 10:
            raise InvalidSpec("FanSong needs at least 10 independent columns (p >= 11)")


def _rng(seed, *stream):
    return np.random.default_rng([int(seed), *stream])


def generate_design(spec):
    """n x p design matrix for ``spec.structure``."""
    rng = _rng(spec.seed, _DESIGN)
    n, p = spec.n, spec.p
    s = spec.structure
    if s == "EqualCorrelation":
        common = rng.standard_normal((n, 1))
        return math.sqrt(0.5) * common + math.sqrt(0.5) * rng.standard_normal((n, p))
    if s == "FanSong":
        n_indep = math.floor(0.95 * p)
        X = np.empty((n, p))
        X[:, :n_indep] = rng.standard_normal((n, n_indep))
        alternating = np.where(np.arange(10) % 2 == 0, 1.0, -1.0) / 5.0
        base = X[:, :10] @ alternating
        X[:, n_indep:] = base[:, None] + math.sqrt(1.0 - 10.0 / 25.0) * rng.standard_normal((n, p - n_indep))
        return X
    if s == "IndependentCauchy":
        return np.tan(np.pi * (rng.random((n, p)) - 0.5))
    if s == "ThreeFactor":
        W = rng.standard_normal((n, 3)) + np.array([-2.0, 1.0, 4.0])
        rho = rng.uniform(-1.0, 1.0, size=(3, p))
        return W @ rho + rng.standard_normal((n, p))
    if s == "TwoFactor":
        W = rng.standard_normal((n, 2))
        rho = rng.uniform(-1.0, 1.0, size=(2, p))
        return W @ rho + rng.standard_normal((n, p))
    if s == "NonlinearFactor":
        W = rng.standard_normal((n, 2))
        rho = rng.uniform(-1.0, 1.0, size=(2, p))
        return (
            np.sin(rho[0] * W[:, [0]])
            + np.sign(rho[1]) * np.exp(np.abs(rho[1]) * W[:, [1]])
            + rng.standard_normal((n, p))
        )
    raise InvalidSpec(f"unhandled structure {s}")


def build_mu(spec, X):
    """Mean vector and null mask: the first ``p1`` indices carry signal.

    ``mu_j = sqrt(n) beta_j sd_j / sigma`` with ``sd_j`` the divisor-n sample
    standard deviation of column j.
    """
    null_mask = np.ones(spec.p, dtype=bool)
    null_mask[: spec.p1] = False
    if spec.beta == "uniform":
        beta = _rng(spec.seed, _SIGNAL).uniform(0.0, 1.0, size=spec.p1)
    else:
        beta = np.full(spec.p1, float(spec.beta))
    mu = np.zeros(spec.p)
    mu[: spec.p1] = math.sqrt(spec.n) * beta * column_sd(X[:, : spec.p1]) / spec.sigma
    if np.all(mu == 0):
        null_mask[:] = True
    return mu, null_mask


def _mixing(sigma_or_model):
    if isinstance(sigma_or_model, SpectralModel):
        values, vectors = sigma_or_model.eigenvalues, sigma_or_model.eigenvectors
    else:
        values, vectors = eigendecompose(sigma_or_model)
    return vectors * np.sqrt(values)


def sample_z(mu, sigma, seed, null_mask=None, mixing=None):
    """One draw of ``Z = mu + Gamma diag(sqrt(lambda)) xi``.

    ``sigma`` may be a correlation matrix or a :class:`SpectralModel`; the
    eigen square root copes with rank-deficient matrices. The standard normal
    ``xi`` is kept on the result as ``latent`` (its first k entries are the
    realized factors of a model with k factors).
    """
    mu = np.asarray(mu, dtype=float)
    M = _mixing(sigma) if mixing is None else mixing
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    xi = rng.standard_normal(mu.shape[0])
    return ZStatistics(mu + M @ xi, null_mask, xi)


def replicate_seed(seed, index):
    """Derived 64-bit seed of replicate ``index``."""
    state = np.random.SeedSequence([int(seed), _REPLICATE, int(index)]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass
class SimReplicate:
    index: int
    seed: int
    truth: Dict[float, TrueCounts]
    estimates: Dict[Tuple[str, float], float] = field(default_factory=dict)
    w_error: Optional[float] = None


class Experiment:
    """A fixed design (X, Sigma, mu) ready to produce replicates."""

    def __init__(self, spec, epsilon=DEFAULT_EPSILON, k=None, fraction=DEFAULT_FRACTION):
        self.spec = spec
        self.fraction = fraction
        self.X = generate_design(spec)
        self.mu, self.null_mask = build_mu(spec, self.X)
        # Sigma of the z-statistics is the sample correlation of the columns of X
        _, self.sigma = marginal_z(Design(self.X, np.zeros(spec.n), 1.0))
        self.model = build_factor_model(self.sigma, epsilon=epsilon, k=k)
        self.mixing = _mixing(self.model)

    def draw(self, index):
        seed = replicate_seed(self.spec.seed, index)
        z = sample_z(self.mu, self.model, np.random.default_rng(seed), self.null_mask, self.mixing)
        return seed, z

    def true_factors(self, z):
        return z.latent[: self.model.k]

    def replicate(self, index, thresholds, methods):
        seed, z = self.draw(index)
        model = self.model
        P = pvalues(z.z)
        w_true = self.true_factors(z)
        eta_true = model.eta(w_true)
        rec = SimReplicate(index, seed, {})
        fit = None
        if {"pfa", "efron"} & set(methods):
            fit = estimate_factors(z, model, self.fraction)
            rec.w_error = float(np.linalg.norm(fit.w_hat - w_true))
            eta_hat = model.eta(fit.w_hat)
            a_hat = efron_A_hat(eta_hat, model.communalities, model.p)
        p0 = self.spec.p - self.spec.p1
        for t in thresholds:
            counts = true_fdp(P, z.null_mask, t)
            rec.truth[t] = counts
            for m in methods:
                if m == "pfa":
                    value = estimate_fdp(z, model, fit, t).fdp_hat
                elif m == "efron":
                    value = efron_fdp(t, counts.R, model.p, a_hat)
                elif m == "storey":
                    value = storey_fdp(P, t, p0)
                elif m == "fdp_a":
                    value = fdp_a(model, eta_true, t, counts.R)
                elif m == "limit":
                    value = fdp_limit(model, eta_true, t, z.null_mask, self.mu)
                else:
                    raise InvalidSpec(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
                rec.estimates[(m, t)] = float(value)
        return rec

    def run(self, thresholds, methods=("pfa", "storey", "efron"), n_replicates=100, n_jobs=1):
        thresholds = [float(t) for t in thresholds]
        methods = list(methods)
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise InvalidSpec(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        job = lambda i: self.replicate(i, thresholds, methods)  # noqa: E731
        if n_jobs > 1:
            with ThreadPoolExecutor(n_jobs) as pool:
                return list(pool.map(job, range(n_replicates)))
        return [job(i) for i in range(n_replicates)]


def run_experiment(spec, thresholds, methods=("pfa", "storey", "efron"), n_replicates=100,
                   epsilon=DEFAULT_EPSILON, k=None, fraction=DEFAULT_FRACTION, n_jobs=1):
    """Replicates of ``spec`` evaluated at every threshold by every method."""
    exp = Experiment(spec, epsilon=epsilon, k=k, fraction=fraction)
    return exp.run(thresholds, methods, n_replicates, n_jobs)


def relative_error(estimate, truth):
    """``(estimate - truth) / truth``, defined as 0 when ``truth`` is 0."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        re = (estimate - truth) / truth
    return np.where(truth != 0, re, 0.0)


def _bw_nrd0(x):
    # R's default density() bandwidth, including its fallbacks for degenerate samples
    hi = np.std(x, ddof=1) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(hi, (q75 - q25) / 1.34)
    if not lo > 0:
        lo = hi or abs(x[0]) or 1.0
    return 0.9 * lo * x.size ** -0.2


def tv_distance(x, y, grid_size=4096):
    """Total variation distance between Gaussian-kernel density estimates of two samples."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hx, hy = _bw_nrd0(x), _bw_nrd0(y)
    lo = min(x.min() - 4 * hx, y.min() - 4 * hy)
    hi = max(x.max() + 4 * hx, y.max() + 4 * hy)
    grid = np.linspace(lo, hi, grid_size)

    def kde(sample, h):
        dens = np.zeros_like(grid)
        for start in range(0, sample.size, 256):
            u = (grid[:, None] - sample[None, start:start + 256]) / h
            dens += np.exp(-0.5 * u * u).sum(axis=1)
        return dens / (sample.size * h * math.sqrt(2 * math.pi))

    return float(0.5 * integrate.trapezoid(np.abs(kde(x, hx) - kde(y, hy)), grid))


def summarize(replicates, thresholds, methods):
    """Means, SDs, relative errors and TV distances per threshold and method."""
    out = {"n_replicates": len(replicates), "thresholds": {}}
    for t in thresholds:
        t = float(t)
        fdp = np.array([r.truth[t].fdp for r in replicates])
        V = np.array([r.truth[t].V for r in replicates], dtype=float)
        R = np.array([r.truth[t].R for r in replicates], dtype=float)
        entry = {
            "true_fdp_mean": float(fdp.mean()),
            "true_fdp_sd": float(fdp.std(ddof=1)) if fdp.size > 1 else 0.0,
            "V_mean": float(V.mean()),
            "V_var": float(V.var(ddof=1)) if V.size > 1 else 0.0,
            "R_mean": float(R.mean()),
            "methods": {},
        }
        for m in methods:
            est = np.array([r.estimates[(m, t)] for r in replicates])
            re = relative_error(est, fdp)
            entry["methods"][m] = {
                "mean": float(est.mean()),
                "sd": float(est.std(ddof=1)) if est.size > 1 else 0.0,
                "re_mean": float(re.mean()),
                "re_sd": float(re.std(ddof=1)) if re.size > 1 else 0.0,
                "abs_re_mean": float(np.abs(re).mean()),
                "tv_distance": tv_distance(fdp, est) if est.size > 1 else None,
            }
        out["thresholds"][repr(t)] = entry
    errs = [r.w_error for r in replicates if r.w_error is not None]
    if errs:
        out["w_error_median"] = float(np.median(errs))
    return out


def replicate_rows(replicates, thresholds, methods):
    """One flat row per replicate x threshold x method."""
    for r in replicates:
        for t in thresholds:
            c = r.truth[float(t)]
            for m in methods:
                yield {
                    "replicate": r.index,
                    "seed": r.seed,
                    "threshold": float(t),
                    "method": m,
                    "estimate": r.estimates[(m, float(t))],
                    "true_fdp": c.fdp,
                    "V": c.V,
                    "S": c.S,
                    "R": c.R,
                    "w_error": r.w_error,
                }


# --- dependence-adjusted versus fixed-threshold power comparison ----------


@dataclass
class PowerComparison:
    adjusted_t: float
    adjusted_fdr: float
    adjusted_fnr: float
    fixed_t: float
    fixed_fdr: float
    fixed_fnr: float

    @property
    def fdr_gap(self):
        return abs(self.fixed_fdr - self.adjusted_fdr)


def _fdp_fnr(null_p, alt_p, t, p):
    V = np.searchsorted(null_p, t, side="right")
    S = np.searchsorted(alt_p, t, side="right")
    R = V + S
    fdp = np.where(R > 0, V / np.maximum(R, 1), 0.0)
    T = alt_p.shape[-1] - S
    fnr = np.where(p - R > 0, T / np.maximum(p - R, 1), 0.0)
    return fdp, fnr


def power_comparison(spec, n_replicates, k=None, adjusted_t=0.001, fraction=DEFAULT_FRACTION,
                     grid=None, epsilon=DEFAULT_EPSILON):
    """Adjusted p-values at a fixed ``adjusted_t`` versus raw p-values at an FDR-matched threshold.

    The raw-p threshold is picked from ``grid`` to minimize the gap between
    the two empirical FDRs over the same replicates.
    """
    from .adjust import adjusted_pvalues

    exp = Experiment(spec, epsilon=epsilon, k=k, fraction=fraction)
    p = spec.p
    raw_null, raw_alt, adj_fdp, adj_fnr = [], [], [], []
    for i in range(n_replicates):
        _, z = exp.draw(i)
        fit = estimate_factors(z, exp.model, fraction)
        P = pvalues(z.z)
        adj = adjusted_pvalues(z, exp.model, fit).adjusted_p
        raw_null.append(np.sort(P[z.null_mask]))
        raw_alt.append(np.sort(P[~z.null_mask]))
        f, n = _fdp_fnr(np.sort(adj[z.null_mask]), np.sort(adj[~z.null_mask]), adjusted_t, p)
        adj_fdp.append(f)
        adj_fnr.append(n)
    target = float(np.mean(adj_fdp))
    if grid is None:
        grid = np.geomspace(1e-6, 0.5, 4000)
    grid = np.asarray(grid, dtype=float)
    fdr = np.zeros(grid.size)
    fnr = np.zeros(grid.size)
    for a, b in zip(raw_null, raw_alt):
        f, n = _fdp_fnr(a, b, grid, p)
        fdr += f
        fnr += n
    fdr /= n_replicates
    fnr /= n_replicates
    best = int(np.argmin(np.abs(fdr - target)))
    return PowerComparison(
        adjusted_t, target, float(np.mean(adj_fnr)), float(grid[best]), float(fdr[best]), float(fnr[best])
    )

import numpy as np
import pytest

from pfa.errors import DimensionMismatch, RankDeficientLoadings, UsageError
from pfa.factors import estimate_factors, l1_objective, lad_fit, ls_fit, select_calibration_set
from pfa.spectral import build_factor_model

from oracles import equicorrelation, l1, lad_grid_1d, lad_linprog


def test_calibration_set_example():
    idx = select_calibration_set(np.array([3.0, -0.1, 0.2, -5.0]), 0.5)
    np.testing.assert_array_equal(idx, [1, 2])


def test_calibration_set_full_and_ties():
    z = np.array([1.0, -1.0, 2.0])
    np.testing.assert_array_equal(select_calibration_set(z, 1.0), [0, 1, 2])
    np.testing.assert_array_equal(select_calibration_set(z, 1 / 3), [0])
    assert select_calibration_set(np.arange(10.0), 0.9).size == 9
    assert select_calibration_set(np.arange(1000.0), 0.9).size == 900


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
def test_calibration_set_bad_fraction(fraction):
    with pytest.raises(UsageError):
        select_calibration_set(np.ones(4), fraction)


def test_lad_noiseless_recovers_exactly():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((10, 2))
    w = np.array([1.3, -0.7])
    fit = lad_fit(B @ w, B)
    np.testing.assert_allclose(fit.w_hat, w, atol=1e-12)
    assert fit.objective == pytest.approx(0.0, abs=1e-10)


def test_lad_constant_regressor_is_median():
    fit = lad_fit(np.array([1.0, 2.0, 100.0]), np.ones((3, 1)))
    assert fit.w_hat[0] == pytest.approx(2.0)


def test_lad_vs_grid_small_example():
    z = np.array([1.0, 1.0, 3.0])
    b = np.array([1.0, 2.0, 1.0])
    fit = lad_fit(z, b[:, None])
    w_grid, obj_grid = lad_grid_1d(z, b)
    # the objective is flat (= 3) on [0.5, 1]; any point there is a minimizer
    assert fit.objective <= obj_grid + 1e-12
    assert 0.5 - 1e-3 <= fit.w_hat[0] <= 1.0 + 1e-3
    assert 0.5 - 1e-3 <= w_grid <= 1.0 + 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_lad_vs_grid_unique_minimum(seed):
    rng = np.random.default_rng(100 + seed)
    b = rng.uniform(0.2, 2.0, 25)
    z = b * rng.normal() + rng.standard_normal(25)
    fit = lad_fit(z, b[:, None])
    w_grid, obj_grid = lad_grid_1d(z, b)
    assert abs(fit.w_hat[0] - w_grid) < 1e-3
    assert fit.objective <= obj_grid + 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_lad_matches_linear_program(seed):
    rng = np.random.default_rng(seed)
    m, k = 120, 1 + seed % 5
    B = rng.standard_normal((m, k))
    z = B @ rng.standard_normal(k) + rng.standard_t(2, m)
    fit = lad_fit(z, B)
    _, obj_lp = lad_linprog(z, B)
    assert fit.objective == pytest.approx(obj_lp, rel=1e-9, abs=1e-9)
    assert fit.objective == pytest.approx(l1(z, B, fit.w_hat), rel=1e-12)


def test_lad_robust_to_outliers():
    rng = np.random.default_rng(11)
    B = rng.standard_normal((200, 3))
    w = np.array([0.5, -1.0, 2.0])
    z = B @ w + 0.01 * rng.standard_normal(200)
    z[:10] += 50.0
    lad = lad_fit(z, B).w_hat
    ls = ls_fit(z, B).w_hat
    assert np.linalg.norm(lad - w) < 0.05
    assert np.linalg.norm(ls - w) > np.linalg.norm(lad - w)


def test_ls_orthogonal_columns():
    rng = np.random.default_rng(3)
    p = 50
    G, _ = np.linalg.qr(rng.standard_normal((p, 2)))
    lam = np.array([9.0, 4.0])
    B = G * np.sqrt(lam)
    z = rng.standard_normal(p)
    w = ls_fit(z, B).w_hat
    np.testing.assert_allclose(w, (G.T @ z) / np.sqrt(lam), rtol=1e-10)


def test_ls_bias_bound_from_nonnulls():
    rng = np.random.default_rng(4)
    p = 100
    G, _ = np.linalg.qr(rng.standard_normal((p, 2)))
    lam = np.array([50.0, 25.0])
    B = G * np.sqrt(lam)
    z_null = B @ rng.standard_normal(2) + rng.standard_normal(p)
    mu = rng.standard_normal(p)
    mu /= np.linalg.norm(mu)
    gap = np.linalg.norm(ls_fit(z_null + mu, B).w_hat - ls_fit(z_null, B).w_hat)
    assert gap <= np.sqrt(1 / 50 + 1 / 25) + 1e-12


def test_rank_deficiency_errors():
    with pytest.raises(RankDeficientLoadings):
        lad_fit(np.ones(2), np.ones((2, 3)))
    B = np.ones((5, 2))
    with pytest.raises(RankDeficientLoadings):
        lad_fit(np.arange(5.0), B)
    with pytest.raises(DimensionMismatch):
        lad_fit(np.ones(4), np.ones((5, 1)))


def test_estimate_factors_equicorrelation():
    model = build_factor_model(equicorrelation(400, 0.5), k=1)
    rng = np.random.default_rng(7)
    w = 1.1
    z = model.loadings[:, 0] * w + rng.standard_normal(400) / model.standardizers
    fit = estimate_factors(z, model)
    assert fit.m_used == 360
    assert fit.method == "LAD"
    # |b| ~ 0.707 and residual sd ~ 0.707 over 360 points
    assert abs(fit.w_hat[0] - w) < 0.2


def test_estimate_factors_k_zero_and_ls():
    model = build_factor_model(equicorrelation(20, 0.2), k=0)
    fit = estimate_factors(np.linspace(-1, 1, 20), model)
    assert fit.w_hat.shape == (0,)
    model1 = model.with_k(1)
    z = np.linspace(-1, 1, 20)
    assert estimate_factors(z, model1, method="LS").method == "LS"
    with pytest.raises(DimensionMismatch):
        estimate_factors(np.ones(3), model1)


def test_l1_objective():
    assert l1_objective(np.array([1.0, -2.0]), np.ones((2, 1)), np.array([0.0])) == 3.0


@pytest.mark.parametrize("seed", range(5))
def test_lad_minimizer_property(seed):
    rng = np.random.default_rng(200 + seed)
    B = rng.standard_normal((80, 3))
    z = B @ rng.standard_normal(3) + rng.standard_cauchy(80)
    lad = lad_fit(z, B)
    assert lad.objective <= l1(z, B, ls_fit(z, B).w_hat) + 1e-12
    assert lad.objective <= l1(z, B, np.zeros(3)) + 1e-12


def test_outlier_robustness_median():
    rng = np.random.default_rng(12)
    m, k = 200, 2
    lad_shift, ls_shift = [], []
    for _ in range(100):
        B = rng.standard_normal((m, k)) * 0.6
        z = B @ rng.standard_normal(k) + 0.6 * rng.standard_normal(m)
        planted = z.copy()
        idx = rng.choice(m, m // 20, replace=False)
        planted[idx] += 10.0 * rng.choice([-1.0, 1.0], idx.size)
        lad_shift.append(np.linalg.norm(lad_fit(planted, B).w_hat - lad_fit(z, B).w_hat))
        ls_shift.append(np.linalg.norm(ls_fit(planted, B).w_hat - ls_fit(z, B).w_hat))
    assert np.median(lad_shift) < np.median(ls_shift)


def test_ls_misspecification_bound_many_instances():
    rng = np.random.default_rng(13)
    for _ in range(50):
        p, k = int(rng.integers(20, 200)), int(rng.integers(1, 5))
        G, _ = np.linalg.qr(rng.standard_normal((p, k)))
        lam = np.sort(rng.uniform(1, 60, k))[::-1]
        B = G * np.sqrt(lam)
        z = B @ rng.standard_normal(k) + rng.standard_normal(p)
        mu = rng.standard_normal(p) * (rng.random(p) < 0.1)
        gap = np.linalg.norm(ls_fit(z + mu, B).w_hat - ls_fit(z, B).w_hat)
        assert gap <= np.linalg.norm(mu) * np.sqrt(np.sum(1 / lam)) * (1 + 1e-10) + 1e-14

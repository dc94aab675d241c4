import numpy as np
import pytest
from scipy.stats import norm

from bcmde.bias import ConstantUnknown, TimeTrend, expectation_weights
from bcmde.estimators import (
    EstimationOptions,
    _minimize,
    asymptotic_cov_C,
    bcmde_objective,
    corrected_targets,
    durbin_levinson,
    exact_gaussian_loglik,
    fit,
    mde_objective,
    model_cov_C,
    whittle_objective,
)
from bcmde.model import ModelSpec, ModelStructure, arfima_acf, arfima_acv
from bcmde.montecarlo import replication_rng, simulate_gaussian
from bcmde.sample import periodogram, sample_acf

AR1 = ModelStructure(1, 0, False)


def ar1_path(phi, T, seed):
    return simulate_gaussian(ModelSpec((phi,)), T, np.random.default_rng(seed))


# --- options --------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(method="ols"), dict(weighting="diag"), dict(lags=()),
                                dict(lags=(2, 1)), dict(lags=(0, 1))])
def test_options_validation(kw):
    with pytest.raises(ValueError):
        EstimationOptions(**kw)


def test_bounds():
    s = ModelStructure(1, 1, True)
    assert EstimationOptions().bounds_for(s) == [(-0.99, 0.99), (-0.99, 0.99), (-0.49, 0.49)]
    with pytest.raises(ValueError):
        EstimationOptions(bounds=[(0, 1)]).bounds_for(s)
    with pytest.raises(ValueError):
        EstimationOptions(bounds=[(0.5, 0.5)]).bounds_for(AR1)


# --- MDE / BCMDE objectives -----------------------------------------------

def test_mde_objective_examples():
    m = ModelSpec((0.6,), (0.2,))
    rho = arfima_acf(m, 3)[1:]
    assert mde_objective(m, rho, [1, 2, 3]) == pytest.approx(0, abs=1e-28)
    assert mde_objective(ModelSpec((0.5,)), [0.2], [1]) == pytest.approx(0.09)
    W = np.diag([1.0, 2.0, 3.0])
    rho_hat = rho + [0.1, -0.05, 0.02]
    assert mde_objective(m, rho_hat, [1, 2, 3], 2.5 * W) == pytest.approx(2.5 * mde_objective(m, rho_hat, [1, 2, 3], W))


def test_bcmde_objective_examples():
    m = ModelSpec((0.5,), d=0.1)
    T = 60
    ew = expectation_weights(T, [0, 1, 2], TimeTrend())
    target, _ = corrected_targets(m, ew)
    assert bcmde_objective(m, target, T, TimeTrend(), [1, 2]) == pytest.approx(0, abs=1e-28)
    # white noise, T=10, lag 1: ρ_T = (-1/10)/(1 - 1/10) = -1/9
    assert bcmde_objective(ModelSpec(), [0.2], 10, ConstantUnknown(), [1]) == pytest.approx((0.2 + 1 / 9) ** 2)
    # bias vanishes for large T
    m = ModelSpec((0.5,))
    big = bcmde_objective(m, [0.4], 10**6, ConstantUnknown(), [1])
    assert abs(big - mde_objective(m, [0.4], [1])) <= 1e-6


def test_optimizer_quadratic():
    x, fx, _, ok = _minimize(lambda t: (0.3 - t[0]) ** 2, [(-0.99, 0.99)], EstimationOptions())
    assert ok and abs(x[0] - 0.3) <= 1e-8
    x, fx, _, ok = _minimize(lambda t: (t[0] - 0.3) ** 2 + (t[1] + 0.2) ** 2,
                             [(-0.99, 0.99)] * 2, EstimationOptions())
    np.testing.assert_allclose(x, [0.3, -0.2], atol=1e-6)


def test_mde_fit_is_clipped_rho1():
    for seed in range(5):
        x = ar1_path(0.6, 80, seed)
        r1 = sample_acf(x - x.mean(), [1])[0]
        res = fit(x, AR1, ConstantUnknown(), EstimationOptions(method="mde"))
        assert res.converged
        assert res.params[0] == pytest.approx(np.clip(r1, -0.99, 0.99), abs=1e-8)
    # ρ̂_1 beyond the box is clipped
    x = np.cumsum(np.ones(30)) ** 2
    res = fit(x, AR1, ConstantUnknown(), EstimationOptions(method="mde", bounds=[(-0.5, 0.5)]))
    assert res.params[0] == pytest.approx(0.5, abs=1e-8)


def test_argmin_invariant_to_weight_scaling():
    x = simulate_gaussian(ModelSpec((0.5,), (0.3,)), 200, np.random.default_rng(4))
    s = ModelStructure(1, 1, False)
    lags = np.array([1, 2, 3])
    rho_hat = sample_acf(x - x.mean(), lags)
    ew = expectation_weights(200, np.r_[0, lags], ConstantUnknown())
    W = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]])
    opts = EstimationOptions()
    pts = []
    for c in (1.0, 7.5):
        obj = lambda t: bcmde_objective(s.unpack(t), rho_hat, 200, ConstantUnknown(), lags, c * W, ew)
        pts.append(_minimize(obj, opts.bounds_for(s), opts)[0])
    np.testing.assert_allclose(pts[0], pts[1], atol=1e-6)


def test_inverse_c_single_lag_matches_identity():
    x = ar1_path(0.5, 100, 3)
    a = fit(x, AR1, options=EstimationOptions(method="bcmde"))
    b = fit(x, AR1, options=EstimationOptions(method="bcmde", weighting="inverse_c", c_truncation=2000))
    assert b.params[0] == pytest.approx(a.params[0], abs=1e-7)


# --- asymptotic covariance --------------------------------------------------

def test_C_white_noise_and_ar1():
    C = model_cov_C(ModelSpec(), [1, 2, 3], 1000)
    np.testing.assert_allclose(C, np.eye(3), atol=1e-8)
    C = model_cov_C(ModelSpec((0.5,)), [1], 100_000)
    assert C[0, 0] == pytest.approx(0.75, abs=1e-6)
    C = asymptotic_cov_C(arfima_acf(ModelSpec((0.3,), (0.4,), 0.2), 5000), [1, 2, 4], 4000)
    np.testing.assert_allclose(C, C.T, atol=0)
    assert np.all(np.linalg.eigvalsh(C) > 0)


def test_C_bartlett_ar1_diagonal():
    # AR(1): w_kk = (1+φ²)(1-φ^{2k})/(1-φ²) - 2kφ^{2k}
    phi = 0.6
    C = model_cov_C(ModelSpec((phi,)), [1, 2, 3], 100_000)
    for n, k in enumerate((1, 2, 3)):
        w = (1 + phi**2) * (1 - phi ** (2 * k)) / (1 - phi**2) - 2 * k * phi ** (2 * k)
        assert C[n, n] == pytest.approx(w, rel=1e-10)


# --- Whittle ------------------------------------------------------------------

def test_whittle_white_noise_sigma2():
    x = np.random.default_rng(1).standard_normal(512) * 1.7
    omega, I = periodogram(x)
    _, s2 = whittle_objective(ModelSpec(), omega, I)
    assert s2 == pytest.approx(np.mean(x**2), rel=0.10)


def test_whittle_profile_ignores_model_sigma2():
    x = ar1_path(0.4, 128, 2)
    omega, I = periodogram(x)
    v1, s1 = whittle_objective(ModelSpec((0.4,), sigma2=1.0), omega, I)
    v2, s2 = whittle_objective(ModelSpec((0.4,), sigma2=9.0), omega, I)
    assert v1 == pytest.approx(v2) and s1 == pytest.approx(s2)


def test_whittle_fit_recovers_ar1():
    est = [fit(ar1_path(0.6, 400, s), AR1, options=EstimationOptions(method="whittle")).params[0]
           for s in range(30)]
    assert np.mean(est) == pytest.approx(0.6, abs=0.05)


# --- exact Gaussian likelihood ---------------------------------------------------

def test_durbin_levinson_ar1():
    coefs, v = durbin_levinson(arfima_acv(ModelSpec((0.7,)), 5))
    assert v[0] == pytest.approx(1 / (1 - 0.49))
    np.testing.assert_allclose(v[1:], 1.0, rtol=1e-12)
    for t in range(1, 6):
        np.testing.assert_allclose(coefs[t, :t], np.r_[np.zeros(t - 1), 0.7], atol=1e-12)


def test_loglik_white_noise():
    x = np.random.default_rng(0).standard_normal(50) * 2
    ll, s2 = exact_gaussian_loglik(ModelSpec(), x)
    assert s2 == pytest.approx(np.mean(x**2))
    assert ll == pytest.approx(norm.logpdf(x, scale=np.sqrt(s2)).sum(), rel=1e-12)


@pytest.mark.parametrize("phi", [0.4, 0.8])
def test_loglik_textbook_ar1(phi):
    for seed in range(3):
        x = ar1_path(phi, 60, seed)
        T = len(x)
        S = (1 - phi**2) * x[0] ** 2 + np.sum((x[1:] - phi * x[:-1]) ** 2)
        s2 = S / T
        ref = -T / 2 * np.log(2 * np.pi * s2) + 0.5 * np.log(1 - phi**2) - T / 2
        ll, s2_hat = exact_gaussian_loglik(ModelSpec((phi,)), x)
        assert s2_hat == pytest.approx(s2, rel=1e-10)
        assert ll == pytest.approx(ref, abs=1e-8)


def test_loglik_rejects_tiny_series():
    with pytest.raises(ValueError):
        exact_gaussian_loglik(ModelSpec(), np.array([1.0]))


# --- fit ------------------------------------------------------------------

@pytest.mark.parametrize("method", ["mde", "bcmde", "whittle", "mle"])
def test_fit_ar1_large_sample(method):
    x = ar1_path(0.8, 2000, 11)
    res = fit(x, AR1, options=EstimationOptions(method=method))
    assert res.converged
    assert 0.75 < res.params[0] < 0.85
    assert res.sigma2_hat == pytest.approx(1.0, rel=0.15)
    assert res.model.ar == (res.params[0],)


def test_mle_arma11_matches_state_space_oracle():
    # statsmodels evaluates the same exact likelihood by the Kalman filter
    sm_arima = pytest.importorskip("statsmodels.tsa.arima.model")
    x = simulate_gaussian(ModelSpec((0.5,), (0.3,)), 600, np.random.default_rng(5))
    res = fit(x, ModelStructure(1, 1, False), options=EstimationOptions(method="mle"))
    assert res.converged
    ref = sm_arima.ARIMA(x - x.mean(), order=(1, 0, 1), trend="n").fit().params
    np.testing.assert_allclose(res.params, ref[:2], atol=2e-3)
    assert res.sigma2_hat == pytest.approx(ref[2], rel=1e-2)


def test_fit_arfima():
    x = simulate_gaussian(ModelSpec(d=0.3), 1500, np.random.default_rng(6))
    for method in ("bcmde", "whittle", "mle"):
        res = fit(x, ModelStructure(0, 0, True), TimeTrend(), EstimationOptions(method=method))
        assert abs(res.params[0] - 0.3) < 0.1


def test_fit_errors_and_nonconvergence():
    with pytest.raises(ValueError):
        fit(np.full(30, 2.0), AR1)
    with pytest.raises(ValueError):
        fit(np.ones(4), ModelStructure(1, 1, False))
    with pytest.raises(ValueError):
        fit(np.random.default_rng(0).standard_normal(20), ModelStructure(0, 0, False))
    x = simulate_gaussian(ModelSpec((0.5,), (0.3,)), 100, np.random.default_rng(1))
    res = fit(x, ModelStructure(1, 1, False), options=EstimationOptions(method="mle", maxiter=2))
    assert not res.converged


def test_bcmde_consistency_long_memory():
    m = ModelSpec(d=0.3)
    s = ModelStructure(0, 0, True)
    medians = []
    for T in (50, 100, 200, 400):
        err = [abs(fit(simulate_gaussian(m, T, replication_rng(17, r)), s).params[0] - 0.3)
               for r in range(200)]
        medians.append(np.median(err))
    assert all(a > b for a, b in zip(medians, medians[1:]))

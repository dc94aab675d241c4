"""
Finite-sample expectation of the sample autocovariance when the mean is estimated.

With residuals e_t = X_t - μ̂_t and the lag-k estimator

    γ̂_k = Σ_{j=1}^{T-k} e_j e_{j+k} / (T - k),

every formula here is an exact linear functional of the true autocovariances
γ_0..γ_{T-1}. Biases follow the convention E(γ̂_k) = γ_k + B^γ_{T,k}, so
negative values mean the estimator is pulled towards zero.

Four mean regimes are supported through ``TrendSpec`` subclasses:
``KnownMean``, ``ConstantUnknown``, ``LinearRegressor`` and ``TimeTrend``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import correlate

from .model import ModelSpec, arfima_acv


class TrendSpec:
    """Base class of the mean regimes."""

    def regressor(self, T: int) -> np.ndarray | None:
        return None


@dataclass(frozen=True)
class KnownMean(TrendSpec):
    mu: float = 0.0


@dataclass(frozen=True)
class ConstantUnknown(TrendSpec):
    pass


@dataclass(frozen=True, eq=False)
class LinearRegressor(TrendSpec):
    """Mean α + β z_t for a fixed, non-stochastic regressor z."""

    z: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1 or not np.all(np.isfinite(z)):
            raise ValueError("regressor must be a finite 1-d sequence")
        if np.sum((z - z.mean()) ** 2) <= 0:
            raise ValueError("degenerate regressor: sum of squared deviations is zero")
        object.__setattr__(self, "z", z)

    def regressor(self, T: int) -> np.ndarray:
        if len(self.z) != T:
            raise ValueError(f"regressor has length {len(self.z)}, expected {T}")
        return self.z


@dataclass(frozen=True)
class TimeTrend(TrendSpec):
    """Mean α + β t, t = 1..T."""

    def regressor(self, T: int) -> np.ndarray:
        return np.arange(1, T + 1, dtype=float)


def parse_trend(name: str, z=None, mu: float = 0.0) -> TrendSpec:
    """Build a TrendSpec from a short name (known, constant, regressor, time)."""
    name = name.lower()
    if name in ("known", "none"):
        return KnownMean(mu)
    if name == "constant":
        return ConstantUnknown()
    if name == "time":
        return TimeTrend()
    if name == "regressor":
        if z is None:
            raise ValueError("regressor trend needs a regressor sequence")
        return LinearRegressor(z)
    raise ValueError(f"unknown trend {name!r}; expected known, constant, regressor or time")


def _check_lags(acv, T, k):
    acv = np.asarray(acv, dtype=float)
    if len(acv) < T:
        raise ValueError(f"need autocovariances up to lag {T - 1}, got {len(acv) - 1}")
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(ks < 0) or np.any(ks >= T):
        raise ValueError(f"lag must satisfy 0 <= k <= T-1 = {T - 1}")
    return acv[:T], ks


def _ret(out, k):
    return float(out[0]) if np.ndim(k) == 0 else out


def mean_variance(acv, T: int) -> float:
    """Var(X̄) = [T γ_0 + 2 Σ_{i=1}^{T-1} (T - i) γ_i] / T²."""
    g = np.asarray(acv, dtype=float)[:T]
    i = np.arange(1, T)
    return (T * g[0] + 2 * np.sum((T - i) * g[1:])) / T**2


def expected_acv_constant_mean(acv, T: int, k):
    """E(γ̂_k) under an unknown constant mean estimated by X̄, in O(T).

        E(γ̂_k) = γ_k - (T+k)/(T-k) Var(X̄) + 2 Σ_{i=1}^{k} Σ_{j=1}^{T} γ_{|i-j|} / (T (T-k))

    Parameters
    ----------
    acv : array_like
        γ_0..γ_{T-1} (longer arrays are truncated).
    T : int
        Sample size.
    k : int or array of int
        Lag(s), 0 <= k <= T - 1.
    """
    g, ks = _check_lags(acv, T, k)
    c = np.cumsum(g)
    rows = np.arange(1, T + 1)
    # Σ_j γ_{|i-j|} for row i: lags 0..i-1 on the left, 0..T-i on the right
    row_sums = c[rows - 1] + c[T - rows] - g[0]
    A = np.r_[0.0, np.cumsum(row_sums)]
    out = g[ks] - (T + ks) / (T - ks) * mean_variance(g, T) + 2 * A[ks] / (T * (T - ks))
    return _ret(out, k)


def expected_acv_constant_mean_direct(acv, T: int, k):
    """E(γ̂_k) under a constant mean by the O(T²) expansion before simplification.

        E(γ̂_k) = γ_k - Σ_{i=1}^{T-k} Σ_j γ_{|i-j|} / (T(T-k))
                     - Σ_{i=1}^{T-k} Σ_j γ_{|i+k-j|} / (T(T-k)) + Var(X̄)
    """
    g, ks = _check_lags(acv, T, k)
    G = toeplitz(g)
    row = G.sum(axis=1)
    var_mean = G.sum() / T**2
    out = np.empty(len(ks))
    for n, kk in enumerate(ks):
        first = row[: T - kk].sum()
        second = row[kk:].sum()
        out[n] = g[kk] - (first + second) / (T * (T - kk)) + var_mean
    return _ret(out, k)


def weights(T: int, k: int) -> np.ndarray:
    """Weights w_{T,k,i} with B^ρ_{T,k} = Σ_{i=0}^{T-1} w_{T,k,i} ρ_i (constant mean).

    w_{T,k,i} = -(T+k)/(T-k) · m_i / T² + 2 n_{k,i} / (T (T-k)), where m_0 = T,
    m_i = 2(T - i), and n_{k,i} counts the pairs (a ≤ k, b ≤ T) with |a - b| = i.
    """
    if not 0 <= k <= T - 1:
        raise ValueError(f"lag must satisfy 0 <= k <= T-1 = {T - 1}")
    i = np.arange(T)
    m = np.where(i == 0, T, 2 * (T - i)).astype(float)
    n = np.minimum(k, T - i) + np.where(i == 0, 0, np.maximum(0, k - i))
    return -(T + k) / (T - k) * m / T**2 + 2 * n / (T * (T - k))


def bias_functions(acf, T: int, k, gamma0: float = 1.0):
    """Bias of the lag-k sample autocovariance under an unknown constant mean.

    Returns ``(bias_gamma, bias_rho)`` with E(γ̂_k) = γ_k + bias_gamma and
    bias_gamma = bias_rho · γ_0.
    """
    rho, ks = _check_lags(acf, T, k)
    b = expected_acv_constant_mean(rho, T, ks) - rho[ks]
    return _ret(b * gamma0, k), _ret(b, k)


def _regressor_terms(g: np.ndarray, z: np.ndarray):
    T = len(g)
    zt = z - z.mean()
    G = toeplitz(g)
    return zt, G @ np.ones(T), G @ zt, np.sum(zt**2)


def expected_acv_linear_regressor(acv, T: int, k, z):
    """E(γ̂_k) when the mean α + β z_t is removed by ordinary least squares.

    Five-term expression in the centred regressor z̃ = z - z̄, S = Σ z̃²:

        γ_k - 2 Σ_{t≤T-k} Σ_i γ_{|t-i|} / ((T-k)T)
            - Σ_{t≤T-k} Σ_i (z̃_{t+k} z̃_i γ_{|t-i|} + z̃_t z̃_i γ_{|t+k-i|}) / ((T-k) S)
            + [Σ_{t≤T-k} (z̃_t + z̃_{t+k})] Σ_{i,j} z̃_j γ_{|i-j|} / ((T-k) T S)
            + [Σ_{t≤T-k} z̃_t z̃_{t+k}] Σ_{i,j} z̃_i z̃_j γ_{|i-j|} / ((T-k) S²)
            + Σ_{i,j} γ_{|i-j|} / T²
    """
    g, ks = _check_lags(acv, T, k)
    z = np.asarray(z, dtype=float)
    if len(z) != T:
        raise ValueError(f"regressor has length {len(z)}, expected {T}")
    zt, G1, Gz, S = _regressor_terms(g, z)
    if S <= 0:
        raise ValueError("degenerate regressor: sum of squared deviations is zero")
    one_G_one = G1.sum()
    one_G_z = Gz.sum()
    z_G_z = zt @ Gz
    out = np.empty(len(ks))
    for n, kk in enumerate(ks):
        m = T - kk
        t1 = 2 * G1[:m].sum() / (m * T)
        t2 = (zt[kk:] @ Gz[:m] + zt[:m] @ Gz[kk:]) / (m * S)
        t3 = (zt[:m].sum() + zt[kk:].sum()) * one_G_z / (m * T * S)
        t4 = (zt[:m] @ zt[kk:]) * z_G_z / (m * S**2)
        t5 = one_G_one / T**2
        out[n] = g[kk] - t1 - t2 + t3 + t4 + t5
    return _ret(out, k)


def expected_acv_time_trend(acv, T: int, k):
    """E(γ̂_k) when a linear time trend α + β t is removed by least squares.

    Closed form for z_t = t, where Σ z̃² = (T³ - T)/12 and the regressor
    cross term vanishes by symmetry.
    """
    g, ks = _check_lags(acv, T, k)
    zt, G1, Gz, _ = _regressor_terms(g, np.arange(1, T + 1, dtype=float))
    one_G_one = G1.sum()
    z_G_z = zt @ Gz
    D = float(T) ** 3 - T
    out = np.empty(len(ks))
    for n, kk in enumerate(ks):
        m = T - int(kk)
        t1 = 2 * G1[:m].sum() / (m * T)
        t2 = 24 * (zt[kk:] @ Gz[:m]) / (m * D)
        t4 = 12.0 * (m**3 - m * (3 * kk**2 + 1)) * z_G_z / (m * D**2)
        out[n] = g[kk] - t1 - t2 + t4 + one_G_one / T**2
    return _ret(out, k)


def _pair_weights(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients c_h such that Σ_{i,j} a_i b_j γ_{|i-j|} = Σ_h c_h γ_h."""
    T = len(a)
    cc = correlate(b, a, mode="full")
    c = cc[T - 1 :].copy()
    c[1:] += cc[T - 2 :: -1]
    return c


def expectation_weights(T: int, lags, trend: TrendSpec) -> np.ndarray:
    """Matrix W with E(γ̂_k) = W[n] @ (γ_0..γ_{T-1}) for k = lags[n].

    Precomputing W turns every later expectation into a dot product, which is
    what the estimators use inside their objective functions.
    """
    lags = np.atleast_1d(np.asarray(lags, dtype=int))
    if np.any(lags < 0) or np.any(lags >= T):
        raise ValueError(f"lags must lie in 0..{T - 1}")
    W = np.zeros((len(lags), T))
    W[np.arange(len(lags)), lags] = 1.0
    if isinstance(trend, KnownMean):
        return W
    if isinstance(trend, ConstantUnknown):
        for n, k in enumerate(lags):
            W[n] += weights(T, int(k))
        return W
    z = trend.regressor(T)
    if z is None:
        raise TypeError(f"unsupported trend {trend!r}")
    zt = z - z.mean()
    S = np.sum(zt**2)
    ones = np.ones(T)
    one_one = _pair_weights(ones, ones)
    one_z = _pair_weights(ones, zt)
    z_z = _pair_weights(zt, zt)
    for n, k in enumerate(lags):
        m = T - k
        head = np.r_[np.ones(m), np.zeros(k)]
        lead = np.r_[zt[k:], np.zeros(k)]  # z̃_{t+k} placed at t
        lag_ = np.r_[np.zeros(k), zt[:m]]  # z̃_t placed at t+k
        W[n] -= 2 * _pair_weights(head, ones) / (m * T)
        W[n] -= (_pair_weights(lead, zt) + _pair_weights(lag_, zt)) / (m * S)
        W[n] += (zt[:m].sum() + zt[k:].sum()) * one_z / (m * T * S)
        W[n] += (zt[:m] @ zt[k:]) * z_z / (m * S**2)
        W[n] += one_one / T**2
    return W


def expected_acv(acv, T: int, k, trend: TrendSpec):
    """Dispatch to the trend-appropriate closed form."""
    if isinstance(trend, KnownMean):
        g, ks = _check_lags(acv, T, k)
        return _ret(g[ks], k)
    if isinstance(trend, ConstantUnknown):
        return expected_acv_constant_mean(acv, T, k)
    if isinstance(trend, TimeTrend):
        return expected_acv_time_trend(acv, T, k)
    if isinstance(trend, LinearRegressor):
        return expected_acv_linear_regressor(acv, T, k, trend.regressor(T))
    raise TypeError(f"unsupported trend {trend!r}")


@dataclass
class BiasProfile:
    """Per-lag expectations and biases of the sample autocovariance."""

    T: int
    lags: np.ndarray
    gamma: np.ndarray
    expected_acv: np.ndarray
    bias_gamma: np.ndarray
    bias_rho: np.ndarray
    corrected_acf: np.ndarray

    def rows(self):
        for n, k in enumerate(self.lags):
            yield (int(k), self.gamma[n], self.expected_acv[n], self.bias_gamma[n],
                   self.bias_rho[n], self.corrected_acf[n])


def corrected_acf(model: ModelSpec, T: int, trend: TrendSpec, lags=None) -> BiasProfile:
    """Bias profile and ρ_{T,k} = E(γ̂_k) / E(γ̂_0) for a model at sample size T.

    For ``KnownMean`` the sample autocovariance is unbiased and ρ_{T,k} = ρ_k.
    """
    if lags is None:
        lags = np.arange(T)
    lags = np.atleast_1d(np.asarray(lags, dtype=int))
    gamma = arfima_acv(model, T - 1)
    all_lags = np.r_[0, lags]
    expct = np.asarray(expected_acv(gamma, T, all_lags, trend), dtype=float)
    e0 = expct[0]
    if not e0 > 0:
        raise ArithmeticError(f"expected lag-0 autocovariance is not positive ({e0})")
    e = expct[1:]
    bias_gamma = e - gamma[lags]
    return BiasProfile(
        T=T,
        lags=lags,
        gamma=gamma[lags],
        expected_acv=e,
        bias_gamma=bias_gamma,
        bias_rho=bias_gamma / gamma[0],
        corrected_acf=e / e0,
    )

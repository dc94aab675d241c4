"""Sample-side statistics: mean/trend removal, sample autocovariances, periodogram."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bias import ConstantUnknown, KnownMean, TrendSpec


def as_series(values, min_len: int = 4) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(x) < min_len:
        raise ValueError(f"series needs at least {min_len} observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    return x


@dataclass
class DetrendResult:
    residuals: np.ndarray
    alpha_hat: float | None = None
    beta_hat: float | None = None


def detrend(series, trend: TrendSpec) -> DetrendResult:
    """Remove the mean implied by ``trend``.

    Regressor trends are fitted by least squares as μ̂_t = X̄ + β̂ z̃_t with
    z̃_t = z_t - z̄ and β̂ = Σ z̃_t X_t / Σ z̃_t².
    """
    x = as_series(series)
    if isinstance(trend, KnownMean):
        return DetrendResult(x - trend.mu)
    xbar = x.mean()
    if isinstance(trend, ConstantUnknown):
        return DetrendResult(x - xbar, alpha_hat=xbar)
    z = trend.regressor(len(x))
    if z is None:
        raise TypeError(f"unsupported trend {trend!r}")
    zt = z - z.mean()
    S = zt @ zt
    if S <= 0:
        raise ValueError("degenerate regressor: sum of squared deviations is zero")
    beta = (zt @ x) / S
    resid = x - xbar - beta * zt
    return DetrendResult(resid, alpha_hat=xbar - beta * z.mean(), beta_hat=beta)


def sample_acv(residuals, k):
    """γ̂_k = Σ_{j=1}^{T-k} e_j e_{j+k} / (T - k).

    The divisor is T - k (not T) so that the estimator is unbiased when the
    mean is known.
    """
    e = np.asarray(residuals, dtype=float)
    T = len(e)
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(ks < 0) or np.any(ks >= T):
        raise ValueError(f"lag must satisfy 0 <= k <= T-1 = {T - 1}")
    out = np.array([e[: T - kk] @ e[kk:] / (T - kk) for kk in ks])
    return float(out[0]) if np.ndim(k) == 0 else out


def sample_acf(residuals, lags):
    """ρ̂_k = γ̂_k / γ̂_0 at the requested lags."""
    g0 = sample_acv(residuals, 0)
    if not g0 > 0:
        raise ValueError("sample variance is zero; autocorrelation is undefined")
    return sample_acv(residuals, lags) / g0


def fourier_frequencies(T: int) -> np.ndarray:
    """ω_j = 2πj/T for j = 1..⌊T/2⌋."""
    return 2 * np.pi * np.arange(1, T // 2 + 1) / T


def periodogram(series, method: str = "fft"):
    """Periodogram I(ω_j) = |Σ_t x_t e^{iω_j t}|² / (2πT) at the Fourier frequencies.

    Returns ``(omega, I)`` for j = 1..⌊T/2⌋. ``method="direct"`` evaluates the
    sums explicitly in O(T²).
    """
    x = as_series(series)
    T = len(x)
    omega = fourier_frequencies(T)
    if method == "fft":
        dft = np.fft.fft(x)[1 : T // 2 + 1]
    elif method == "direct":
        t = np.arange(1, T + 1)
        dft = np.exp(1j * np.outer(omega, t)) @ x
    else:
        raise ValueError(f"unknown periodogram method {method!r}")
    return omega, np.abs(dft) ** 2 / (2 * np.pi * T)

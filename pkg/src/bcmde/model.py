"""
Theoretical second-order structure of ARMA and ARFIMA processes.

The model is

    φ(B) (1 - B)^d (X_t - μ) = θ(B) a_t,

with φ(B) = 1 - φ_1 B - ... - φ_p B^p, θ(B) = 1 + θ_1 B + ... + θ_q B^q and
Var(a_t) = σ². Autocovariances of the full model are obtained by convolving
the autocovariances of the ARMA component with those of fractional white
noise (the "splitting" method).

All functions return plain numpy arrays indexed by lag.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

ROOT_MARGIN = 1e-9
TRUNC_RTOL = 1e-14


@dataclass(frozen=True)
class ModelSpec:
    """ARFIMA(p, d, q) model description.

    Parameters
    ----------
    ar : sequence of float
        Autoregressive coefficients φ_1..φ_p (sign convention φ(B) = 1 - Σ φ_i B^i).
    ma : sequence of float
        Moving-average coefficients θ_1..θ_q (θ(B) = 1 + Σ θ_j B^j).
    d : float
        Memory parameter.
    sigma2 : float
        Innovation variance.
    """

    ar: tuple = ()
    ma: tuple = ()
    d: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(c) for c in np.atleast_1d(self.ar)))
        object.__setattr__(self, "ma", tuple(float(c) for c in np.atleast_1d(self.ma)))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)

    def violations(self) -> list[str]:
        """Return human-readable descriptions of every violated invariant."""
        out = []
        if not np.isfinite(self.d) or not -0.5 < self.d < 0.5:
            out.append(f"memory parameter d={self.d} must lie in (-0.5, 0.5)")
        if not self.sigma2 > 0:
            out.append(f"innovation variance sigma2={self.sigma2} must be positive")
        if self.p and min_root_modulus(ar_polynomial(self.ar)) <= 1 + ROOT_MARGIN:
            out.append("AR polynomial has a root on or inside the unit circle (non-stationary)")
        if self.q and min_root_modulus(ma_polynomial(self.ma)) <= 1 + ROOT_MARGIN:
            out.append("MA polynomial has a root on or inside the unit circle (non-invertible)")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> "ModelSpec":
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def with_sigma2(self, sigma2: float) -> "ModelSpec":
        return ModelSpec(self.ar, self.ma, self.d, sigma2)


@dataclass(frozen=True)
class ModelStructure:
    """Which components of a ModelSpec are free during estimation.

    The estimation vector is ordered (φ_1..φ_p, θ_1..θ_q, d), with d present
    only when ``estimate_d`` is set.
    """

    p: int = 0
    q: int = 0
    estimate_d: bool = False
    fixed_d: float = field(default=0.0)

    @property
    def n_params(self) -> int:
        return self.p + self.q + int(self.estimate_d)

    @property
    def names(self) -> list[str]:
        names = [f"phi{i + 1}" for i in range(self.p)]
        names += [f"theta{j + 1}" for j in range(self.q)]
        if self.estimate_d:
            names.append("d")
        return names

    def unpack(self, params, sigma2: float = 1.0) -> ModelSpec:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        ar = params[: self.p]
        ma = params[self.p : self.p + self.q]
        d = params[-1] if self.estimate_d else self.fixed_d
        return ModelSpec(ar, ma, d, sigma2)

    def pack(self, model: ModelSpec) -> np.ndarray:
        if model.p != self.p or model.q != self.q:
            raise ValueError("model orders do not match the structure")
        vals = list(model.ar) + list(model.ma)
        if self.estimate_d:
            vals.append(model.d)
        return np.array(vals, dtype=float)

    @classmethod
    def of(cls, model: ModelSpec, estimate_d: bool | None = None) -> "ModelStructure":
        if estimate_d is None:
            estimate_d = model.d != 0.0
        return cls(model.p, model.q, estimate_d, 0.0 if estimate_d else model.d)


def ar_polynomial(ar: Sequence[float]) -> np.ndarray:
    """Coefficients of φ(z) in increasing powers of z."""
    return np.r_[1.0, -np.asarray(ar, dtype=float)]


def ma_polynomial(ma: Sequence[float]) -> np.ndarray:
    """Coefficients of θ(z) in increasing powers of z."""
    return np.r_[1.0, np.asarray(ma, dtype=float)]


def min_root_modulus(coefs: np.ndarray) -> float:
    """Smallest |root| of c_0 + c_1 z + ... with c_0 = 1.

    Works on the reciprocal (monic) polynomial so tiny trailing coefficients
    cannot overflow the companion matrix.
    """
    coefs = np.asarray(coefs, dtype=float)
    if len(coefs) <= 1 or not np.any(coefs[1:]):
        return np.inf
    with np.errstate(divide="ignore", over="ignore"):
        if len(coefs) == 2:
            return float(abs(coefs[0] / coefs[1]))
        return float(1.0 / np.abs(np.roots(coefs / coefs[0])).max())


def _check_d(d: float):
    if not -0.5 < d < 0.5:
        raise ValueError(f"memory parameter d={d} must lie in (-0.5, 0.5)")


def fwn_acf(d: float, max_lag: int) -> np.ndarray:
    """Autocorrelations ρ_0..ρ_K of fractional white noise ARFIMA(0, d, 0).

    ρ_k = Π_{i=1}^{k} (i - 1 + d) / (i - d), accumulated as a running product.
    """
    _check_d(d)
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    i = np.arange(1, max_lag + 1, dtype=float)
    return np.r_[1.0, np.cumprod((i - 1 + d) / (i - d))]


def fwn_variance(d: float) -> float:
    """Variance Γ(1 - 2d) / Γ(1 - d)² of unit-innovation fractional white noise."""
    if not d < 0.5:
        raise ValueError(f"fractional white noise variance diverges for d={d} >= 0.5")
    return float(np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d)))


def fwn_acf_deriv(d: float, k):
    """Derivative of the fractional white noise autocorrelation ρ_k with respect to d.

    Uses the log-derivative expansion

        ρ_k'(d) = Π_{i=2}^k (i-1+d)/(i-d) / (1-d)
                  + ρ_k(d) [Σ_{i=2}^k 1/(i-1+d) + Σ_{i=1}^k 1/(i-d)],

    which is continuous through d = 0, where it equals 1/k.
    """
    _check_d(d)
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(ks < 1):
        raise ValueError("lag must be a positive integer")
    K = int(ks.max())
    i = np.arange(1, K + 1, dtype=float)
    rho = np.cumprod((i - 1 + d) / (i - d))
    tail = np.r_[1.0, np.cumprod((i[1:] - 1 + d) / (i[1:] - d))]  # Π_{i=2}^k
    s1 = np.r_[0.0, np.cumsum(1.0 / (i[1:] - 1 + d))]
    s2 = np.cumsum(1.0 / (i - d))
    deriv = tail / (1 - d) + rho * (s1 + s2)
    out = deriv[ks - 1]
    return float(out[0]) if np.ndim(k) == 0 else out


def psi_weights(ar: Sequence[float], ma: Sequence[float], min_len: int = 1) -> np.ndarray:
    """MA(∞) weights ψ_0, ψ_1, ... of θ(B)/φ(B), truncated once negligible.

    The series is cut at the first index J >= min_len after which
    max(p, 1) consecutive weights stay below 1e-14 of the largest weight.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    run = max(len(ar), 1)
    n = max(min_len + run, 64)
    while True:
        impulse = np.zeros(n)
        impulse[0] = 1.0
        psi = lfilter(ma_polynomial(ma), ar_polynomial(ar), impulse)
        small = np.abs(psi) < TRUNC_RTOL * np.max(np.abs(psi))
        if len(ar) == 0:
            return psi[: max(min_len, len(ma) + 1)]
        # first J >= min_len that starts a run of `run` small weights
        window = np.convolve(small.astype(int), np.ones(run, dtype=int), "valid") == run
        hits = np.flatnonzero(window[min_len:])
        if hits.size:
            return psi[: min_len + hits[0]]
        n *= 2
        if n > 2**24:
            raise ValueError("MA(inf) expansion does not decay; model is not stationary")


def arma_acv(ar: Sequence[float], ma: Sequence[float], sigma2: float, max_lag: int) -> np.ndarray:
    """Autocovariances γ_0..γ_K of an ARMA(p, q) process.

    The first max(p, q) + 1 values come from γ_k = σ² Σ_j ψ_j ψ_{j+k}; later
    lags follow the homogeneous recursion γ_k = Σ_i φ_i γ_{k-i} (k > q).
    """
    return _arma_acv(ModelSpec(ar, ma, 0.0, sigma2).validate(), max_lag)


def _arma_acv(model: ModelSpec, max_lag: int) -> np.ndarray:
    sigma2 = model.sigma2
    k0 = min(max(model.p, model.q) + 1, max_lag + 1)
    psi = psi_weights(model.ar, model.ma, min_len=k0 + model.q)
    J = len(psi)
    head = np.array([psi[: J - k] @ psi[k:] if k < J else 0.0 for k in range(k0)])
    # residual of the AR recursion is zero past k0, so filtering it back extends γ exactly
    phi = ar_polynomial(model.ar)
    r = np.zeros(max_lag + 1)
    r[:k0] = lfilter(phi, [1.0], head)
    return sigma2 * lfilter([1.0], phi, r)


def arfima_acv(model: ModelSpec, max_lag: int) -> np.ndarray:
    """Autocovariances γ_0..γ_K of an ARFIMA(p, d, q) process.

    Computed as γ_k = σ^{-2} Σ_i γ^{(1)}_i γ^{(2)}_{i-k} where γ^{(1)} belongs to
    the ARMA part and γ^{(2)} to fractional white noise, both with variance σ².
    The sum over i is cut where γ^{(1)} falls below 1e-14 of γ^{(1)}_0.
    """
    model.validate()
    s2 = model.sigma2
    if model.d == 0.0:
        return _arma_acv(model, max_lag)
    if model.p == 0 and model.q == 0:
        return s2 * fwn_variance(model.d) * fwn_acf(model.d, max_lag)

    psi = psi_weights(model.ar, model.ma, min_len=model.q + 1)
    J = len(psi)
    g1 = np.array([psi[: J - k] @ psi[k:] for k in range(J)]) * s2
    keep = np.abs(g1) >= TRUNC_RTOL * g1[0]
    N = int(np.flatnonzero(keep)[-1])
    g1 = g1[: N + 1]
    g2 = s2 * fwn_variance(model.d) * fwn_acf(model.d, max_lag + N)
    # two-sided sequences: a over lags -N..N, b over lags -N..K+N
    a = np.r_[g1[:0:-1], g1]
    b = np.r_[g2[N:0:-1], g2]
    return np.convolve(b, a, "valid") / s2


def arfima_acf(model: ModelSpec, max_lag: int) -> np.ndarray:
    acv = arfima_acv(model, max_lag)
    return acv / acv[0]


def transfer_gain(model: ModelSpec, omega) -> np.ndarray:
    """|θ(e^{-iω})|² / |φ(e^{-iω})|² · |2 sin(ω/2)|^{-2d} (spectral shape without σ²/2π)."""
    omega = np.asarray(omega, dtype=float)
    z = np.exp(-1j * omega)
    num = np.abs(np.polynomial.polynomial.polyval(z, ma_polynomial(model.ma))) ** 2
    den = np.abs(np.polynomial.polynomial.polyval(z, ar_polynomial(model.ar))) ** 2
    g = num / den
    if model.d != 0.0:
        with np.errstate(divide="ignore"):
            g = g * np.abs(2 * np.sin(omega / 2)) ** (-2 * model.d)
    return g


def spectral_density(model: ModelSpec, omega):
    """Spectral density f(ω) = (2 sin(ω/2))^{-2d} σ²/(2π) |θ(e^{-iω})|² / |φ(e^{-iω})|²."""
    w = np.asarray(omega, dtype=float)
    if model.d > 0 and np.any(w == 0):
        raise ValueError("spectral density diverges at omega=0 for d > 0")
    f = model.sigma2 / (2 * np.pi) * transfer_gain(model, w)
    return float(f) if f.ndim == 0 else f

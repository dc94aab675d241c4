"""
Objective functions and fitting for ARMA/ARFIMA parameters.

Four estimators share one ``fit`` entry point:

``mde``
    weighted distance between sample and theoretical autocorrelations;
``bcmde``
    the same distance, but against E(γ̂_k)/E(γ̂_0), the approximate
    expectation of the sample autocorrelation under the chosen mean regime;
``whittle``
    frequency-domain quasi-likelihood over the Fourier frequencies;
``mle``
    exact Gaussian likelihood through the Durbin-Levinson recursion.

σ² is profiled out analytically for ``whittle`` and ``mle``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .bias import ConstantUnknown, TrendSpec, expectation_weights
from .model import ModelSpec, ModelStructure, arfima_acf, arfima_acv, transfer_gain
from .sample import as_series, detrend, periodogram, sample_acf, sample_acv

METHODS = ("mde", "bcmde", "whittle", "mle")
WEIGHTINGS = ("identity", "inverse_c")

AR_MA_BOUND = 0.99
D_BOUND = 0.49
GRID_POINTS = 41


@dataclass
class EstimationOptions:
    """Settings for ``fit``.

    ``bounds`` may hold one ``(lo, hi)`` pair per free parameter; when absent
    AR/MA coefficients use [-0.99, 0.99] and d uses [-0.49, 0.49].
    """

    method: str = "bcmde"
    lags: tuple = (1,)
    weighting: str = "identity"
    bounds: list | None = None
    xtol: float = 1e-8
    ftol: float = 1e-12
    maxiter: int = 500
    c_truncation: int = 100_000

    def __post_init__(self):
        self.method = self.method.lower()
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        self.weighting = self.weighting.lower()
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}; expected one of {WEIGHTINGS}")
        lags = tuple(int(k) for k in np.atleast_1d(self.lags))
        if not lags or min(lags) < 1 or any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError("lags must be non-empty, strictly increasing and >= 1")
        self.lags = lags

    def bounds_for(self, structure: ModelStructure) -> list[tuple[float, float]]:
        if self.bounds is None:
            b = [(-AR_MA_BOUND, AR_MA_BOUND)] * (structure.p + structure.q)
            if structure.estimate_d:
                b.append((-D_BOUND, D_BOUND))
            return b
        b = [tuple(map(float, pair)) for pair in self.bounds]
        if len(b) != structure.n_params:
            raise ValueError(f"expected {structure.n_params} bound pairs, got {len(b)}")
        for lo, hi in b:
            if not lo < hi:
                raise ValueError(f"empty bound interval ({lo}, {hi})")
        return b


@dataclass
class EstimateResult:
    params: np.ndarray
    names: list
    objective_value: float
    iterations: int
    converged: bool
    method: str
    sigma2_hat: float
    structure: ModelStructure = field(repr=False, default=None)

    @property
    def model(self) -> ModelSpec:
        return self.structure.unpack(self.params, self.sigma2_hat)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "params": dict(zip(self.names, map(float, self.params))),
            "objective_value": float(self.objective_value),
            "sigma2_hat": float(self.sigma2_hat),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "structure": asdict(self.structure) if self.structure else None,
        }


def _quad(diff, W):
    diff = np.asarray(diff, dtype=float)
    if W is None:
        return float(diff @ diff)
    return float(diff @ np.atleast_2d(W) @ diff)


def mde_objective(model: ModelSpec, rho_hat, lags, W=None) -> float:
    """S(λ) = (ρ̂ - ρ(λ))' W (ρ̂ - ρ(λ)); W defaults to the identity."""
    lags = np.asarray(lags, dtype=int)
    rho = arfima_acf(model, int(lags.max()))[lags]
    return _quad(np.asarray(rho_hat) - rho, W)


def corrected_targets(model: ModelSpec, exp_weights: np.ndarray) -> tuple[np.ndarray, float]:
    """ρ_{T,k} at the lags encoded in ``exp_weights`` (row 0 must be lag 0).

    Also returns E(γ̂_0) for a unit-variance innovation.
    """
    T = exp_weights.shape[1]
    g = arfima_acv(model.with_sigma2(1.0), T - 1)
    e = exp_weights @ g
    if not e[0] > 0:
        raise ArithmeticError("expected lag-0 sample autocovariance is not positive")
    return e[1:] / e[0], e[0]


def bcmde_objective(model: ModelSpec, rho_hat, T: int, trend: TrendSpec, lags, W=None,
                    exp_weights=None) -> float:
    """S(λ) = (ρ̂ - ρ_T(λ))' W (ρ̂ - ρ_T(λ)) with ρ_{T,k} = E(γ̂_k)/E(γ̂_0).

    ``exp_weights`` may carry ``expectation_weights(T, [0, *lags], trend)``
    precomputed, which is how ``fit`` calls it.
    """
    if exp_weights is None:
        exp_weights = expectation_weights(T, np.r_[0, np.asarray(lags, dtype=int)], trend)
    rho_T, _ = corrected_targets(model, exp_weights)
    return _quad(np.asarray(rho_hat) - rho_T, W)


def whittle_objective(model: ModelSpec, omega, I) -> tuple[float, float]:
    """Concentrated Whittle objective and the profiled σ².

    With f = σ²/(2π) g_λ, σ̂² = (2π/M) Σ I(ω_j)/g_λ(ω_j) and the objective is
    Σ_j [log f(ω_j) + I(ω_j)/f(ω_j)] evaluated at σ̂².
    """
    g = transfer_gain(model, omega)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ValueError("spectral shape vanishes or diverges at a Fourier frequency")
    M = len(omega)
    s2 = 2 * np.pi / M * np.sum(I / g)
    value = M * np.log(s2 / (2 * np.pi)) + np.sum(np.log(g)) + M
    return float(value), float(s2)


def durbin_levinson(acv, x=None):
    """One-step prediction by the Durbin-Levinson recursion.

    Parameters
    ----------
    acv : array_like
        γ_0..γ_{n-1}.
    x : array_like, optional
        Series of length n. When given, innovations x_t - x̂_t are returned.

    Returns
    -------
    coefs : ndarray, shape (n, n)
        Row t holds the prediction coefficients so that x̂_t = coefs[t, :t] @ x[:t].
        Only returned when ``x`` is None.
    innovations : ndarray
        Only returned when ``x`` is given.
    v : ndarray
        Prediction error variances v_0..v_{n-1}.
    """
    acv = np.asarray(acv, dtype=float)
    n = len(acv) if x is None else len(x)
    if len(acv) < n:
        raise ValueError("autocovariance sequence shorter than the series")
    phi = np.zeros(n)
    v = np.empty(n)
    v[0] = acv[0]
    if x is None:
        coefs = np.zeros((n, n))
    else:
        x = np.asarray(x, dtype=float)
        innov = np.empty(n)
        innov[0] = x[0]
    for t in range(1, n):
        prev = phi[: t - 1]
        kappa = (acv[t] - prev @ acv[t - 1 : 0 : -1]) / v[t - 1]
        phi[: t - 1] = prev - kappa * prev[::-1]
        phi[t - 1] = kappa
        v[t] = v[t - 1] * (1 - kappa**2)
        if not v[t] > 0:
            raise np.linalg.LinAlgError("autocovariance matrix is not positive definite")
        if x is None:
            coefs[t, :t] = phi[:t][::-1]
        else:
            innov[t] = x[t] - phi[:t] @ x[t - 1 :: -1]
    if x is None:
        return coefs, v
    return innov, v


def exact_gaussian_loglik(model: ModelSpec, residuals) -> tuple[float, float]:
    """Exact Gaussian log-likelihood with σ² profiled out.

    Returns ``(loglik, sigma2_hat)`` where σ̂² = mean(e_t² / v_t) over the
    standardized one-step prediction errors.
    """
    x = np.asarray(residuals, dtype=float)
    T = len(x)
    if T < 2:
        raise ValueError("exact likelihood needs at least two observations")
    acv = arfima_acv(model.with_sigma2(1.0), T - 1)
    e, v = durbin_levinson(acv, x)
    s2 = float(np.mean(e**2 / v))
    loglik = -0.5 * T * (np.log(2 * np.pi * s2) + 1) - 0.5 * np.sum(np.log(v))
    return float(loglik), s2


def asymptotic_cov_C(acf, lags, truncation: int = 100_000, term_tol: float = 1e-12) -> np.ndarray:
    """Asymptotic covariance of sample autocorrelations at ``lags``.

    C_ij = Σ_{l≥1} (ρ_{l-i} + ρ_{l+i} - 2ρ_iρ_l)(ρ_{l-j} + ρ_{l+j} - 2ρ_jρ_l),
    truncated after ``truncation`` terms or once every summand drops below
    ``term_tol``. ``acf`` must reach lag truncation + max(lags) or the sum is
    cut where it runs out.
    """
    rho = np.asarray(acf, dtype=float)
    lags = np.asarray(lags, dtype=int)
    kmax = int(lags.max())
    L = min(truncation, len(rho) - 1 - kmax)
    if L < 1:
        raise ValueError("autocorrelations too short for the requested lags")
    l = np.arange(1, L + 1)
    a = np.array([rho[np.abs(l - i)] + rho[l + i] - 2 * rho[i] * rho[l] for i in lags])
    big = np.flatnonzero(np.max(np.abs(a), axis=0) ** 2 >= term_tol)
    stop = big[-1] + 1 if big.size else 0
    a = a[:, :stop]
    C = a @ a.T
    return (C + C.T) / 2


def model_cov_C(model: ModelSpec, lags, truncation: int = 100_000) -> np.ndarray:
    lags = np.asarray(lags, dtype=int)
    return asymptotic_cov_C(arfima_acf(model, truncation + int(lags.max())), lags, truncation)


def _minimize(objective, bounds, opts: EstimationOptions):
    """Bounded derivative-free minimization.

    One parameter: coarse grid to locate the basin, then bounded Brent
    (golden-section with parabolic steps). Several parameters: Nelder-Mead
    restarted from the box centre and the two half-width corners.
    """
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def safe(theta):
        try:
            val = objective(np.atleast_1d(theta))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            return np.inf
        return val if np.isfinite(val) else np.inf

    if len(bounds) == 1:
        grid = np.linspace(lo[0], hi[0], GRID_POINTS)
        vals = np.array([safe(g) for g in grid])
        if not np.any(np.isfinite(vals)):
            raise ValueError("objective is not finite anywhere on the parameter box")
        i = int(np.argmin(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
        res = minimize_scalar(safe, bounds=(a, b), method="bounded",
                              options={"xatol": opts.xtol, "maxiter": opts.maxiter})
        x, fx = np.array([res.x]), float(res.fun)
        if vals[i] < fx:
            x, fx = np.array([grid[i]]), float(vals[i])
        return x, fx, int(res.nfev) + GRID_POINTS, bool(res.success)

    centre = (lo + hi) / 2
    half = (hi - lo) / 2
    starts = [centre, centre + half / 2, centre - half / 2]
    best = None
    total = 0
    for x0 in starts:
        res = minimize(safe, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"xatol": opts.xtol, "fatol": opts.ftol,
                                "maxiter": opts.maxiter, "maxfev": 4 * opts.maxiter})
        total += int(res.nit)
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise ValueError("objective is not finite anywhere on the parameter box")
    return np.clip(best.x, lo, hi), float(best.fun), total, bool(best.success)


def fit(series, structure: ModelStructure, trend: TrendSpec | None = None,
        options: EstimationOptions | None = None) -> EstimateResult:
    """Estimate the free parameters of ``structure`` from ``series``.

    The series is first cleaned of its mean according to ``trend`` (default
    an unknown constant mean); the chosen objective is then minimized over
    the parameter box.
    """
    trend = ConstantUnknown() if trend is None else trend
    opts = EstimationOptions() if options is None else options
    x = as_series(series)
    T = len(x)
    if T < 4 + structure.p + structure.q:
        raise ValueError(f"series of length {T} too short for p={structure.p}, q={structure.q}")
    if structure.n_params == 0:
        raise ValueError("structure has no free parameters")
    bounds = opts.bounds_for(structure)
    resid = detrend(x, trend).residuals
    lags = np.asarray(opts.lags, dtype=int)
    method = opts.method

    if method in ("mde", "bcmde"):
        if lags.max() >= T:
            raise ValueError("largest lag must be below the sample size")
        rho_hat = sample_acf(resid, lags)
        if method == "bcmde":
            exp_w = expectation_weights(T, np.r_[0, lags], trend)

            def obj(theta, W=None):
                return bcmde_objective(structure.unpack(theta), rho_hat, T, trend, lags, W, exp_w)
        else:
            def obj(theta, W=None):
                return mde_objective(structure.unpack(theta), rho_hat, lags, W)

        theta, fval, nit, ok = _minimize(obj, bounds, opts)
        if opts.weighting == "inverse_c":
            W = np.linalg.inv(model_cov_C(structure.unpack(theta), lags, opts.c_truncation))
            theta, fval, nit2, ok = _minimize(lambda t: obj(t, W), bounds, opts)
            nit += nit2
        model = structure.unpack(theta)
        g0 = sample_acv(resid, 0)
        if method == "bcmde":
            _, e0 = corrected_targets(model, exp_w)
        else:
            e0 = arfima_acv(model, 0)[0]
        sigma2 = g0 / e0
    elif method == "whittle":
        # the mean only affects ω_0, which the Fourier grid excludes
        source = x if isinstance(trend, ConstantUnknown) else resid
        omega, I = periodogram(source)
        theta, fval, nit, ok = _minimize(
            lambda t: whittle_objective(structure.unpack(t), omega, I)[0], bounds, opts)
        sigma2 = whittle_objective(structure.unpack(theta), omega, I)[1]
    else:
        theta, fval, nit, ok = _minimize(
            lambda t: -exact_gaussian_loglik(structure.unpack(t), resid)[0], bounds, opts)
        sigma2 = exact_gaussian_loglik(structure.unpack(theta), resid)[1]

    return EstimateResult(
        params=np.asarray(theta, dtype=float),
        names=structure.names,
        objective_value=fval,
        iterations=nit,
        converged=ok and np.isfinite(fval),
        method=method,
        sigma2_hat=float(sigma2),
        structure=structure,
    )


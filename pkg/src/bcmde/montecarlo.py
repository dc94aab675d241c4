"""
Gaussian simulation and the Monte Carlo replication harness.

Every replication draws from its own generator seeded by ``(seed, rep)``,
so results do not depend on how replications are scheduled across worker
processes. Moments are aggregated in replication order with compensated
summation.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .bias import ConstantUnknown, KnownMean, TimeTrend, TrendSpec, parse_trend
from .estimators import EstimationOptions, durbin_levinson, fit
from .model import ModelSpec, ModelStructure, ar_polynomial, arfima_acv, ma_polynomial


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep)])


@lru_cache(maxsize=32)
def _prediction_factor(model: ModelSpec, T: int):
    coefs, v = durbin_levinson(arfima_acv(model, T - 1))
    return coefs, np.sqrt(v)


def simulate_gaussian(model: ModelSpec, T: int, rng: np.random.Generator) -> np.ndarray:
    """Exact zero-mean stationary Gaussian path of length T.

    x_1 ~ N(0, γ_0); every later value is drawn from its conditional normal
    given the past, using Durbin-Levinson prediction coefficients.
    """
    model.validate()
    coefs, sd = _prediction_factor(model, T)
    z = rng.standard_normal(T)
    x = np.empty(T)
    x[0] = sd[0] * z[0]
    for t in range(1, T):
        x[t] = coefs[t, :t] @ x[:t] + sd[t] * z[t]
    return x


def simulate_recursive_arma(ar, ma, sigma2: float, T: int, burn_in: int,
                            rng: np.random.Generator) -> np.ndarray:
    """ARMA path by direct recursion from a zero initial state, burn-in discarded."""
    model = ModelSpec(ar, ma, 0.0, sigma2).validate()
    a = np.sqrt(sigma2) * rng.standard_normal(burn_in + T)
    x = lfilter(ma_polynomial(model.ma), ar_polynomial(model.ar), a)
    return x[burn_in:]


def apply_trend(series, trend: TrendSpec, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    """Add the deterministic mean α + β z_t implied by ``trend``."""
    x = np.asarray(series, dtype=float)
    if isinstance(trend, KnownMean):
        return x + trend.mu
    if isinstance(trend, ConstantUnknown):
        return x + alpha
    z = trend.regressor(len(x))
    return x + alpha + beta * z


@dataclass
class ExperimentConfig:
    model: ModelSpec
    T: int
    trend: TrendSpec = field(default_factory=ConstantUnknown)
    estimators: tuple = ("whittle", "mle", "mde", "bcmde")
    reps: int = 1000
    burn_in: int = 500
    seed: int = 20240101
    options: EstimationOptions = field(default_factory=EstimationOptions)
    alpha: float = 0.0
    beta: float = 1.0
    generator: str = "exact"
    estimate_d: bool | None = None

    def __post_init__(self):
        self.model.validate()
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.T < 10:
            raise ValueError("T must be at least 10")
        if self.generator not in ("exact", "recursive"):
            raise ValueError("generator must be 'exact' or 'recursive'")
        if self.generator == "recursive" and self.model.d != 0:
            raise ValueError("the recursive generator only supports ARMA models (d = 0)")
        self.estimators = tuple(m.lower() for m in self.estimators)
        for m in self.estimators:
            EstimationOptions(method=m)

    @property
    def structure(self) -> ModelStructure:
        return ModelStructure.of(self.model, self.estimate_d)

    def true_params(self) -> np.ndarray:
        return self.structure.pack(self.model)

    def simulate(self, rep: int) -> np.ndarray:
        rng = replication_rng(self.seed, rep)
        m = self.model
        if self.generator == "exact":
            x = simulate_gaussian(m, self.T, rng)
        else:
            x = simulate_recursive_arma(m.ar, m.ma, m.sigma2, self.T, self.burn_in, rng)
        return apply_trend(x, self.trend, self.alpha, self.beta)


@dataclass
class EstimatorSummary:
    method: str
    param: str
    true: float
    mean: float
    sd: float
    rmse: float
    failures: int
    n: int


@dataclass
class McSummary:
    config: ExperimentConfig
    rows: list
    estimates: dict = field(repr=False, default_factory=dict)

    def row(self, method: str, param: str | None = None) -> EstimatorSummary:
        for r in self.rows:
            if r.method == method and (param is None or r.param == param):
                return r
        raise KeyError(method)

    def to_records(self, reference: dict | None = None) -> list[dict]:
        """Plain dict rows; undefined moments become ``None`` (JSON null)."""
        out = []
        for r in self.rows:
            rec = {"method": r.method, "param": r.param, "true": r.true, "mean": r.mean,
                   "sd": r.sd, "rmse": r.rmse, "failures": r.failures, "n": r.n,
                   "seed": self.config.seed}
            rec = {k: (None if isinstance(v, float) and math.isnan(v) else v)
                   for k, v in rec.items()}
            if reference and r.method in reference:
                pm, ps, pr = reference[r.method]
                rec.update(ref_mean=pm, ref_sd=ps, ref_rmse=pr)
            out.append(rec)
        return out

    def to_json(self, reference: dict | None = None) -> str:
        return json.dumps(self.to_records(reference), indent=2)


def _fit_one(config: ExperimentConfig, x, method):
    opts = replace(config.options, method=method)
    try:
        res = fit(x, config.structure, config.trend, opts)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        return None
    return res.params if res.converged else None


def _run_block(config: ExperimentConfig, reps) -> np.ndarray:
    k = config.structure.n_params
    out = np.full((len(reps), len(config.estimators), k), np.nan)
    for i, rep in enumerate(reps):
        x = config.simulate(rep)
        for j, method in enumerate(config.estimators):
            est = _fit_one(config, x, method)
            if est is not None:
                out[i, j] = est
    return out


def summarize(config: ExperimentConfig, estimates: np.ndarray) -> McSummary:
    """Mean, SD (divisor n - 1) and RMSE against the true value per estimator."""
    true = config.true_params()
    names = config.structure.names
    rows = []
    per_method = {}
    for j, method in enumerate(config.estimators):
        est = estimates[:, j, :]
        ok = np.all(np.isfinite(est), axis=1)
        per_method[method] = est
        n = int(ok.sum())
        for c, name in enumerate(names):
            v = est[ok, c]
            if n:
                mean = math.fsum(v) / n
                sd = math.sqrt(math.fsum((v - mean) ** 2) / (n - 1)) if n > 1 else float("nan")
                rmse = math.sqrt(math.fsum((v - true[c]) ** 2) / n)
            else:
                mean = sd = rmse = float("nan")
            rows.append(EstimatorSummary(method, name, float(true[c]), mean, sd, rmse,
                                         len(ok) - n, n))
    return McSummary(config, rows, per_method)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> McSummary:
    """Simulate ``config.reps`` series and fit every estimator on each.

    Replications whose fit raises or fails to converge are excluded from the
    moments and counted in ``failures``. With ``workers > 1`` replications are
    split over processes; the result is identical to the serial run.
    """
    reps = np.arange(config.reps)
    if workers <= 1:
        estimates = _run_block(config, reps)
    else:
        blocks = np.array_split(reps, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, [config] * len(blocks), blocks))
        estimates = np.concatenate(parts, axis=0)
    return summarize(config, estimates)


# Reference cells: (model, T, trend, estimators, {method: (mean, sd, rmse)})
_T2 = ("whittle", "mle", "mde", "bcmde")
_T4 = ("whittle", "mde", "bcmde")

PRESETS = {
    "table2": {
        "ar1-0.4-25": (ModelSpec([0.4]), 25, _T2, {
            "whittle": (0.3551, 0.1947, 0.1997), "mle": (0.3124, 0.1884, 0.2077),
            "mde": (0.3090, 0.1862, 0.2072), "bcmde": (0.3699, 0.1978, 0.2000)}),
        "ar1-0.4-100": (ModelSpec([0.4]), 100, _T2, {
            "whittle": (0.3876, 0.0960, 0.0967), "mle": (0.3774, 0.0950, 0.0976),
            "mde": (0.3775, 0.0955, 0.0981), "bcmde": (0.3918, 0.0966, 0.0969)}),
        "ar1-0.8-25": (ModelSpec([0.8]), 25, _T2, {
            "whittle": (0.7208, 0.2024, 0.2172), "mle": (0.6616, 0.1602, 0.2117),
            "mde": (0.6432, 0.1646, 0.2273), "bcmde": (0.7361, 0.1852, 0.1958)}),
        "ar1-0.8-100": (ModelSpec([0.8]), 100, _T2, {
            "whittle": (0.7789, 0.0688, 0.0720), "mle": (0.7673, 0.0661, 0.0737),
            "mde": (0.7669, 0.0668, 0.0745), "bcmde": (0.7864, 0.0681, 0.0694)}),
        "ma1-0.4-25": (ModelSpec([], [0.4]), 25, _T2, {
            "whittle": (0.3868, 0.2310, 0.2313), "mle": (0.3786, 0.2796, 0.2803),
            "mde": (0.3676, 0.2973, 0.3111), "bcmde": (0.4422, 0.3111, 0.3137)}),
        "ma1-0.4-100": (ModelSpec([], [0.4]), 100, _T2, {
            "whittle": (0.3956, 0.0991, 0.0992), "mle": (0.3936, 0.0990, 0.0991),
            "mde": (0.3992, 0.1590, 0.1589), "bcmde": (0.4194, 0.1660, 0.1671)}),
        "ma1-0.8-25": (ModelSpec([], [0.8]), 25, _T2, {
            "whittle": (0.7212, 0.1843, 0.2004), "mle": (0.8135, 0.1870, 0.1874),
            "mde": (0.6285, 0.3106, 0.3547), "bcmde": (0.7039, 0.2938, 0.3090)}),
        "ma1-0.8-100": (ModelSpec([], [0.8]), 100, _T2, {
            "whittle": (0.7791, 0.0803, 0.0829), "mle": (0.8080, 0.0712, 0.0716),
            "mde": (0.7686, 0.2280, 0.2300), "bcmde": (0.7929, 0.2201, 0.2201)}),
    },
    "table3": {
        "ar1-0.5-50": (ModelSpec([0.5]), 50, _T2, {
            "whittle": (0.4475, 0.1346, 0.1444), "mle": (0.4239, 0.1325, 0.1527),
            "mde": (0.4226, 0.1319, 0.1529), "bcmde": (0.4873, 0.1401, 0.1406)}),
        "ar1-0.5-100": (ModelSpec([0.5]), 100, _T2, {
            "whittle": (0.4689, 0.0933, 0.0983), "mle": (0.4581, 0.0923, 0.1014),
            "mde": (0.4581, 0.0926, 0.1016), "bcmde": (0.4891, 0.0949, 0.0955)}),
        "ar1-0.7-50": (ModelSpec([0.7]), 50, _T2, {
            "whittle": (0.6126, 0.1324, 0.1586), "mle": (0.5914, 0.1238, 0.1646),
            "mde": (0.5882, 0.1256, 0.1682), "bcmde": (0.6667, 0.1385, 0.1424)}),
        "ar1-0.7-100": (ModelSpec([0.7]), 100, _T2, {
            "whittle": (0.6617, 0.0809, 0.0895), "mle": (0.6516, 0.0795, 0.0930),
            "mde": (0.6500, 0.0802, 0.0945), "bcmde": (0.6865, 0.0829, 0.0839)}),
    },
    "table4": {
        "d0.2-100": (ModelSpec(d=0.2), 100, _T4, {
            "whittle": (0.1688, 0.0973, 0.1021), "mde": (0.1434, 0.0810, 0.0988),
            "bcmde": (0.1936, 0.0998, 0.1000)}),
        "d0.2-500": (ModelSpec(d=0.2), 500, _T4, {
            "whittle": (0.1902, 0.0387, 0.0399), "mde": (0.1804, 0.0352, 0.0402),
            "bcmde": (0.1975, 0.0395, 0.0395)}),
        "d0.4-100": (ModelSpec(d=0.4), 100, _T4, {
            "whittle": (0.3475, 0.0924, 0.1062), "mde": (0.2767, 0.0626, 0.1383),
            "bcmde": (0.3729, 0.0878, 0.0919)}),
        "d0.4-500": (ModelSpec(d=0.4), 500, _T4, {
            "whittle": (0.3822, 0.0377, 0.0417), "mde": (0.3349, 0.0264, 0.0703),
            "bcmde": (0.3936, 0.0384, 0.0389)}),
    },
}
PRESET_TRENDS = {"table2": ConstantUnknown(), "table3": TimeTrend(), "table4": TimeTrend()}


def preset_config(table: str, cell: str, **overrides) -> tuple[ExperimentConfig, dict]:
    """Experiment configuration and reference values for a published table cell."""
    if table not in PRESETS:
        raise ValueError(f"unknown table {table!r}; expected one of {sorted(PRESETS)}")
    cells = PRESETS[table]
    if cell not in cells:
        raise ValueError(f"unknown {table} cell {cell!r}; expected one of {sorted(cells)}")
    model, T, estimators, ref = cells[cell]
    kwargs = dict(model=model, T=T, trend=PRESET_TRENDS[table], estimators=estimators)
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs), ref


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def parse_config(text: str) -> ExperimentConfig:
    """Parse a ``key=value`` experiment description.

    Recognised keys: phi, theta, d, sigma2, T, trend, z (regressor values),
    mu, alpha, beta, estimators, reps, burn_in, seed, generator, lags,
    weighting, estimate_d. Lines starting with ``#`` are ignored.
    """
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        items[key] = value

    known = {"phi", "theta", "d", "sigma2", "T", "trend", "z", "mu", "alpha", "beta",
             "estimators", "reps", "burn_in", "seed", "generator", "lags", "weighting",
             "estimate_d"}
    unknown = set(items) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "T" not in items:
        raise ValueError("config must set T")
    model = ModelSpec(_floats(items.get("phi", "")), _floats(items.get("theta", "")),
                      float(items.get("d", 0.0)), float(items.get("sigma2", 1.0))).validate()
    z = _floats(items["z"]) if "z" in items else None
    trend = parse_trend(items.get("trend", "constant"), z=z, mu=float(items.get("mu", 0.0)))
    options = EstimationOptions(lags=[int(v) for v in _floats(items.get("lags", "1"))],
                                weighting=items.get("weighting", "identity"))
    est_d = items.get("estimate_d")
    kwargs = dict(
        model=model, T=int(items["T"]), trend=trend, options=options,
        alpha=float(items.get("alpha", 0.0)), beta=float(items.get("beta", 1.0)),
        generator=items.get("generator", "exact"),
        estimate_d=None if est_d is None else est_d.lower() in ("1", "true", "yes"),
    )
    if "estimators" in items:
        kwargs["estimators"] = tuple(items["estimators"].replace(",", " ").split())
    for key in ("reps", "burn_in", "seed"):
        if key in items:
            kwargs[key] = int(items[key])
    return ExperimentConfig(**kwargs)

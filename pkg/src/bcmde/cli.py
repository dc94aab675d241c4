"""Command-line front end: ``bcmde {acf,bias,estimate,simulate,mc}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from .bias import corrected_acf, parse_trend
from .estimators import METHODS, WEIGHTINGS, EstimationOptions, fit
from .model import ModelSpec, ModelStructure, arfima_acv
from .montecarlo import ExperimentConfig, parse_config, preset_config, run_experiment

FMT = "{:.6g}"


def read_series(path: str) -> np.ndarray:
    """Read one numeric value per line; a non-numeric first line is a header."""
    with (sys.stdin if path == "-" else open(path, newline="")) as fh:
        rows = [r for r in csv.reader(fh) if r and r[0].strip()]
    if not rows:
        raise ValueError(f"{path}: no data")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    values = []
    for n, r in enumerate(rows, 1):
        try:
            values.append(float(r[0]))
        except ValueError:
            raise ValueError(f"{path}: non-numeric value {r[0]!r} on data row {n}") from None
    x = np.array(values)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{path}: series contains non-finite values")
    return x


def _write(text: str, path: str | None):
    if path and path != "-":
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([FMT.format(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _model(args) -> ModelSpec:
    return ModelSpec(args.phi, args.theta, args.d, args.sigma2).validate()


def _trend(args, T=None):
    z = read_series(args.z_file) if getattr(args, "z_file", None) else None
    if z is not None and T is not None and len(z) != T:
        raise ValueError(f"regressor file has {len(z)} values, expected {T}")
    return parse_trend(args.trend, z=z, mu=getattr(args, "mu", 0.0))


def cmd_acf(args):
    if args.max_lag < 0:
        raise ValueError("--max-lag must be non-negative")
    acv = arfima_acv(_model(args), args.max_lag)
    rows = [(k, acv[k], acv[k] / acv[0]) for k in range(args.max_lag + 1)]
    _write(_csv(["lag", "gamma", "rho"], rows), args.output)


def cmd_bias(args):
    if args.T < 2:
        raise ValueError("--T must be at least 2")
    model = _model(args)
    trend = _trend(args, args.T)
    max_lag = args.T - 1 if args.max_lag is None else args.max_lag
    if not 0 <= max_lag <= args.T - 1:
        raise ValueError(f"--max-lag must lie in 0..{args.T - 1}")
    prof = corrected_acf(model, args.T, trend, np.arange(max_lag + 1))
    header = ["lag", "gamma", "expected_gamma", "bias_gamma", "bias_rho", "corrected_rho"]
    _write(_csv(header, prof.rows()), args.output)


def cmd_estimate(args):
    x = read_series(args.input)
    structure = ModelStructure(args.p, args.q, args.fractional)
    opts = EstimationOptions(method=args.method, lags=args.lags, weighting=args.weighting)
    res = fit(x, structure, _trend(args, len(x)), opts)
    out = res.as_dict()
    out["T"] = len(x)
    out["trend"] = args.trend
    _write(json.dumps(out, indent=2) + "\n", args.output)
    if not res.converged:
        print("warning: optimizer did not converge", file=sys.stderr)


def cmd_simulate(args):
    model = _model(args)
    trend = _trend(args, args.T)
    cfg = ExperimentConfig(model=model, T=args.T, trend=trend, estimators=(), reps=1,
                           burn_in=args.burn_in, seed=args.seed, alpha=args.alpha,
                           beta=args.beta, generator=args.generator)
    x = cfg.simulate(args.rep)
    _write(_csv(["x"], ((v,) for v in x)), args.output)


def cmd_mc(args):
    presets = [(t, c) for t, c in (("table2", args.table2_cell), ("table3", args.table3_cell),
                                   ("table4", args.table4_cell)) if c]
    if bool(args.config) + len(presets) != 1:
        raise ValueError("give exactly one of --config, --table2-cell, --table3-cell, --table4-cell")
    overrides = {k: v for k, v in (("reps", args.reps), ("seed", args.seed)) if v is not None}
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        cfg, ref = replace(cfg, **overrides), None
    else:
        cfg, ref = preset_config(*presets[0], **overrides)
    summary = run_experiment(cfg, workers=args.workers)
    records = summary.to_records(ref)
    if args.format == "json":
        _write(json.dumps(records, indent=2) + "\n", args.output)
    else:
        header = ["method", "param", "true", "mean", "sd", "rmse", "failures", "n", "seed"]
        if ref:
            header += ["ref_mean", "ref_sd", "ref_rmse"]
        _write(_csv(header, ([r.get(h, "") for h in header] for r in records)), args.output)


def _add_model_flags(p):
    p.add_argument("--phi", type=float, nargs="*", default=[], help="AR coefficients")
    p.add_argument("--theta", type=float, nargs="*", default=[], help="MA coefficients")
    p.add_argument("--d", type=float, default=0.0, help="memory parameter")
    p.add_argument("--sigma2", type=float, default=1.0, help="innovation variance")


def _add_trend_flags(p, default="constant", choices=("known", "constant", "regressor", "time")):
    p.add_argument("--trend", choices=choices, default=default)
    p.add_argument("--z-file", help="regressor values, one per line (trend=regressor)")
    p.add_argument("--mu", type=float, default=0.0, help="known mean (trend=known)")


def _lags(text: str):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid lag list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcmde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("acf", help="theoretical autocovariances and autocorrelations")
    _add_model_flags(p)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_acf)

    p = sub.add_parser("bias", help="expected sample autocovariances and corrected ACF")
    _add_model_flags(p)
    p.add_argument("--T", type=int, required=True, help="sample size")
    _add_trend_flags(p)
    p.add_argument("--max-lag", type=int, help="last lag to print (default T-1)")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("estimate", help="fit a model to a series read from CSV")
    p.add_argument("--input", "-i", required=True, help="CSV file, one value per line ('-' for stdin)")
    p.add_argument("--p", type=int, default=0, help="AR order")
    p.add_argument("--q", type=int, default=0, help="MA order")
    p.add_argument("--fractional", action="store_true", help="estimate the memory parameter d")
    p.add_argument("--method", choices=METHODS, default="bcmde")
    _add_trend_flags(p)
    p.add_argument("--lags", type=_lags, default=[1], help="comma-separated lags, e.g. 1,2,3")
    p.add_argument("--weighting", choices=WEIGHTINGS, default="identity")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="simulate a Gaussian ARFIMA series")
    _add_model_flags(p)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rep", type=int, default=0, help="replication index within the seed")
    _add_trend_flags(p, default="known")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--generator", choices=("exact", "recursive"), default="exact")
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="Monte Carlo replication of a table cell or config file")
    p.add_argument("--config", help="key=value experiment file")
    p.add_argument("--table2-cell", help="e.g. ar1-0.4-25, ma1-0.8-100")
    p.add_argument("--table3-cell", help="e.g. ar1-0.5-50")
    p.add_argument("--table4-cell", help="e.g. d0.2-100")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, ArithmeticError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

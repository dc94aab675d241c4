"""Bias-corrected minimum distance estimation for ARMA and ARFIMA models."""
from .bias import (
    BiasProfile,
    ConstantUnknown,
    KnownMean,
    LinearRegressor,
    TimeTrend,
    corrected_acf,
    expected_acv,
)
from .estimators import EstimateResult, EstimationOptions, fit
from .model import ModelSpec, ModelStructure, arfima_acf, arfima_acv, spectral_density
from .montecarlo import ExperimentConfig, run_experiment, simulate_gaussian

__version__ = "0.1.0"

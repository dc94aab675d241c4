"""
How far the sample autocovariance is pulled down
================================================

Removing an estimated mean (or trend) before computing autocovariances
biases every lag downward. The expectations below are exact, not simulated.
"""
import numpy as np

from bcmde import ConstantUnknown, ModelSpec, TimeTrend, corrected_acf

# a persistent AR(1) and a long-memory series, both with unit innovation variance
models = {"AR(1) phi=0.8": ModelSpec((0.8,)), "ARFIMA d=0.4": ModelSpec(d=0.4)}
lags = np.arange(0, 11)

for name, m in models.items():
    for T in (50, 200, 1000):
        prof = corrected_acf(m, T, ConstantUnknown(), lags)
        print(f"{name:>14s}  T={T:<5d} E(g_k)-g_k / g_0 at k=0,5,10:",
              np.round(prof.bias_rho[[0, 5, 10]], 4))

# A fitted time trend removes more, so the bias is larger still.
m = ModelSpec(d=0.4)
for trend in (ConstantUnknown(), TimeTrend()):
    prof = corrected_acf(m, 100, trend, lags)
    print(f"{type(trend).__name__:>15s}: rho_T,k =", np.round(prof.corrected_acf[1:6], 3))
print("   theoretical:", np.round(prof.gamma[1:6] / prof.gamma[0], 3))

"""
Bias-corrected autocorrelations for AR(1)
=========================================

rho_{T,k} = E(g_k) / E(g_0) is the quantity the corrected estimator matches
against the sample autocorrelations. Compare it with phi^k at T = 50.
"""
from bcmde import ConstantUnknown, ModelSpec, corrected_acf

T = 50
print(" phi   k   phi^k   rho_T,k")
for phi in (0.4, 0.6, 0.8):
    prof = corrected_acf(ModelSpec((phi,)), T, ConstantUnknown(), [1, 2, 3])
    for k, r in zip(prof.lags, prof.corrected_acf):
        print(f"{phi:4.1f}  {k:2d}  {phi**k:6.4f}  {r:8.4f}")

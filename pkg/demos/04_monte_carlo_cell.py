"""
A small Monte Carlo experiment
==============================

Each replication draws from its own stream seeded by (seed, rep), so the
result is identical for any number of worker processes.
"""
import sys

from bcmde import ModelSpec, TimeTrend
from bcmde.montecarlo import ExperimentConfig, run_experiment

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 200
cfg = ExperimentConfig(model=ModelSpec((0.5,)), T=50, trend=TimeTrend(),
                       estimators=("mde", "bcmde", "whittle"), reps=reps, seed=1)
s = run_experiment(cfg)
print(f"AR(1) phi=0.5, T=50, time trend, {reps} replications")
for r in s.rows:
    print(f"{r.method:>8s}: mean={r.mean:.4f}  sd={r.sd:.4f}  rmse={r.rmse:.4f}  failures={r.failures}")

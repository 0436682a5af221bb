"""
Rejection ABC against a brute-force grid posterior
==================================================

For a one-parameter model the ABC target prior(theta) P_theta(accept) can be
computed on a grid by simulation.  The ABC histogram should match it.
"""

import numpy as np

from abc_rates import (
    Fixed, RunConfig, UniformShapeModel, brute_force_posterior,
    estimate_density, l1_between, run_rejection,
)

model = UniformShapeModel(n=1000, k0=1)
eps = 0.05
observed = model.observe(np.random.default_rng(5))

table = run_rejection(model, observed, RunConfig(2_500_000, Fixed(eps), seed=6, method="direct"))
hist = estimate_density(table.thetas[:, 0], bins=50)

# cell centres of a 200-point grid around the observed midrange
lo, hi = max(0.0, observed[-1] - 1.25 * eps), min(1.0, observed[-1] + 1.25 * eps)
h = (hi - lo) / 200
grid = lo + h * (np.arange(200) + 0.5)
oracle = brute_force_posterior(model, observed, eps, grid, reps=10_000, seed=7)

print(f"accepted = {len(table)}, L1 = {l1_between(hist, oracle):.4f}")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    plt.bar(hist.grid, hist.values, width=hist.bin_width, alpha=0.5, label="ABC")
    plt.plot(oracle.grid, oracle.values, "k-", label="grid oracle")
    plt.xlabel("theta")
    plt.legend()
    plt.savefig("oracle_check.png", dpi=120)

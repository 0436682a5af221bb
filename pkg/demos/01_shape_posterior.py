"""
Limiting shape of the rejection-ABC posterior
=============================================

Uniform location model with two non-converging summaries (single
observations) and the midrange.  With eps = 1/sqrt(n) the accepted draws
should follow the density proportional to (1 - n (theta - theta0)^2)^(k0/2).
"""

import numpy as np

from abc_rates import (
    Fixed, RunConfig, UniformShapeModel, estimate_density, l1_discrepancy,
    run_rejection, shape_posterior_for, theoretical_density,
)

n, k0 = 100_000, 2
model = UniformShapeModel(n=n, k0=k0)
tp = shape_posterior_for(model, C=1.0)
observed = model.observe(np.random.default_rng(1))

# about 20000 accepted draws; the engine only simulates the candidates
# that can land inside the tolerance box
M = int(20_000 / model.approx_acceptance_rate(tp.epsilon))
table = run_rejection(model, observed, RunConfig(M, Fixed(tp.epsilon), seed=2))
print(f"M = {M:.3g}, accepted = {len(table)}")

hist = estimate_density(table.thetas[:, 0], bins=50)
print(f"L1 to the limiting density: {l1_discrepancy(hist, tp):.4f}")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    grid = np.linspace(tp.theta0[0] - tp.epsilon, tp.theta0[0] + tp.epsilon, 400)
    plt.bar(hist.grid, hist.values, width=hist.bin_width, alpha=0.5, label="ABC")
    plt.plot(grid, theoretical_density(tp, grid), "k--", label="limit")
    plt.xlabel("theta")
    plt.legend()
    plt.savefig("shape_posterior.png", dpi=120)

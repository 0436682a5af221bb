"""
How the acceptance rate shrinks with n
======================================

Under eps = 1/sqrt(n) with k0 non-converging summaries and one parameter,
the acceptance probability should scale like n^(-(k0 + 1)/2).
"""

import numpy as np

from abc_rates import (
    Fixed, RunConfig, UniformShapeModel, acceptance_rate, loglog_slope,
    predict_acceptance_exponent, run_rejection,
)

k0 = 2
rows = []
for i, n in enumerate([1_000, 10_000, 100_000]):
    model = UniformShapeModel(n=n, k0=k0)
    eps = 1 / np.sqrt(n)
    observed = model.observe(np.random.default_rng(10 + i))
    M = int(20_000 / model.approx_acceptance_rate(eps))
    table = run_rejection(model, observed, RunConfig(M, Fixed(eps), seed=20 + i))
    rows.append((n, acceptance_rate(table)))
    print(f"n={n:>7d}  M={M:.3g}  rate={rows[-1][1]:.3e}")

slope, _ = loglog_slope(rows)
predicted = predict_acceptance_exponent(UniformShapeModel(n=1000, k0=k0).rate_profile(), 1)
print(f"fitted slope {slope:.3f}, predicted {predicted}")

"""Local-linear regression adjustment of rejection-ABC output.

The fit minimises ``sum_t ||theta_t - beta0 - B^T (S_t - S0)||^2`` over the
accepted draws, with no kernel weighting.  Adjusted draws are
``theta_t - B^T (S_t - S0)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    DegenerateError,
    DimensionError,
    InsufficientDataError,
    RankError,
    RateProfile,
    ReferenceTable,
    as_summary_vector,
)

COND_LIMIT = 1e12
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class AdjustmentModel:
    beta0: np.ndarray  # (d,)
    B: np.ndarray  # (k, d)
    S0: np.ndarray  # (k,)
    ridge_used: float = 0.0

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        beta0 = np.atleast_1d(np.asarray(self.beta0, dtype=float))
        S0 = np.atleast_1d(np.asarray(self.S0, dtype=float))
        if B.shape != (S0.shape[0], beta0.shape[0]):
            raise DimensionError(f"B has shape {B.shape}, expected ({S0.shape[0]}, {beta0.shape[0]})")
        if self.ridge_used < 0:
            raise ValueError("ridge_used must be nonnegative")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "S0", S0)

    @property
    def d(self) -> int:
        return self.beta0.shape[0]

    @property
    def k(self) -> int:
        return self.S0.shape[0]

    def predict(self, summaries) -> np.ndarray:
        """Regression function ``m(S) = beta0 + B^T (S - S0)``."""
        S = np.atleast_2d(np.asarray(summaries, dtype=float))
        return self.beta0[None, :] + (S - self.S0[None, :]) @ self.B

    def to_json(self) -> str:
        return json.dumps({
            "beta0": self.beta0.tolist(),
            "B": self.B.tolist(),
            "S0": self.S0.tolist(),
            "ridge_used": self.ridge_used,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "AdjustmentModel":
        obj = json.loads(text)
        return cls(np.asarray(obj["beta0"]), np.asarray(obj["B"]), np.asarray(obj["S0"]),
                   float(obj["ridge_used"]))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def fit_local_linear(table: ReferenceTable) -> AdjustmentModel:
    """Least-squares fit of the local-linear correction on a reference table.

    Solved through the centred normal equations.  When the summary scatter
    matrix has condition number above ``1e12`` a ridge of ``1e-10 * trace / k``
    is added and reported in ``ridge_used``.
    """
    theta = np.asarray(table.thetas, dtype=float)
    S = np.asarray(table.summaries, dtype=float)
    N, k = S.shape
    if N < k + 2:
        raise InsufficientDataError(f"need at least k + 2 = {k + 2} accepted draws, got {N}")
    S_bar = S.mean(axis=0)
    X = S - S_bar
    if not np.any(X):
        raise DegenerateError("all accepted summaries are identical")
    Y = theta - theta.mean(axis=0)
    G = X.T @ X
    rhs = X.T @ Y
    ridge = 0.0
    if np.linalg.cond(G) > COND_LIMIT:
        ridge = RIDGE_SCALE * np.trace(G) / k
        G = G + ridge * np.eye(k)
    B = np.linalg.solve(G, rhs)
    S0 = table.observed_summary
    beta0 = theta.mean(axis=0) - (S_bar - S0) @ B
    return AdjustmentModel(beta0, B, S0, float(ridge))


def adjust_samples(table: ReferenceTable, model: AdjustmentModel) -> np.ndarray:
    """Corrected draws ``theta_t - B^T (S_t - S0)``, shape ``(N, d)``."""
    if table.d != model.d or table.k != model.k:
        raise DimensionError(
            f"table (d, k)=({table.d}, {table.k}) does not match model ({model.d}, {model.k})")
    return table.thetas - (table.summaries - model.S0[None, :]) @ model.B


def oracle_adjustment(profile: RateProfile, observed=None) -> AdjustmentModel:
    """Minimal-norm limit ``B*``: zero rows for slow statistics and
    ``grad (grad^T grad)^{-1}`` for the fast block.
    """
    grad = profile.gradient_fast
    d = grad.shape[1]
    if np.linalg.matrix_rank(grad) < d:
        raise RankError("fast gradient is rank deficient")
    gamma2 = grad @ np.linalg.inv(grad.T @ grad)
    B = np.vstack([np.zeros((profile.k0, d)), gamma2])
    S0 = np.zeros(profile.k) if observed is None else as_summary_vector(observed, profile.k)
    return AdjustmentModel(np.zeros(d), B, S0, 0.0)

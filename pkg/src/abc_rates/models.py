"""Uniform location models with summaries converging at different rates.

Three families are provided:

* ``UniformShapeModel``: ``y_i ~ U(theta - 1/2, theta + 1/2)`` with ``k0``
  raw observations as non-converging statistics and the midrange of the
  remaining observations as the single fast statistic.
* ``UniformRiskModel``: ``X_i ~ U(theta, theta + 1)`` summarised by the mean
  of the first ``sqrt(n)`` observations and the overall minimum.
* ``Example1Model``: ``k1`` raw observations, the sample mean and the maximum.

Each model has a vectorised ``simulate_summaries`` that samples the summary
distribution directly (order statistics are drawn by inversion), so a draw
costs O(1) or O(sqrt(n)) instead of O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .core import (
    ConfigurationError,
    DimensionError,
    GenerativeModel,
    RateProfile,
    as_summary_vector,
)


def summarize_uniform_shape(dataset, k0: int) -> np.ndarray:
    """``(y_1, ..., y_k0, midrange(y_{k0+1..n}))``."""
    y = np.asarray(dataset, dtype=float).ravel()
    if k0 < 0:
        raise ConfigurationError("k0 must be nonnegative")
    if y.shape[0] <= k0:
        raise DimensionError(f"dataset of length {y.shape[0]} too short for k0={k0}")
    tail = y[k0:]
    return np.concatenate([y[:k0], [(tail.max() + tail.min()) / 2.0]])


def summarize_uniform_risk(dataset) -> np.ndarray:
    """Mean of the first ``sqrt(n)`` observations and the minimum of all ``n``."""
    x = np.asarray(dataset, dtype=float).ravel()
    r = _exact_sqrt(x.shape[0])
    return np.array([x[:r].sum() / r, x.min()])


def _exact_sqrt(n: int) -> int:
    r = math.isqrt(n)
    if n < 1 or r * r != n:
        raise ConfigurationError(f"n={n} must be a positive perfect square")
    return r


def _top_gap(count, m, rng):
    # 1 - max of m iid U(0,1), by inversion of x**m
    return -np.expm1(np.log(rng.random(count)) / m)


def midrange_offsets(count: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Midrange of ``m`` iid U(-1/2, 1/2) variables, ``count`` replicates."""
    if m < 1:
        raise ConfigurationError("midrange needs at least one observation")
    if m == 1:
        return rng.random(count) - 0.5
    a = _top_gap(count, m, rng)
    # given the max, the other m - 1 points are iid U(0, max)
    b = (1.0 - a) * -np.expm1(np.log(rng.random(count)) / (m - 1))
    return (b - a) / 2.0


def _scalar_thetas(theta) -> np.ndarray:
    return np.asarray(theta, dtype=float).reshape(-1)


def _unwrap(values: np.ndarray, theta):
    return float(values[0]) if np.ndim(theta) <= 1 and np.size(theta) == 1 else values


def ball_volume(dim: int, radius: float = 1.0) -> float:
    return math.pi ** (dim / 2) / float(gamma_fn(dim / 2 + 1)) * radius**dim


@dataclass(frozen=True)
class UniformShapeModel(GenerativeModel):
    n: int
    k0: int
    theta0: float = 0.5

    d = 1

    def __post_init__(self):
        if self.k0 < 0:
            raise ConfigurationError("k0 must be nonnegative")
        if self.n <= self.k0:
            raise ConfigurationError(f"n={self.n} must exceed k0={self.k0}")
        if not 0.0 < self.theta0 < 1.0:
            raise ConfigurationError("theta0 must lie inside the U(0,1) prior support")

    @property
    def k(self) -> int:
        return self.k0 + 1

    def prior_sample(self, rng, size):
        return rng.random((size, 1))

    def prior_density(self, theta):
        t = _scalar_thetas(theta)
        return _unwrap(((t > 0.0) & (t < 1.0)).astype(float), theta)

    def simulate(self, theta, rng):
        t = float(np.ravel(theta)[0])
        return rng.uniform(t - 0.5, t + 0.5, self.n)

    def summarize(self, dataset):
        return summarize_uniform_shape(dataset, self.k0)

    def simulate_summaries(self, thetas, rng):
        t = np.asarray(thetas, dtype=float).reshape(-1, 1)
        m = t.shape[0]
        slow = t + rng.random((m, self.k0)) - 0.5
        fast = t[:, 0] + midrange_offsets(m, self.n - self.k0, rng)
        return np.column_stack([slow, fast])

    def rate_profile(self) -> RateProfile:
        exps = np.zeros(self.k)
        exps[-1] = 1.0
        k = self.k
        return RateProfile(exps, self.n, self.k0, np.ones((1, 1)),
                           lambda th: np.full(k, float(np.ravel(th)[0])))

    def observe(self, rng) -> np.ndarray:
        """Observed summary for data generated at ``theta0``."""
        return self.simulate_summaries(np.array([[self.theta0]]), rng)[0]

    def approx_acceptance_rate(self, eps: float) -> float:
        # every summary has unit density near the observation
        return ball_volume(self.k, eps)

    # Exact localized proposal.  Each component of a prior draw lands in the
    # box |S_j - o_j| <= eps with a density bounded by 1, so thinning every
    # draw with probability (2 eps)^k and proposing uniformly in the box
    # reproduces the law of the box-passing draws exactly.
    supports_localized = True

    def local_candidate_probability(self, eps):
        return (2.0 * eps) ** self.k

    def propose_local(self, observed, eps, count, rng):
        observed = as_summary_vector(observed, self.k)
        u = rng.uniform(-eps, eps, (count, self.k))
        summaries = observed[None, :] + u
        theta = summaries[:, -1] - midrange_offsets(count, self.n - self.k0, rng)
        valid = (theta > 0.0) & (theta < 1.0)
        if self.k0:
            valid &= np.all(np.abs(summaries[:, :self.k0] - theta[:, None]) <= 0.5, axis=1)
        return theta[:, None], summaries, valid


@dataclass(frozen=True)
class UniformRiskModel(GenerativeModel):
    n: int = 10_000
    theta0: float = 0.5
    prior_halfwidth: float = 0.5

    d = 1
    k = 2

    def __post_init__(self):
        _exact_sqrt(self.n)
        if self.prior_halfwidth <= 0:
            raise ConfigurationError("prior_halfwidth must be positive")

    @property
    def root_n(self) -> int:
        return _exact_sqrt(self.n)

    @property
    def prior_bounds(self) -> tuple[float, float]:
        return self.theta0 - self.prior_halfwidth, self.theta0 + self.prior_halfwidth

    def prior_sample(self, rng, size):
        lo, hi = self.prior_bounds
        return rng.uniform(lo, hi, (size, 1))

    def prior_density(self, theta):
        lo, hi = self.prior_bounds
        t = _scalar_thetas(theta)
        return _unwrap(((t > lo) & (t < hi)).astype(float) / (hi - lo), theta)

    def simulate(self, theta, rng):
        t = float(np.ravel(theta)[0])
        return t + rng.random(self.n)

    def summarize(self, dataset):
        return summarize_uniform_risk(dataset)

    def simulate_summaries(self, thetas, rng):
        t = np.asarray(thetas, dtype=float).reshape(-1)
        m = t.shape[0]
        r = self.root_n
        head = rng.random((m, r))
        low = head.min(axis=1)
        if self.n > r:
            # min of the remaining n - r points, 1 - V**(1/(n - r))
            low = np.minimum(low, -np.expm1(np.log(rng.random(m)) / (self.n - r)))
        return np.column_stack([t + head.mean(axis=1), t + low])

    def rate_profile(self) -> RateProfile:
        return RateProfile(np.array([0.25, 1.0]), self.n, 1, np.ones((1, 1)),
                           lambda th: np.array([float(np.ravel(th)[0]) + 0.5, float(np.ravel(th)[0])]))

    def observe(self, rng) -> np.ndarray:
        return self.simulate_summaries(np.array([[self.theta0]]), rng)[0]


@dataclass(frozen=True)
class Example1Model(GenerativeModel):
    n: int
    k1: int = 0
    scenario: int = 1
    theta0: float = 0.5

    d = 1

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ConfigurationError("scenario must be 1 or 2")
        if self.k1 < 0 or self.n <= self.k1:
            raise ConfigurationError("need 0 <= k1 < n")

    @property
    def k(self) -> int:
        return self.k1 + 2

    @property
    def k0(self) -> int:
        return self.k1 + 1 if self.scenario == 1 else self.k1

    def prior_sample(self, rng, size):
        return rng.random((size, 1))

    def prior_density(self, theta):
        t = _scalar_thetas(theta)
        return _unwrap(((t > 0.0) & (t < 1.0)).astype(float), theta)

    def simulate(self, theta, rng):
        t = float(np.ravel(theta)[0])
        return rng.uniform(t - 0.5, t + 0.5, self.n)

    def summarize(self, dataset):
        z = np.asarray(dataset, dtype=float).ravel()
        if z.shape[0] != self.n:
            raise DimensionError(f"expected {self.n} observations, got {z.shape[0]}")
        return np.concatenate([z[:self.k1], [z.mean(), z.max()]])

    def simulate_summaries(self, thetas, rng):
        t = np.asarray(thetas, dtype=float).reshape(-1)
        out = np.empty((t.shape[0], self.k))
        rows = max(1, 2_000_000 // self.n)
        for start in range(0, t.shape[0], rows):
            tt = t[start:start + rows, None]
            z = tt + rng.random((tt.shape[0], self.n)) - 0.5
            out[start:start + rows, :self.k1] = z[:, :self.k1]
            out[start:start + rows, self.k1] = z.mean(axis=1)
            out[start:start + rows, self.k1 + 1] = z.max(axis=1)
        return out

    def rate_profile(self) -> RateProfile:
        exps = np.concatenate([np.zeros(self.k1), [0.5, 1.0]])
        grad = np.ones((1, 1)) if self.scenario == 1 else np.ones((2, 1))
        k1 = self.k1
        return RateProfile(exps, self.n, self.k0, grad,
                           lambda th: np.concatenate([np.zeros(k1), [float(np.ravel(th)[0]), 0.5 + float(np.ravel(th)[0])]]))


def build_rate_profile(model) -> RateProfile:
    """Rates, limit map, slow/fast split and fast gradient of a model family."""
    if not isinstance(model, (UniformShapeModel, UniformRiskModel, Example1Model)):
        raise ConfigurationError(f"no rate profile known for {type(model).__name__}")
    return model.rate_profile()

"""Closed-form asymptotic ABC posterior and acceptance-rate exponent.

The limiting posterior is supported on the ellipsoid
``||G (theta - theta0)|| <= eps`` (``G`` the fast-statistic gradient) and has
density proportional to ``(1 - w)^(R/2)`` with
``w = ||G (theta - theta0)||^2 / eps^2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.special import beta as beta_fn
from scipy.special import betainc, betaincinv

from .core import (
    ConfigurationError,
    DimensionError,
    QuadratureError,
    RankError,
    RateProfile,
    UnsupportedRegimeError,
    as_parameter_point,
)

QUAD_RTOL = 1e-11


@dataclass(frozen=True)
class TheoreticalPosterior:
    theta0: np.ndarray
    epsilon: float
    R: float
    gradient_fast: np.ndarray

    def __post_init__(self):
        theta0 = as_parameter_point(self.theta0)
        G = np.atleast_2d(np.asarray(self.gradient_fast, dtype=float))
        if G.shape[1] != theta0.shape[0]:
            raise DimensionError(f"gradient has {G.shape[1]} columns, parameter has {theta0.shape[0]}")
        if np.linalg.matrix_rank(G) < theta0.shape[0]:
            raise RankError("fast gradient must have full column rank")
        if not self.epsilon > 0 or not math.isfinite(self.epsilon):
            raise ConfigurationError("epsilon must be positive and finite")
        if self.R < 0:
            raise ConfigurationError("R must be nonnegative")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "gradient_fast", G)

    @property
    def d(self) -> int:
        return self.theta0.shape[0]

    @property
    def scale(self) -> float:
        """Norm of the gradient; the d=1 support is ``|theta - theta0| <= eps / scale``."""
        return float(np.linalg.norm(self.gradient_fast))

    @cached_property
    def normalizer(self) -> float:
        if self.d == 1:
            return self.epsilon / self.scale * float(beta_fn(0.5, self.R / 2 + 1))
        GtG = self.gradient_fast.T @ self.gradient_fast
        jac = self.epsilon**self.d / math.sqrt(np.linalg.det(GtG))
        return jac * unit_ball_integral(self.d, self.R)

    def w(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        if self.d == 1:
            t = t.reshape(-1, 1)
        t = t.reshape(-1, self.d)
        z = (t - self.theta0[None, :]) @ self.gradient_fast.T
        return np.einsum("ij,ij->i", z, z) / self.epsilon**2

    def quadrature_normalizer(self) -> float:
        """Direct adaptive quadrature of the unnormalised density (d = 1)."""
        if self.d != 1:
            raise NotImplementedError("direct quadrature is provided for d = 1 only")
        half = self.epsilon / self.scale
        c = float(self.theta0[0])
        val, err = integrate.quad(
            lambda t: (1.0 - ((t - c) / half) ** 2) ** (self.R / 2),
            c - half, c + half, epsabs=0.0, epsrel=1e-13, limit=200,
        )
        return val

    def cdf(self, theta) -> np.ndarray:
        """Distribution function (d = 1)."""
        if self.d != 1:
            raise NotImplementedError("cdf is provided for d = 1 only")
        t = np.clip((np.asarray(theta, dtype=float) - self.theta0[0]) * self.scale / self.epsilon, -1, 1)
        return 0.5 + 0.5 * np.sign(t) * betainc(0.5, self.R / 2 + 1, t * t)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws (d = 1)."""
        if self.d != 1:
            raise NotImplementedError("sampling is provided for d = 1 only")
        u = rng.random(size)
        t = np.sign(u - 0.5) * np.sqrt(betaincinv(0.5, self.R / 2 + 1, np.abs(2 * u - 1)))
        return self.theta0[0] + t * self.epsilon / self.scale


def unit_ball_integral(d: int, R: float) -> float:
    """``int_{||x|| <= 1} (1 - ||x||^2)^(R/2) dx`` by nested adaptive quadrature."""

    def f(*x):
        return max(0.0, 1.0 - sum(v * v for v in x)) ** (R / 2)

    def bound(*outer):
        r = math.sqrt(max(0.0, 1.0 - sum(v * v for v in outer)))
        return (-r, r)

    ranges = [bound] * (d - 1) + [(-1.0, 1.0)]
    val, err = integrate.nquad(f, ranges, opts={"epsabs": 0.0, "epsrel": QUAD_RTOL, "limit": 200})
    if not math.isfinite(val) or err > 1e-8 * abs(val):
        raise QuadratureError(f"unit-ball quadrature did not converge: value={val}, abserr={err}, d={d}, R={R}")
    return val


def normalize(tp: TheoreticalPosterior) -> float:
    return tp.normalizer


def theoretical_density(tp: TheoreticalPosterior, theta) -> np.ndarray | float:
    """Normalised asymptotic posterior density; zero outside the ellipsoid."""
    w = tp.w(theta)
    inside = w <= 1.0
    vals = np.zeros_like(w)
    vals[inside] = (1.0 - w[inside]) ** (tp.R / 2) / tp.normalizer
    if np.ndim(theta) == 0 or (tp.d > 1 and np.ndim(theta) == 1):
        return float(vals[0])
    return vals


def predict_acceptance_exponent(profile: RateProfile, d: int) -> float:
    """Exponent of ``n`` in the acceptance probability under ``eps_n = C / sqrt(n)``.

    With unit slow rates the acceptance probability scales as
    ``eps^(k0 + d)``, i.e. ``n^(-(k0 + d) / 2)``.
    """
    slow = profile.exponents[:profile.k0]
    if np.any(slow != 0):
        raise UnsupportedRegimeError("only unit (non-converging) slow rates are supported")
    return -(profile.k0 + d) / 2


def shape_posterior_for(model, C: float = 1.0) -> TheoreticalPosterior:
    """Limit posterior of a ``UniformShapeModel`` under ``eps = C / sqrt(n)``."""
    if C <= 0:
        raise ConfigurationError("C must be positive")
    return TheoreticalPosterior(np.array([model.theta0]), C / math.sqrt(model.n), float(model.k0), np.ones((1, 1)))


def write_density_curve(tp: TheoreticalPosterior, grid, path) -> Path:
    path = Path(path)
    grid = np.asarray(grid, dtype=float)
    values = theoretical_density(tp, grid)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "density"])
        for t, v in zip(grid, np.atleast_1d(values)):
            writer.writerow([repr(float(t)), repr(float(v))])
    return path

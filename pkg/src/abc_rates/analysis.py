"""Empirical-vs-theoretical comparisons and rate fitting."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    DegenerateError,
    DomainError,
    InsufficientDataError,
    as_summary_vector,
    row_distances,
)
from .engine import block_rng
from .theory import TheoreticalPosterior, theoretical_density

_ORACLE_PATH = 7


@dataclass(frozen=True)
class DensityEstimate:
    """Piecewise-constant density on equal-width cells centred at ``grid``."""

    grid: np.ndarray
    values: np.ndarray
    bin_width: float

    @property
    def lo(self) -> float:
        return float(self.grid[0] - self.bin_width / 2)

    @property
    def hi(self) -> float:
        return float(self.grid[-1] + self.bin_width / 2)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.bin_width)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_center", "value"])
            for c, v in zip(self.grid, self.values):
                writer.writerow([repr(float(c)), repr(float(v))])
        return path


def estimate_density(samples, bins: int = 50) -> DensityEstimate:
    """Normalised histogram on equal-width bins spanning the sample range."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise InsufficientDataError(f"need at least 100 samples, got {x.size}")
    if bins < 10:
        raise InsufficientDataError("need at least 10 bins")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise DegenerateError("all samples are identical")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    return DensityEstimate((edges[:-1] + edges[1:]) / 2, counts / (x.size * width), width)


def l1_discrepancy(a: DensityEstimate, tp: TheoreticalPosterior) -> float:
    """``int |a - p|`` for a histogram ``a`` and a 1-d theoretical density ``p``.

    The integral over the histogram range uses bin-centre values of ``p``;
    mass of ``p`` outside that range is added exactly.
    """
    p = np.atleast_1d(theoretical_density(tp, a.grid))
    inside = float(tp.cdf(a.hi) - tp.cdf(a.lo))
    return float(np.sum(np.abs(a.values - p)) * a.bin_width + max(0.0, 1.0 - inside))


def l1_between(a: DensityEstimate, b: DensityEstimate) -> float:
    """``int |a - b|``, with ``b`` linearly interpolated at ``a``'s bin centres.

    Mass of ``b`` in cells lying wholly outside ``a``'s range is added.
    """
    bv = np.interp(a.grid, b.grid, b.values, left=0.0, right=0.0)
    outside = (b.grid + b.bin_width / 2 <= a.lo) | (b.grid - b.bin_width / 2 >= a.hi)
    return float(np.sum(np.abs(a.values - bv)) * a.bin_width + np.sum(b.values[outside]) * b.bin_width)


def posterior_risk(samples, theta0) -> float:
    """Root mean squared distance of the samples to ``theta0``."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("posterior risk of an empty sample")
    t0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    x = x.reshape(-1, t0.shape[0])
    return float(np.sqrt(np.mean(np.sum((x - t0[None, :]) ** 2, axis=1))))


def _loglog(points) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("log-log fit needs finite, strictly positive values")
    return np.log10(pts[:, 0]), np.log10(pts[:, 1])


def loglog_slope(points) -> tuple[float, float]:
    """OLS fit of ``log10 y`` on ``log10 x``; returns ``(slope, intercept)``."""
    x, y = _loglog(points)
    if x.size < 3:
        raise InsufficientDataError("need at least 3 points")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class SegmentedFit:
    """Continuous two-piece line in log10-log10 space.

    ``intercept`` is the fitted ``log10 y`` at the breakpoint.
    """

    slope_left: float
    slope_right: float
    breakpoint: float
    intercept: float
    sse: float
    sse_single_line: float = field(default=float("nan"))

    def predict(self, log_x) -> np.ndarray:
        u = np.asarray(log_x, dtype=float) - self.breakpoint
        return self.intercept + np.where(u < 0, self.slope_left * u, self.slope_right * u)

    def to_dict(self) -> dict:
        return asdict(self)


def _hinge_fit(x, y, c):
    A = np.column_stack([np.ones_like(x), np.minimum(x - c, 0.0), np.maximum(x - c, 0.0)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(resid @ resid)


def segmented_slope(points, refine: int = 50) -> SegmentedFit:
    """Two-segment continuous fit of ``log10 y`` on ``log10 x``.

    The breakpoint is found by exhaustive search: first over midpoints between
    consecutive distinct x values (keeping two points on each side), then on a
    ``refine``-point grid between the neighbouring candidates of the best one.
    """
    x, y = _loglog(points)
    if x.size < 6:
        raise InsufficientDataError("segmented fit needs at least 6 points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    xs = np.unique(x)
    mids = (xs[:-1] + xs[1:]) / 2
    cands = mids[1:-1] if mids.size > 2 else mids
    sses = [_hinge_fit(x, y, c)[1] for c in cands]
    i = int(np.argmin(sses))
    lo = cands[i - 1] if i > 0 else xs[1]
    hi = cands[i + 1] if i + 1 < cands.size else xs[-2]
    fine = np.concatenate([cands, np.linspace(lo, hi, refine)])
    fine_sse = [_hinge_fit(x, y, c)[1] for c in fine]
    best = fine[int(np.argmin(fine_sse))]
    coef, sse = _hinge_fit(x, y, best)
    A1 = np.column_stack([x, np.ones_like(x)])
    r1 = y - A1 @ np.linalg.lstsq(A1, y, rcond=None)[0]
    return SegmentedFit(float(coef[1]), float(coef[2]), float(best), float(coef[0]), sse, float(r1 @ r1))


def _oracle_point(args):
    model, observed, eps, theta, reps, seed, index = args
    rng = block_rng(seed, _ORACLE_PATH, index)
    thetas = np.full((reps, model.d), theta)
    dist = row_distances(model.simulate_summaries(thetas, rng), observed)
    return float(np.mean(dist <= eps))


def acceptance_probabilities(model, observed, eps: float, grid, reps: int, seed: int,
                             workers: int = 1) -> np.ndarray:
    """Monte Carlo estimate of ``P_theta(||eta(z) - observed|| <= eps)`` at each grid point."""
    observed = as_summary_vector(observed, model.k)
    grid = np.asarray(grid, dtype=float).ravel()
    if reps < 1000:
        raise InsufficientDataError("brute-force oracle needs reps >= 1000")
    jobs = [(model, observed, eps, t, reps, seed, i) for i, t in enumerate(grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(_oracle_point, jobs, chunksize=8)))
    return np.array([_oracle_point(j) for j in jobs])


def brute_force_posterior(model, observed, eps: float, grid, reps: int, seed: int,
                          workers: int = 1) -> DensityEstimate:
    """Grid approximation of the pseudo-posterior ``prior * P(accept | theta)``.

    At each grid point the acceptance probability is estimated from ``reps``
    simulations on a stream derived from ``(seed, grid index)``.  The grid
    must be equally spaced and is treated as cell centres.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size < 2:
        raise InsufficientDataError("grid needs at least two points")
    spacing = np.diff(grid)
    if np.any(spacing <= 0) or not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0):
        raise DomainError("grid must be ascending and equally spaced")
    prior = np.asarray(model.prior_density(grid[:, None]), dtype=float).ravel()
    p_accept = acceptance_probabilities(model, observed, eps, grid, reps, seed, workers)
    weights = prior * p_accept
    width = float(spacing[0])
    total = weights.sum() * width
    if total <= 0:
        raise DegenerateError("acceptance probability is zero on the whole grid")
    return DensityEstimate(grid, weights / total, width)


@dataclass
class RiskCurve:
    tag: str  # "vanilla" | "adjusted"
    epsilons: list = field(default_factory=list)
    risks: list = field(default_factory=list)
    n_samples: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    def add(self, eps: float, risk: float, n: int, excluded: bool = False) -> None:
        if self.epsilons and eps >= self.epsilons[-1]:
            raise DomainError("risk-curve tolerances must be strictly decreasing")
        if risk < 0:
            raise DomainError("risk must be nonnegative")
        self.epsilons.append(float(eps))
        self.risks.append(float(risk))
        self.n_samples.append(int(n))
        self.excluded.append(bool(excluded))

    def fit_points(self) -> list[tuple[float, float]]:
        return [(e, r) for e, r, x in zip(self.epsilons, self.risks, self.excluded) if not x and r > 0]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epsilon", "risk", "n_samples", "excluded"])
            for row in zip(self.epsilons, self.risks, self.n_samples, self.excluded):
                writer.writerow([repr(row[0]), repr(row[1]), row[2], int(row[3])])
        return path

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

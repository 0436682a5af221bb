"""Domain types shared by the engine, the models and the analysis code.

Parameters and summaries are plain float arrays.  A ``ParameterPoint`` is a
length-``d`` vector and a ``SummaryVector`` a length-``k`` vector; batches are
stacked row-wise into ``(m, d)`` and ``(m, k)`` arrays.
"""

from __future__ import annotations

import csv
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, NamedTuple

import numpy as np

ParameterPoint = np.ndarray
SummaryVector = np.ndarray


class ABCError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(ABCError, ValueError):
    pass


class ConfigurationError(ABCError, ValueError):
    pass


class InsufficientDataError(ABCError, ValueError):
    pass


class DegenerateError(ABCError, ValueError):
    """A statistical computation has no meaningful answer (e.g. zero variance)."""


class RankError(ABCError, ValueError):
    pass


class DomainError(ABCError, ValueError):
    pass


class UndefinedError(ABCError, ValueError):
    pass


class UnsupportedRegimeError(ABCError, ValueError):
    pass


class QuadratureError(ABCError, RuntimeError):
    pass


class ABCWarning(UserWarning):
    pass


def as_parameter_point(values, d: int | None = None) -> ParameterPoint:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"parameter point must be a vector, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise DimensionError(f"expected parameter of length {d}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("parameter point has non-finite entries")
    return arr


def as_summary_vector(values, k: int | None = None) -> SummaryVector:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"summary must be a vector, got shape {arr.shape}")
    if k is not None and arr.shape[0] != k:
        raise DimensionError(f"expected summary of length {k}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("summary vector has non-finite entries")
    return arr


def euclidean_distance(a, b) -> float:
    """Return ``||a - b||_2`` for two summary vectors of equal length."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(row_distances(a[None, :], b)[0])


def row_distances(summaries: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Euclidean distance of every row of ``summaries`` to ``observed``."""
    diff = summaries - observed[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


class GenerativeModel(ABC):
    """Prior plus simulator plus summary function.

    Subclasses declare ``d``, ``k`` and ``n`` and implement the prior, the
    simulator and the summary.  ``simulate_summaries`` is the batched path used
    by the engine; the default goes through ``simulate`` and ``summarize`` one
    draw at a time, and models override it with a direct sampler of the
    summary distribution when the raw dataset is too large to materialise.

    Implementations must hold no state besides their configuration: all
    randomness comes from the generator passed in.
    """

    d: int
    k: int
    n: int

    @abstractmethod
    def prior_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` parameters from the prior, shape ``(size, d)``."""

    @abstractmethod
    def prior_density(self, theta) -> np.ndarray | float:
        ...

    @abstractmethod
    def simulate(self, theta, rng: np.random.Generator) -> np.ndarray:
        """Simulate one raw dataset of length ``n`` at ``theta``."""

    @abstractmethod
    def summarize(self, dataset) -> SummaryVector:
        ...

    def simulate_summaries(self, thetas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float).reshape(-1, self.d)
        out = np.empty((thetas.shape[0], self.k))
        for i, theta in enumerate(thetas):
            out[i] = self.summarize(self.simulate(theta, rng))
        return out

    # Optional exact localized proposal, see engine.run_rejection.
    supports_localized = False

    def local_candidate_probability(self, eps: float) -> float:
        raise NotImplementedError

    def propose_local(self, observed, eps, count, rng):
        raise NotImplementedError


@dataclass(frozen=True)
class RateProfile:
    """Convergence rates ``v_nj = n**exponents[j]`` and the limit map.

    ``gradient_fast`` is the ``(k - k0, d)`` Jacobian of the fast block of the
    limit map at the true parameter.
    """

    exponents: np.ndarray
    n: int
    k0: int
    gradient_fast: np.ndarray
    limit_map: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        exps = np.asarray(self.exponents, dtype=float)
        grad = np.atleast_2d(np.asarray(self.gradient_fast, dtype=float))
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "gradient_fast", grad)
        k = exps.shape[0]
        if np.any(np.diff(exps) < 0):
            raise ConfigurationError("rates must be nondecreasing in the statistic index")
        if not 0 <= self.k0 < k:
            raise ConfigurationError(f"k0={self.k0} must satisfy 0 <= k0 < k={k}")
        n_fast, d = grad.shape
        if n_fast != k - self.k0:
            raise DimensionError(f"gradient_fast has {n_fast} rows, expected {k - self.k0}")
        if n_fast < d:
            raise RankError(f"need at least d={d} fast statistics, got {n_fast}")
        if np.linalg.matrix_rank(grad) < d:
            raise RankError("gradient of the fast limit map is not of full column rank")

    @property
    def k(self) -> int:
        return self.exponents.shape[0]

    @property
    def d(self) -> int:
        return self.gradient_fast.shape[1]

    @property
    def rates(self) -> np.ndarray:
        return self.rates_at(self.n)

    def rates_at(self, n: float) -> np.ndarray:
        return float(n) ** self.exponents


class AcceptedDraw(NamedTuple):
    theta: ParameterPoint
    summary: SummaryVector
    distance: float


@dataclass(frozen=True)
class ReferenceTable:
    """Accepted draws of one rejection-ABC run plus run metadata.

    Draws are stored column-wise: ``thetas`` is ``(N, d)``, ``summaries`` is
    ``(N, k)`` and ``distances`` is ``(N,)``.
    """

    thetas: np.ndarray
    summaries: np.ndarray
    distances: np.ndarray
    total_simulated: int
    epsilon: float
    observed_summary: np.ndarray
    seed: int
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.thetas.shape[0] != self.summaries.shape[0] or self.thetas.shape[0] != self.distances.shape[0]:
            raise DimensionError("thetas, summaries and distances must have the same number of rows")
        if self.summaries.shape[1] != self.observed_summary.shape[0]:
            raise DimensionError("summary width does not match the observed summary")
        if len(self) > self.total_simulated:
            raise ConfigurationError("more accepted draws than simulations")

    def __len__(self) -> int:
        return self.thetas.shape[0]

    def __iter__(self) -> Iterator[AcceptedDraw]:
        for t, s, dist in zip(self.thetas, self.summaries, self.distances):
            yield AcceptedDraw(t, s, float(dist))

    @property
    def draws(self) -> list[AcceptedDraw]:
        return list(self)

    @property
    def d(self) -> int:
        return self.thetas.shape[1]

    @property
    def k(self) -> int:
        return self.summaries.shape[1]

    def filter(self, epsilon: float) -> "ReferenceTable":
        """Sub-table of draws with distance <= ``epsilon`` (which must not exceed the run's)."""
        if epsilon > self.epsilon:
            raise ConfigurationError(f"cannot re-filter at {epsilon} > run tolerance {self.epsilon}")
        keep = self.distances <= epsilon
        flags = tuple(f for f in self.flags if f != "no-acceptances")
        if not keep.any():
            flags = flags + ("no-acceptances",)
        return ReferenceTable(
            self.thetas[keep], self.summaries[keep], self.distances[keep],
            self.total_simulated, float(epsilon), self.observed_summary, self.seed, flags,
        )

    def metadata(self) -> dict:
        rate = len(self) / self.total_simulated if self.total_simulated else None
        return {
            "M": int(self.total_simulated),
            "epsilon": _json_float(self.epsilon),
            "seed": int(self.seed),
            "acceptance_rate": rate,
            "accepted": len(self),
            "observed_summary": [float(v) for v in self.observed_summary],
            "flags": list(self.flags),
        }

    def to_csv(self, path) -> Path:
        """Write draws as CSV and the metadata as a JSON sidecar next to it."""
        path = Path(path)
        header = (
            [f"theta_{i + 1}" for i in range(self.d)]
            + [f"S_{j + 1}" for j in range(self.k)]
            + ["distance"]
        )
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, s, dist in zip(self.thetas, self.summaries, self.distances):
                writer.writerow([repr(float(v)) for v in (*t, *s, dist)])
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2) + "\n", encoding="utf-8")
        return sidecar

    @classmethod
    def from_csv(cls, path) -> "ReferenceTable":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
        observed = np.asarray(meta["observed_summary"], dtype=float)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
        d = sum(h.startswith("theta_") for h in header)
        k = observed.shape[0]
        data = np.asarray(rows, dtype=float).reshape(-1, d + k + 1)
        return cls(
            data[:, :d], data[:, d:d + k], data[:, d + k],
            int(meta["M"]), _parse_float(meta["epsilon"]), observed,
            int(meta["seed"]), tuple(meta.get("flags", ())),
        )


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


def _parse_float(x) -> float:
    return float(x)

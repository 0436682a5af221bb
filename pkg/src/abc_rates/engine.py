"""Accept/reject ABC with reproducible, worker-count independent streams.

The ``M`` prior draws are cut into fixed-size blocks.  Block ``b`` draws all
of its randomness from ``SeedSequence(seed, spawn_key=(path, b))``, so the
reference table depends only on ``(seed, M)`` and never on how blocks are
distributed over worker processes.  Accepted draws are merged in block order.

Two simulation paths produce tables with the same distribution:

``direct``
    Every prior draw is simulated and its distance compared to ``eps``.
``localized``
    For models that provide an exact local proposal (see
    ``GenerativeModel.propose_local``) each block first draws the number of
    box candidates ``Binomial(block_size, p_c)`` and then simulates only those.
    This makes ``M`` in the 1e12 range affordable when the acceptance rate is
    tiny.  Nested-tolerance coupling only holds on the direct path.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import (
    ABCWarning,
    ConfigurationError,
    DimensionError,
    GenerativeModel,
    ReferenceTable,
    UndefinedError,
    as_summary_vector,
    row_distances,
)

log = logging.getLogger(__name__)

DIRECT_BLOCK = 1 << 15
LOCALIZED_BLOCK = 1 << 32

_DIRECT, _LOCALIZED, _PILOT = 0, 1, 2

Method = Literal["auto", "direct", "localized"]


@dataclass(frozen=True)
class Fixed:
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("tolerance must be positive")


@dataclass(frozen=True)
class Quantile:
    q: float
    m_pilot: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ConfigurationError("quantile level must lie strictly inside (0, 1)")
        if self.m_pilot < 100:
            raise ConfigurationError("pilot run needs at least 100 simulations")


ToleranceSpec = Fixed | Quantile


@dataclass(frozen=True)
class RunConfig:
    M: int
    tolerance: ToleranceSpec
    seed: int
    workers: int = 1
    method: Method = "auto"

    def __post_init__(self):
        if self.M < 0:
            raise ConfigurationError("M must be nonnegative")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.method not in ("auto", "direct", "localized"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if isinstance(self.tolerance, (int, float)):
            object.__setattr__(self, "tolerance", Fixed(float(self.tolerance)))


def block_rng(seed: int, path: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path, block)))


def resolve_tolerance(model: GenerativeModel, observed, spec: ToleranceSpec, seed: int) -> float:
    """Turn a tolerance spec into a numeric ``eps``.

    ``Quantile`` runs a pilot of ``m_pilot`` prior-predictive simulations
    on its own stream and returns the linearly interpolated ``q``-quantile of
    their distances to ``observed``.
    """
    if isinstance(spec, Fixed):
        return spec.eps
    observed = as_summary_vector(observed, model.k)
    rng = block_rng(seed, _PILOT, 0)
    thetas = model.prior_sample(rng, spec.m_pilot)
    dist = row_distances(model.simulate_summaries(thetas, rng), observed)
    return quantile_tolerance(dist, spec.q)


def quantile_tolerance(distances, q: float) -> float:
    dist = np.asarray(distances, dtype=float)
    if np.all(dist == dist[0]):
        warnings.warn("degenerate pilot: all distances equal", ABCWarning, stacklevel=2)
        return float(dist[0])
    return float(np.quantile(dist, q, method="linear"))


def _direct_block(model, observed, eps, seed, block, size):
    rng = block_rng(seed, _DIRECT, block)
    thetas = model.prior_sample(rng, size)
    summaries = model.simulate_summaries(thetas, rng)
    dist = row_distances(summaries, observed)
    keep = dist <= eps
    return thetas[keep], summaries[keep], dist[keep]


def _localized_block(model, observed, eps, seed, block, size):
    rng = block_rng(seed, _LOCALIZED, block)
    count = int(rng.binomial(size, model.local_candidate_probability(eps)))
    thetas, summaries, valid = model.propose_local(observed, eps, count, rng)
    dist = row_distances(summaries, observed)
    keep = valid & (dist <= eps)
    return thetas[keep], summaries[keep], dist[keep]


def _run_chunk(args):
    fn, model, observed, eps, seed, blocks = args
    return [fn(model, observed, eps, seed, b, size) for b, size in blocks]


def _blocks(M: int, block_size: int) -> list[tuple[int, int]]:
    full, rest = divmod(M, block_size)
    out = [(b, block_size) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def choose_method(model: GenerativeModel, eps: float, method: Method = "auto") -> str:
    localized_ok = (
        getattr(model, "supports_localized", False)
        and np.isfinite(eps)
        and model.local_candidate_probability(eps) < 1.0
    )
    if method == "localized" and not localized_ok:
        raise ConfigurationError("model has no localized proposal valid at this tolerance")
    if method == "auto":
        return "localized" if localized_ok else "direct"
    return method


def run_rejection(model: GenerativeModel, observed, cfg: RunConfig) -> ReferenceTable:
    """Accept/reject ABC: ``M`` prior draws, keep those with distance <= eps.

    The boundary is inclusive.  An empty result is returned as an empty table
    flagged ``"no-acceptances"`` together with an ``ABCWarning``.
    """
    observed = as_summary_vector(observed, model.k)
    eps = resolve_tolerance(model, observed, cfg.tolerance, cfg.seed)
    path = choose_method(model, eps, cfg.method)
    if path == "localized":
        fn, blocks = _localized_block, _blocks(cfg.M, LOCALIZED_BLOCK)
    else:
        fn, blocks = _direct_block, _blocks(cfg.M, DIRECT_BLOCK)
    log.debug("run_rejection: M=%d eps=%g path=%s blocks=%d", cfg.M, eps, path, len(blocks))

    workers = min(cfg.workers, max(1, len(blocks)))
    if workers == 1:
        parts = _run_chunk((fn, model, observed, eps, cfg.seed, blocks))
    else:
        chunks = [blocks[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, [(fn, model, observed, eps, cfg.seed, c) for c in chunks]))
        by_block = {}
        for chunk, res in zip(chunks, results):
            by_block.update({b: r for (b, _), r in zip(chunk, res)})
        parts = [by_block[b] for b, _ in blocks]

    if parts:
        thetas = np.concatenate([p[0] for p in parts]).reshape(-1, model.d)
        summaries = np.concatenate([p[1] for p in parts]).reshape(-1, model.k)
        dist = np.concatenate([p[2] for p in parts])
    else:
        thetas, summaries, dist = np.empty((0, model.d)), np.empty((0, model.k)), np.empty(0)

    flags = ()
    if cfg.M == 0:
        flags = ("no-draws", "no-acceptances")
    elif dist.size == 0:
        flags = ("no-acceptances",)
    if "no-acceptances" in flags:
        warnings.warn(f"no draws accepted at eps={eps:g} out of M={cfg.M}", ABCWarning, stacklevel=2)
    return ReferenceTable(thetas, summaries, dist, int(cfg.M), float(eps), observed, int(cfg.seed), flags)


def acceptance_rate(table: ReferenceTable) -> float:
    if table.total_simulated == 0:
        raise UndefinedError("acceptance rate is undefined when no draws were simulated")
    return len(table) / table.total_simulated


def check_compatible(table: ReferenceTable, d: int, k: int) -> None:
    if table.d != d or table.k != k:
        raise DimensionError(f"table has (d, k)=({table.d}, {table.k}), expected ({d}, {k})")

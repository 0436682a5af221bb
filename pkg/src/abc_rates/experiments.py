"""Config-driven experiments behind the ``abc-rates`` command.

Every ``cmd_*`` function takes an :class:`ExperimentConfig`, writes CSV
curves plus a ``summary.json`` into ``config.out`` and returns
``(results, exit_code)``.
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .adjust import adjust_samples, fit_local_linear, oracle_adjustment
from .analysis import (
    RiskCurve,
    brute_force_posterior,
    estimate_density,
    l1_between,
    l1_discrepancy,
    loglog_slope,
    posterior_risk,
    segmented_slope,
)
from .core import ConfigurationError, DegenerateError, InsufficientDataError
from .engine import Fixed, Quantile, RunConfig, acceptance_rate, block_rng, run_rejection
from .models import UniformRiskModel, UniformShapeModel
from .theory import predict_acceptance_exponent, shape_posterior_for, write_density_curve

log = logging.getLogger(__name__)

EXPERIMENTS = ("shape", "risk", "acceptance-scaling", "oracle-check")
EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_CHECK = 0, 2, 3, 4

_OBSERVED_TAG = 100
_RUN_TAG = 101


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out: str = "out"
    workers: int = 1
    n: object = None  # int or list of ints
    k0: int = 2
    theta0: float = 0.5
    C: float = 1.0
    M: object = None  # int or list of ints, one per n
    target_accepted: int | None = None
    epsilon: object = None  # number or "inf" (oracle-check)
    epsilons: object = None  # list, or {"log10_min", "log10_max", "count"} (risk)
    quantile: float | None = None
    m_pilot: int = 10_000
    method: str = "auto"
    bins: int = 50
    grid_points: int = 200
    reps: int = 10_000
    replicates: int = 1
    min_accepted: int = 50
    tolerance: float = 0.2
    l1_threshold: float | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in obj or obj["seed"] is None:
            raise ConfigurationError("config must set a seed")
        if obj.get("experiment") not in EXPERIMENTS:
            raise ConfigurationError(f"experiment must be one of {EXPERIMENTS}")
        cfg = cls(**obj)
        if cfg.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        obj.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(obj)

    def n_list(self) -> list[int]:
        if self.n is None:
            raise ConfigurationError("config must set n")
        values = self.n if isinstance(self.n, list) else [self.n]
        return [int(v) for v in values]

    def M_for(self, i: int, approx_rate: float | None = None) -> int:
        if self.M is not None:
            values = self.M if isinstance(self.M, list) else None
            if values is not None:
                return int(values[i])
            return int(self.M)
        if self.target_accepted is not None and approx_rate:
            return int(math.ceil(self.target_accepted / approx_rate))
        raise ConfigurationError("config must set M or target_accepted")


def derived_seed(seed: int, tag: int, index: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=(tag, index)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_summary(cfg: ExperimentConfig, results: dict, started: float) -> Path:
    out = Path(cfg.out)
    summary = {
        "config": asdict(cfg),
        "results": results,
        "runtime_seconds": time.perf_counter() - started,
        "version": version_string(),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, default=_jsonable) + "\n", encoding="utf-8")
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _tolerance(cfg: ExperimentConfig, eps: float):
    if cfg.quantile is not None:
        return Quantile(cfg.quantile, cfg.m_pilot)
    return Fixed(eps)


def cmd_shape(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Empirical vs limiting posterior for the uniform shape model, per n."""
    started = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    per_n, code = [], EXIT_OK
    for i, n in enumerate(cfg.n_list()):
        model = UniformShapeModel(n=n, k0=cfg.k0, theta0=cfg.theta0)
        tp = shape_posterior_for(model, cfg.C)
        observed = model.observe(block_rng(cfg.seed, _OBSERVED_TAG, i))
        M = cfg.M_for(i, model.approx_acceptance_rate(tp.epsilon))
        run = RunConfig(M, _tolerance(cfg, tp.epsilon), derived_seed(cfg.seed, _RUN_TAG, i), cfg.workers, cfg.method)
        table = run_rejection(model, observed, run)
        entry = {"n": n, "epsilon": table.epsilon, "M": M, "accepted": len(table),
                 "acceptance_rate": acceptance_rate(table) if M else None}
        theta_grid = np.linspace(tp.theta0[0] - tp.epsilon, tp.theta0[0] + tp.epsilon, 401)
        write_density_curve(tp, theta_grid, out / f"theory_n{n}.csv")
        if len(table) < 100:
            entry["error"] = "too few accepted draws for a histogram"
            code = EXIT_DEGENERATE
            per_n.append(entry)
            continue
        hist = estimate_density(table.thetas[:, 0], cfg.bins)
        hist.to_csv(out / f"hist_n{n}.csv")
        entry["l1"] = l1_discrepancy(hist, tp)
        try:
            fit = fit_local_linear(table)
            oracle = oracle_adjustment(model.rate_profile(), observed)
            entry["B_fitted"] = fit.B[:, 0].tolist()
            entry["B_oracle"] = oracle.B[:, 0].tolist()
            entry["B_distance"] = float(np.linalg.norm(fit.B - oracle.B))
            entry["ridge_used"] = fit.ridge_used
        except (InsufficientDataError, DegenerateError) as exc:
            entry["adjustment_error"] = str(exc)
        if cfg.l1_threshold is not None:
            entry["l1_below_threshold"] = entry["l1"] < cfg.l1_threshold
        log.info("shape n=%d: accepted=%d l1=%.4f", n, len(table), entry["l1"])
        per_n.append(entry)
    results = {"per_n": per_n}
    _write_summary(cfg, results, started)
    return results, code


def risk_epsilons(cfg: ExperimentConfig) -> np.ndarray:
    spec = cfg.epsilons
    if isinstance(spec, dict):
        try:
            eps = np.logspace(float(spec["log10_max"]), float(spec["log10_min"]), int(spec["count"]))
        except KeyError as exc:
            raise ConfigurationError(f"epsilons spec missing {exc}") from exc
    elif isinstance(spec, list):
        eps = np.sort(np.asarray(spec, dtype=float))[::-1]
    else:
        raise ConfigurationError("risk experiment needs an epsilons list or log-range")
    if eps.size < 6:
        raise ConfigurationError("risk experiment needs at least 6 tolerances")
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ConfigurationError("tolerances must be positive and distinct")
    return eps


def cmd_risk(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Posterior risk against eps, with and without regression adjustment.

    One reference table per observed-data replicate is simulated at the
    loosest tolerance on the direct path and re-filtered at each smaller one.
    """
    started = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    eps_list = risk_epsilons(cfg)
    n = cfg.n_list()[0]
    model = UniformRiskModel(n=n, theta0=cfg.theta0)
    M = cfg.M_for(0)
    sq_van = np.zeros(eps_list.size)
    sq_adj = np.zeros(eps_list.size)
    counts = np.zeros(eps_list.size, dtype=int)
    short = np.zeros(eps_list.size, dtype=bool)
    for r in range(cfg.replicates):
        observed = model.observe(block_rng(cfg.seed, _OBSERVED_TAG, r))
        run = RunConfig(M, Fixed(float(eps_list[0])), derived_seed(cfg.seed, _RUN_TAG, r), cfg.workers, "direct")
        loose = run_rejection(model, observed, run)
        for j, eps in enumerate(eps_list):
            table = loose.filter(float(eps))
            counts[j] += len(table)
            if len(table) < max(cfg.min_accepted, model.k + 2):
                short[j] = True
                continue
            sq_van[j] += posterior_risk(table.thetas, model.theta0) ** 2
            adjusted = adjust_samples(table, fit_local_linear(table))
            sq_adj[j] += posterior_risk(adjusted, model.theta0) ** 2
    vanilla, adjusted = RiskCurve("vanilla"), RiskCurve("adjusted")
    for j, eps in enumerate(eps_list):
        rv = math.sqrt(sq_van[j] / cfg.replicates) if not short[j] else 0.0
        ra = math.sqrt(sq_adj[j] / cfg.replicates) if not short[j] else 0.0
        vanilla.add(float(eps), rv, int(counts[j]), bool(short[j]))
        adjusted.add(float(eps), ra, int(counts[j]), bool(short[j]))
    vanilla.to_csv(out / "risk_vanilla.csv")
    adjusted.to_csv(out / "risk_adjusted.csv")

    results = {"n": n, "M": M, "replicates": cfg.replicates, "excluded_epsilons": eps_list[short].tolist()}
    code = EXIT_OK
    try:
        slope, intercept = loglog_slope(vanilla.fit_points())
        results["vanilla"] = {"slope": slope, "intercept": intercept}
        seg = segmented_slope(adjusted.fit_points())
        results["adjusted"] = seg.to_dict()
        results["adjusted"]["steep_slope"] = max(seg.slope_left, seg.slope_right)
        results["adjusted"]["breakpoint_epsilon"] = 10 ** seg.breakpoint
    except InsufficientDataError as exc:
        results["error"] = str(exc)
        code = EXIT_DEGENERATE
    _write_summary(cfg, results, started)
    return results, code


def cmd_acceptance_scaling(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Acceptance rate against n under ``eps = C / sqrt(n)``, checked against the predicted exponent."""
    started = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ns = cfg.n_list()
    if len(ns) < 3:
        raise ConfigurationError("acceptance scaling needs at least 3 values of n")
    rows, code = [], EXIT_OK
    for i, n in enumerate(ns):
        model = UniformShapeModel(n=n, k0=cfg.k0, theta0=cfg.theta0)
        eps = cfg.C / math.sqrt(n)
        observed = model.observe(block_rng(cfg.seed, _OBSERVED_TAG, i))
        M = cfg.M_for(i, model.approx_acceptance_rate(eps))
        table = run_rejection(model, observed, RunConfig(M, Fixed(eps), derived_seed(cfg.seed, _RUN_TAG, i),
                                                         cfg.workers, cfg.method))
        rows.append({"n": n, "epsilon": eps, "M": M, "accepted": len(table),
                     "acceptance_rate": acceptance_rate(table) if M else 0.0})
    with open(out / "acceptance.csv", "w", encoding="utf-8") as fh:
        fh.write("n,epsilon,M,accepted,acceptance_rate\n")
        for row in rows:
            fh.write(f"{row['n']},{row['epsilon']!r},{row['M']},{row['accepted']},{row['acceptance_rate']!r}\n")
    predicted = predict_acceptance_exponent(UniformShapeModel(n=ns[0], k0=cfg.k0).rate_profile(), 1)
    results = {"rows": rows, "predicted_slope": predicted, "tolerance": cfg.tolerance}
    if any(r["accepted"] == 0 for r in rows):
        results["error"] = "zero acceptances at some n"
        code = EXIT_DEGENERATE
    else:
        slope, intercept = loglog_slope([(r["n"], r["acceptance_rate"]) for r in rows])
        results.update(fitted_slope=slope, intercept=intercept,
                       passed=abs(slope - predicted) <= cfg.tolerance)
        if not results["passed"]:
            code = EXIT_CHECK
    _write_summary(cfg, results, started)
    return results, code


def _parse_eps(value) -> float:
    if value is None:
        raise ConfigurationError("oracle-check needs epsilon")
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ConfigurationError(f"bad epsilon {value!r}")
    eps = float(value)
    if eps <= 0:
        raise ConfigurationError("epsilon must be positive")
    return eps


def oracle_grid(observed_fast: float, eps: float, points: int, support=(0.0, 1.0)) -> np.ndarray:
    lo, hi = support
    if math.isfinite(eps):
        lo, hi = max(lo, observed_fast - 1.25 * eps), min(hi, observed_fast + 1.25 * eps)
    h = (hi - lo) / points
    return lo + h * (np.arange(points) + 0.5)


def cmd_oracle_check(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Rejection ABC against the brute-force grid posterior on a small 1-d problem."""
    started = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    n = cfg.n_list()[0]
    if n > 1000:
        raise ConfigurationError("oracle-check is meant for n <= 1000")
    eps = _parse_eps(cfg.epsilon)
    model = UniformShapeModel(n=n, k0=cfg.k0, theta0=cfg.theta0)
    observed = model.observe(block_rng(cfg.seed, _OBSERVED_TAG, 0))
    method = "direct" if cfg.method == "auto" else cfg.method
    table = run_rejection(model, observed, RunConfig(cfg.M_for(0), Fixed(eps), derived_seed(cfg.seed, _RUN_TAG, 0),
                                                     cfg.workers, method))
    grid = oracle_grid(float(observed[-1]), eps, cfg.grid_points)
    oracle = brute_force_posterior(model, observed, eps, grid, cfg.reps, derived_seed(cfg.seed, _RUN_TAG, 1),
                                   cfg.workers)
    oracle.to_csv(out / "oracle.csv")
    results = {"n": n, "epsilon": str(eps) if not math.isfinite(eps) else eps, "M": table.total_simulated,
               "accepted": len(table)}
    if len(table) < 100:
        results["error"] = "too few accepted draws for a histogram"
        _write_summary(cfg, results, started)
        return results, EXIT_DEGENERATE
    hist = estimate_density(table.thetas[:, 0], cfg.bins)
    hist.to_csv(out / "abc_hist.csv")
    results["l1"] = l1_between(hist, oracle)
    if cfg.l1_threshold is not None:
        results["l1_below_threshold"] = results["l1"] < cfg.l1_threshold
    _write_summary(cfg, results, started)
    return results, EXIT_OK


COMMANDS = {
    "shape": cmd_shape,
    "risk": cmd_risk,
    "acceptance-scaling": cmd_acceptance_scaling,
    "oracle-check": cmd_oracle_check,
}

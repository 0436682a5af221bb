"""End-to-end acceptance checks.

Each test records a PASS/FAIL line through the ``report`` fixture; the lines
are printed in an "acceptance criteria" section at the end of the run.  All
thresholds are fixed here and the experiments use the checked-in configs.
"""

from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from abc_rates.adjust import fit_local_linear
from abc_rates.analysis import segmented_slope
from abc_rates.core import ReferenceTable
from abc_rates.engine import Fixed, RunConfig, run_rejection
from abc_rates.experiments import (
    ExperimentConfig,
    cmd_acceptance_scaling,
    cmd_oracle_check,
    cmd_risk,
    cmd_shape,
)
from abc_rates.models import UniformShapeModel
from abc_rates.theory import TheoreticalPosterior, theoretical_density

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SHAPE_L1_MAX = {10_000: 0.15, 1_000_000: 0.10}
SHAPE_MIN_ACCEPTED = 5000
SCALING_SLOPE, SCALING_TOL = -1.5, 0.2
VANILLA_SLOPE = (0.8, 1.2)
ADJUSTED_STEEP_SLOPE = (1.6, 2.2)
ADJUSTED_BREAKPOINT = (10**-2.0, 10**-1.2)
RISK_MIN_POINTS = 10
ORACLE_L1_MAX = 0.1
ORACLE_SEEDS = 5
B_TOL = 0.05
B_MIN_ACCEPTED = 2000

pytestmark = pytest.mark.slow


def _load(name, out, **overrides):
    return ExperimentConfig.load(CONFIGS / name, out=str(out), **overrides)


@pytest.fixture(scope="module")
def shape_results(tmp_path_factory):
    results, code = cmd_shape(_load("shape.json", tmp_path_factory.mktemp("shape")))
    assert code == 0
    return {row["n"]: row for row in results["per_n"]}


@pytest.fixture(scope="module")
def risk_results(tmp_path_factory):
    results, code = cmd_risk(_load("risk.json", tmp_path_factory.mktemp("risk")))
    assert code == 0
    return results


def test_criterion_1_shape_reproduction(shape_results, report):
    rows = [shape_results[n] for n in SHAPE_L1_MAX]
    passed = all(r["l1"] < SHAPE_L1_MAX[r["n"]] and r["accepted"] >= SHAPE_MIN_ACCEPTED for r in rows)
    detail = ", ".join(f"n={r['n']}: L1={r['l1']:.4f} (< {SHAPE_L1_MAX[r['n']]}), accepted={r['accepted']}"
                       for r in rows)
    report("1 shape reproduction", passed, detail)
    assert passed


def test_criterion_2_acceptance_scaling(tmp_path, report):
    results, _ = cmd_acceptance_scaling(_load("acceptance_scaling.json", tmp_path))
    slope = results["fitted_slope"]
    passed = abs(slope - SCALING_SLOPE) <= SCALING_TOL
    report("2 acceptance-rate scaling", passed, f"slope={slope:.4f}, target {SCALING_SLOPE} +/- {SCALING_TOL}")
    assert passed


def test_criterion_3a_vanilla_risk_slope(risk_results, report):
    slope = risk_results["vanilla"]["slope"]
    used = 15 - len(risk_results["excluded_epsilons"])
    passed = VANILLA_SLOPE[0] <= slope <= VANILLA_SLOPE[1] and used >= RISK_MIN_POINTS
    report("3a vanilla risk slope", passed, f"slope={slope:.4f} in {VANILLA_SLOPE}, {used} tolerances")
    assert passed


def test_criterion_3b_adjusted_risk_steep_slope(risk_results, report):
    steep = risk_results["adjusted"]["steep_slope"]
    passed = ADJUSTED_STEEP_SLOPE[0] <= steep <= ADJUSTED_STEEP_SLOPE[1]
    report("3b adjusted risk steep-segment slope", passed,
           f"steep slope={steep:.4f}, required {ADJUSTED_STEEP_SLOPE}")
    assert passed


def test_criterion_3c_adjusted_risk_breakpoint(risk_results, report):
    bp = risk_results["adjusted"]["breakpoint_epsilon"]
    passed = ADJUSTED_BREAKPOINT[0] <= bp <= ADJUSTED_BREAKPOINT[1]
    report("3c adjusted risk breakpoint", passed,
           f"breakpoint eps={bp:.4g}, required [{ADJUSTED_BREAKPOINT[0]:.4g}, {ADJUSTED_BREAKPOINT[1]:.4g}]")
    assert passed


def test_criterion_4_oracle_equivalence(tmp_path, report):
    base = _load("oracle_check.json", tmp_path).seed
    l1 = []
    for i in range(ORACLE_SEEDS):
        results, code = cmd_oracle_check(_load("oracle_check.json", tmp_path / str(i), seed=base + i))
        assert code == 0
        l1.append(results["l1"])
    passed = max(l1) < ORACLE_L1_MAX
    report("4 oracle equivalence", passed, f"L1 over {ORACLE_SEEDS} seeds = {[round(v, 4) for v in l1]}")
    assert passed


def test_criterion_5_adjustment_structure(shape_results, report):
    big = shape_results[1_000_000]
    slow, fast = big["B_fitted"][:-1], big["B_fitted"][-1]
    dist = [shape_results[n]["B_distance"] for n in (10_000, 100_000, 1_000_000)]
    passed = (
        big["accepted"] >= B_MIN_ACCEPTED
        and all(abs(b) < B_TOL for b in slow)
        and abs(fast - 1) < B_TOL
        and dist[0] > dist[1] > dist[2]
    )
    report("5 adjustment structure", passed,
           f"n=1e6 B={np.round(big['B_fitted'], 5).tolist()}, ||B - B*|| over n = {[f'{d:.3g}' for d in dist]}")
    assert passed


def _property_checks():
    checks = {}
    model = UniformShapeModel(n=500, k0=1)
    obs = model.observe(np.random.default_rng(0))
    runs = [run_rejection(model, obs, RunConfig(200_000, Fixed(0.05), 1, workers=w, method="direct"))
            for w in (1, 2, 4)]
    checks["determinism across workers"] = all(np.array_equal(runs[0].thetas, r.thetas) for r in runs[1:])

    small = run_rejection(model, obs, RunConfig(200_000, Fixed(0.02), 1, method="direct"))
    checks["nested tolerance subset"] = np.array_equal(runs[0].filter(0.02).thetas, small.thetas)

    rng = np.random.default_rng(1)
    S = rng.normal(size=(400, 3))
    theta = S[:, :1] + rng.normal(size=(400, 1))
    table = ReferenceTable(theta, S, np.linalg.norm(S, axis=1), 400, 100.0, np.zeros(3), 0)
    fit = fit_local_linear(table)
    resid = theta - fit.predict(S)
    checks["residual orthogonality < 1e-8"] = np.max(np.abs((S - S.mean(0)).T @ resid)) < 1e-8

    norm_ok, beta_ok = True, True
    for R in (0, 1, 2, 5):
        tp = TheoreticalPosterior(np.array([0.5]), 0.01, R, np.ones((1, 1)))
        mass, _ = integrate.quad(lambda t: theoretical_density(tp, t), 0.49, 0.51, epsabs=1e-12, limit=200)
        norm_ok &= abs(mass - 1) < 1e-6
        beta_ok &= abs(tp.normalizer - tp.quadrature_normalizer()) < 1e-10
    checks["density normalisation to 1e-6"] = norm_ok
    checks["Beta closed form vs quadrature to 1e-10"] = beta_ok

    lx = np.linspace(-2.2, -0.8, 15)
    step = lx[1] - lx[0]
    ok = True
    for bp in (-1.9, -1.6, -1.2):
        ly = np.where(lx < bp, -4.0, -4.0 + 2.0 * (lx - bp))
        ok &= abs(segmented_slope(np.column_stack([10**lx, 10**ly])).breakpoint - bp) <= step
    checks["segmented breakpoint recovery"] = ok
    return checks


def test_criterion_6_property_suites(report):
    checks = _property_checks()
    failed = [name for name, ok in checks.items() if not ok]
    report("6 property suites", not failed, "all passed" if not failed else f"failed: {failed}")
    assert not failed

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from abc_rates.core import ConfigurationError, DimensionError
from abc_rates.models import (
    Example1Model,
    UniformRiskModel,
    UniformShapeModel,
    build_rate_profile,
    midrange_offsets,
    summarize_uniform_risk,
    summarize_uniform_shape,
)


def test_summarize_uniform_shape_examples():
    np.testing.assert_allclose(summarize_uniform_shape([0.3, 0.1, 0.9], 1), [0.3, 0.5])
    np.testing.assert_allclose(summarize_uniform_shape([0.2, 0.8], 0), [0.5])
    with pytest.raises(DimensionError):
        summarize_uniform_shape([0.1, 0.2], 2)


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=30), st.floats(-5, 5), st.integers(0, 3))
def test_summarize_uniform_shape_is_shift_equivariant(data, c, k0):
    z = np.array(data)
    np.testing.assert_allclose(summarize_uniform_shape(z + c, k0),
                               summarize_uniform_shape(z, k0) + c, atol=1e-9)


def test_summarize_uniform_risk_examples():
    np.testing.assert_allclose(summarize_uniform_risk([1, 3, 0.5, 2]), [2.0, 0.5])
    np.testing.assert_allclose(summarize_uniform_risk(np.full(9, 0.7)), [0.7, 0.7])
    with pytest.raises(ConfigurationError):
        summarize_uniform_risk([1, 2, 3])
    with pytest.raises(ConfigurationError):
        UniformRiskModel(n=1000)


def test_rate_profiles():
    prof = build_rate_profile(UniformShapeModel(n=10**4, k0=2))
    np.testing.assert_allclose(prof.rates, [1, 1, 1e4])
    assert prof.k0 == 2 and prof.gradient_fast.tolist() == [[1.0]]

    prof = build_rate_profile(Example1Model(n=10**4, k1=0, scenario=1))
    np.testing.assert_allclose(prof.rates, [100, 1e4])
    assert prof.k0 == 1

    prof = build_rate_profile(Example1Model(n=10**4, k1=2, scenario=2))
    assert prof.k0 == 2 and prof.gradient_fast.shape == (2, 1)

    prof = build_rate_profile(UniformRiskModel(n=10**4))
    np.testing.assert_allclose(prof.rates, [10, 1e4])
    assert prof.k0 == 1
    np.testing.assert_allclose(prof.limit_map(np.array([0.3])), [0.8, 0.3])


def test_observations_lie_in_support(rng):
    for theta in (0.05, 0.5, 0.95):
        y = UniformShapeModel(n=1000, k0=2).simulate([theta], rng)
        assert np.all((y >= theta - 0.5) & (y <= theta + 0.5))
        x = UniformRiskModel(n=400).simulate([theta], rng)
        assert np.all((x >= theta) & (x <= theta + 1))
    t = np.full((5000, 1), 0.4)
    s = UniformShapeModel(n=10**6, k0=2).simulate_summaries(t, rng)
    assert np.all(np.abs(s - 0.4) <= 0.5)
    r = UniformRiskModel(n=10**4).simulate_summaries(t, rng)
    assert np.all((r >= 0.4) & (r <= 1.4))
    assert np.all(r[:, 1] <= r[:, 0])


def test_midrange_sampler_matches_brute_force(rng):
    # direct order-statistic sampler against explicit simulation of m uniforms
    m = 25
    fast = midrange_offsets(20_000, m, rng)
    u = rng.random((20_000, m)) - 0.5
    slow = (u.max(axis=1) + u.min(axis=1)) / 2
    assert stats.ks_2samp(fast, slow).pvalue > 1e-3


@pytest.mark.parametrize("model", [UniformShapeModel(n=40, k0=2), UniformRiskModel(n=36)])
def test_direct_summaries_match_full_simulation(model, rng):
    t = np.full((4000, 1), 0.45)
    fast = model.simulate_summaries(t, rng)
    slow = np.array([model.summarize(model.simulate(th, rng)) for th in t])
    for j in range(model.k):
        assert stats.ks_2samp(fast[:, j], slow[:, j]).pvalue > 1e-3


def test_minimum_statistic_mean():
    # E[min of n U(theta, theta+1)] = theta + 1/(n + 1)
    model = UniformRiskModel(n=10_000)
    rng = np.random.default_rng(3)
    s2 = model.simulate_summaries(np.full((200_000, 1), 0.3), rng)[:, 1]
    se = s2.std(ddof=1) / np.sqrt(s2.size)
    assert abs(s2.mean() - (0.3 + 1 / 10_001)) < 3 * se


def test_midrange_is_unbiased_for_theta():
    model = UniformShapeModel(n=1000, k0=2)
    mid = model.simulate_summaries(np.full((10_000, 1), 0.37), np.random.default_rng(4))[:, -1]
    se = mid.std(ddof=1) / np.sqrt(mid.size)
    assert abs(mid.mean() - 0.37) < 3 * se


def test_example1_mean_has_variance_one_twelfth():
    model = Example1Model(n=10_000, k1=1)
    s = model.simulate_summaries(np.full((10_000, 1), 0.6), np.random.default_rng(5))
    z = np.sqrt(model.n) * (s[:, 1] - 0.6)
    assert abs(z.var(ddof=1) / (1 / 12) - 1) < 0.05
    assert np.all(s[:, 2] <= 1.1) and np.all(s[:, 2] >= s[:, 1])


def test_localized_proposal_support(rng):
    model = UniformShapeModel(n=500, k0=2)
    obs = np.array([0.2, 0.9, 0.51])
    theta, summaries, valid = model.propose_local(obs, 0.03, 1000, rng)
    assert np.all(np.abs(summaries - obs) <= 0.03)
    assert theta.shape == (1000, 1)
    assert valid.any()
    assert model.local_candidate_probability(0.03) == pytest.approx(0.06**3)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from abc_rates.core import ConfigurationError, RateProfile, UnsupportedRegimeError
from abc_rates.models import UniformShapeModel
from abc_rates.theory import (
    TheoreticalPosterior,
    normalize,
    predict_acceptance_exponent,
    shape_posterior_for,
    theoretical_density,
    unit_ball_integral,
)


def tp1(R, eps=0.1, a=1.0, theta0=0.5):
    return TheoreticalPosterior(np.array([theta0]), eps, R, np.array([[a]]))


def test_flat_density_when_no_slow_statistics():
    tp = tp1(0, eps=0.1, a=2.0)
    assert theoretical_density(tp, 0.52) == pytest.approx(2.0 / 0.2)
    assert theoretical_density(tp, 0.56) == 0.0


def test_peak_and_boundary_for_two_slow_statistics():
    tp = tp1(2, eps=0.1)
    assert theoretical_density(tp, 0.5) == pytest.approx(3 / (4 * 0.1))
    assert theoretical_density(tp, 0.6) == pytest.approx(0.0, abs=1e-12)
    assert theoretical_density(tp, 0.61) == 0.0


def test_normalizer_examples():
    assert normalize(tp1(0, eps=0.1)) == pytest.approx(0.2)
    assert normalize(tp1(2, eps=1.0)) == pytest.approx(4 / 3)


@pytest.mark.parametrize("R", [0, 1, 2, 5])
def test_closed_form_normalizer_matches_quadrature(R):
    tp = tp1(R, eps=0.03, a=1.7)
    assert abs(tp.normalizer - tp.quadrature_normalizer()) < 1e-10


@pytest.mark.parametrize("R", [0, 1, 2, 3.5])
def test_two_dimensional_density_integrates_to_one(R):
    G = np.array([[1.0, 0.3], [0.2, 2.0], [0.5, -0.4]])
    tp = TheoreticalPosterior(np.array([0.1, -0.2]), 0.4, R, G)
    assert unit_ball_integral(2, R) == pytest.approx(math.pi / (R / 2 + 1), rel=1e-9)
    # integrate in whitened polar coordinates around theta0
    L = np.linalg.cholesky(G.T @ G)
    Linv_t = np.linalg.inv(L).T

    def f(r, phi):
        x = tp.epsilon * r * np.array([math.cos(phi), math.sin(phi)])
        theta = tp.theta0 + Linv_t @ x
        return theoretical_density(tp, theta) * r

    val, _ = integrate.dblquad(f, 0, 2 * math.pi, 0, 1, epsabs=1e-10, epsrel=1e-10)
    jac = tp.epsilon**2 / math.sqrt(np.linalg.det(G.T @ G))
    assert val * jac == pytest.approx(1.0, abs=1e-6)


def test_acceptance_exponents():
    shape = UniformShapeModel(n=100, k0=2).rate_profile()
    assert predict_acceptance_exponent(shape, 1) == -1.5
    assert predict_acceptance_exponent(RateProfile(np.array([1.0]), 100, 0, np.ones((1, 1))), 1) == -0.5
    prof = RateProfile(np.zeros(2).tolist() + [1.0, 1.0], 100, 2, np.eye(2))
    assert predict_acceptance_exponent(prof, 2) == -2.0
    prof = RateProfile(np.array([0.0, 0.0, 0.0, 1.0]), 100, 3, np.ones((1, 1)))
    assert predict_acceptance_exponent(prof, 1) == -2.0
    with pytest.raises(UnsupportedRegimeError):
        predict_acceptance_exponent(RateProfile(np.array([0.25, 1.0]), 100, 1, np.ones((1, 1))), 1)


def test_shape_posterior_parameters():
    tp = shape_posterior_for(UniformShapeModel(n=10_000, k0=2), 1.0)
    assert tp.epsilon == pytest.approx(0.01) and tp.R == 2
    tp4 = shape_posterior_for(UniformShapeModel(n=40_000, k0=2), 1.0)
    assert tp4.epsilon == pytest.approx(tp.epsilon / 2)
    with pytest.raises(ConfigurationError):
        shape_posterior_for(UniformShapeModel(n=100, k0=2), 0.0)


@given(st.floats(0, 8), st.floats(0.01, 1.0), st.floats(0, 1), st.floats(0, 1))
def test_density_decreases_away_from_centre(R, eps, u, v):
    tp = tp1(R, eps=eps)
    near, far = sorted([u, v])
    d_near = theoretical_density(tp, 0.5 + near * eps)
    d_far = theoretical_density(tp, 0.5 + far * eps)
    assert d_near >= d_far - 1e-12 * max(1.0, d_near)
    assert theoretical_density(tp, 0.5 - near * eps) == pytest.approx(d_near)


@given(st.floats(0, 6), st.floats(0, 6))
def test_larger_R_concentrates_mass(R1, R2):
    lo, hi = sorted([R1, R2])
    a, b = tp1(lo), tp1(hi)
    assert theoretical_density(b, 0.5) >= theoretical_density(a, 0.5) - 1e-12


def test_inverse_cdf_sampler_matches_density():
    tp = tp1(2, eps=0.05)
    x = tp.sample(20_000, np.random.default_rng(8))
    assert np.all(np.abs(x - 0.5) <= 0.05)
    assert stats.kstest(x, lambda t: tp.cdf(t)).pvalue > 1e-3
    assert tp.cdf(0.45) == 0.0 and tp.cdf(0.55) == 1.0 and tp.cdf(0.5) == pytest.approx(0.5)

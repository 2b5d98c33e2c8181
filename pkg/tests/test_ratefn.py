import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import golden_section_min, semicircle_quad
from rank1_ldp.measures import SpectralMeasure
from rank1_ldp.ratefn import (
    RateParams,
    as_limit,
    j_integral,
    normalization_log_ratio,
    phi,
    rate_branch,
    rate_F,
    rate_F_phi_form,
    rate_K,
    rate_profile,
    theta_c,
)

GRID_PARAMS = [RateParams(b, t) for b in (1, 2) for t in (0.2, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0)]


def branch_two_closed_form(beta, theta, x):
    """F on the branch where the shifted root is x itself, simplified by hand."""
    return (0.5 * j_integral(beta, x) - theta * x + 0.25 * x * x + 0.25 * beta
            + 0.5 * beta * math.log(theta) - 0.25 * beta * math.log(0.5 * beta))


def test_params_and_thresholds():
    assert theta_c(2) == 1.0
    assert theta_c(1) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    with pytest.raises(ValueError):
        RateParams(3, 1.0)
    with pytest.raises(ValueError):
        RateParams(2, 0.0)
    p = RateParams(2, 1.0)
    assert p.x_b == 2.0 == p.edge


def test_as_limit_examples():
    assert as_limit(RateParams(2, 2.0)) == 2.5
    assert as_limit(RateParams(2, 1.0)) == 2.0
    assert as_limit(RateParams(1, 0.5)) == pytest.approx(math.sqrt(2), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(0.01, 10))
def test_as_limit_at_or_above_edge(beta, theta):
    p = RateParams(beta, theta)
    assert as_limit(p) >= p.edge
    assert p.x_b >= p.edge - 1e-15


# -- J -----------------------------------------------------------------------

def test_j_examples():
    assert j_integral(2, 2.0) == 0.0
    assert j_integral(2, 3.0) == pytest.approx(1.4292546660112706, abs=1e-12)
    with pytest.raises(ValueError):
        j_integral(2, 1.99)


@pytest.mark.parametrize("beta", [1, 2])
def test_j_matches_quadrature(beta):
    edge = math.sqrt(2 * beta)
    for x in edge + np.array([0.0, 0.01, 0.3, 1.0, 3.0, 7.0]):
        q, _ = integrate.quad(lambda z: math.sqrt(max(z * z - 2 * beta, 0.0)), edge, x,
                              epsabs=1e-13, epsrel=1e-13)
        assert abs(j_integral(beta, x) - q) <= 1e-10


def test_j_derivative():
    h, x = 1e-5, 2.5
    fd = (j_integral(2, x + h) - j_integral(2, x - h)) / (2 * h)
    assert fd == pytest.approx(math.sqrt(x * x - 4), rel=1e-6)


# -- Phi ---------------------------------------------------------------------

def test_phi_examples():
    assert phi(2, 2.0) == pytest.approx(-1.0, abs=1e-12)
    q = 2 * semicircle_quad(2, lambda y: math.log(abs(2.0 - y))) - 2.0
    assert phi(2, 2.0) == pytest.approx(q, abs=1e-6)
    assert phi(1, math.e, SpectralMeasure([0.0])) == pytest.approx(1 - math.e ** 2 / 2, abs=1e-14)


@pytest.mark.parametrize("beta", [1, 2])
def test_log_potential_identity_on_grid(beta):
    edge = math.sqrt(2 * beta)
    const = -beta / 2 + (beta / 2) * math.log(beta / 2)
    for k in range(1, 40):
        x = edge + 0.1 * k
        integral = semicircle_quad(beta, lambda y: math.log(x - y))
        lhs = const - beta * integral + x * x / 2
        assert abs(lhs - j_integral(beta, x)) <= 1e-8


# -- F -----------------------------------------------------------------------

def test_rate_F_examples():
    p = RateParams(2, 0.5)
    assert rate_F(p, 2.0) == pytest.approx(-0.125, abs=1e-12)
    for x in (2.0, 2.2, 2.5):
        assert rate_F(p, x) == pytest.approx(j_integral(2, x) - 0.125, abs=1e-10)
    assert rate_F(p, 1.9) == math.inf
    assert rate_K(p, 1.9) == math.inf


@pytest.mark.parametrize("p", GRID_PARAMS, ids=str)
def test_rate_F_forms_agree(p):
    for x in p.edge + np.linspace(0, 6, 61):
        a, b = rate_F(p, x), rate_F_phi_form(p, x)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


@pytest.mark.parametrize("p", GRID_PARAMS, ids=str)
def test_rate_F_branch_two_closed_form(p):
    for x in np.linspace(max(p.x_b, p.edge), p.x_b + 5, 30):
        assert rate_F(p, x) == pytest.approx(branch_two_closed_form(p.beta, p.theta, x), abs=1e-10)


@pytest.mark.parametrize("p", GRID_PARAMS, ids=str)
def test_branch_labels(p):
    assert rate_branch(p, p.edge - 0.1) == 0
    if p.supercritical:
        assert rate_branch(p, p.edge) == 2
    else:
        assert rate_branch(p, p.edge) == 1
        assert rate_branch(p, p.x_b + 0.01) == 2


@pytest.mark.parametrize("theta", [1.2, 2.0, 3.0])
@pytest.mark.parametrize("beta", [1, 2])
def test_F_stationary_at_xb_when_supercritical(beta, theta):
    p, h = RateParams(beta, theta), 1e-5
    fd = (rate_F(p, p.x_b + h) - rate_F(p, p.x_b - h)) / (2 * h)
    assert abs(fd) <= 1e-6


# -- inf F and K -------------------------------------------------------------

def test_normalisation_examples():
    assert normalization_log_ratio(RateParams(2, 0.5)) == -0.125
    assert normalization_log_ratio(RateParams(1, 0.3)) == pytest.approx(-0.045, abs=1e-15)
    p = RateParams(2, 2.0)
    _, fmin = golden_section_min(lambda x: rate_F(p, x), 2.0, 10.0, tol=1e-10)
    assert normalization_log_ratio(p) == pytest.approx(fmin, abs=1e-10)


@pytest.mark.parametrize("p", GRID_PARAMS, ids=str)
def test_inf_F_matches_golden_section(p):
    xmin, fmin = golden_section_min(lambda x: rate_F(p, x), p.edge, p.edge + 10, tol=1e-10)
    assert normalization_log_ratio(p) == pytest.approx(fmin, abs=1e-9)
    assert xmin == pytest.approx(as_limit(p), abs=1e-4)


@pytest.mark.parametrize("p", GRID_PARAMS, ids=str)
def test_K_vanishes_only_at_limit(p):
    x_star = as_limit(p)
    assert abs(rate_K(p, x_star)) <= 1e-10
    xs = p.edge + np.arange(0, 4, 1e-3)
    ks = np.array([rate_K(p, x) for x in xs])
    assert np.all(ks >= -1e-12)
    away = np.abs(xs - x_star) > 0.01
    assert np.all(ks[away] > 1e-8)
    right = xs >= x_star
    assert np.all(np.diff(ks[right]) >= -1e-12)


@pytest.mark.parametrize("theta", [0.2, 0.5, 0.7])
@pytest.mark.parametrize("beta", [1, 2])
def test_K_continuous_at_switch_point(beta, theta):
    p = RateParams(beta, theta)
    if p.supercritical:
        pytest.skip("no interior switch point above theta_c")
    eps = 1e-12
    left, right = rate_K(p, p.x_b - eps), rate_K(p, p.x_b + eps)
    assert abs(left - right) <= 1e-9


def test_K_is_J_below_switch_point():
    p = RateParams(2, 0.5)
    for x in (2.0, 2.3, 2.5):
        assert rate_K(p, x) == pytest.approx(j_integral(2, x), abs=1e-10)
    assert rate_K(p, 2.5) == pytest.approx(0.48870563888, abs=1e-10)


def test_K_supercritical_example():
    p = RateParams(2, 2.0)
    _, fmin = golden_section_min(lambda x: rate_F(p, x), 2.0, 10.0, tol=1e-10)
    assert rate_K(p, 3.0) == pytest.approx(rate_F(p, 3.0) - fmin, abs=1e-9)


def test_K_tends_to_J_as_theta_vanishes():
    for beta in (1, 2):
        for x in (math.sqrt(2 * beta) + 0.3, math.sqrt(2 * beta) + 1.0):
            assert rate_K(RateParams(beta, 1e-4), x) == pytest.approx(j_integral(beta, x), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(0.05, 4), st.floats(0, 5))
def test_K_nonnegative_property(beta, theta, off):
    p = RateParams(beta, theta)
    assert rate_K(p, p.edge + off) >= -1e-12


def test_rate_profile_bundle():
    prof = rate_profile(RateParams(2, 2.0))
    assert prof.x_star == 2.5
    assert prof.K(2.5) == pytest.approx(0.0, abs=1e-12)
    assert prof.F(3.0) - prof.inf_F == pytest.approx(prof.K(3.0), abs=1e-15)
    assert prof.K(1.0) == math.inf


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(0.02, 5), st.floats(0.0, 3), st.floats(1e-6, 5))
def test_K_decreases_with_theta_above_both_limits(beta, theta, dtheta, off):
    p1, p2 = RateParams(beta, theta), RateParams(beta, theta + dtheta)
    x = max(as_limit(p1), as_limit(p2)) + off
    assert rate_K(p2, x) <= rate_K(p1, x) + 1e-12

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvbellman.frontier import efficient_frontier_variance, frontier_recursion
from mvbellman.horizon import (
    HorizonSpec,
    closed_form_tau,
    horizon_objective,
    increment_sign_terms,
    objective_curve,
    optimal_tau,
    strategy_I,
    strategy_II,
    target_mean,
)
from mvbellman.market import AssumptionViolation, MarketParams, ModelError, beta_schedule, benchmark_market
from mvbellman.strategy import bellman_strategy, mu_from_target

from conftest import random_market

SPEC = HorizonSpec(alpha=0.5, theta=1.008)


def test_target_mean_examples():
    p = benchmark_market(100)
    assert abs(target_mean(SPEC, p, 30) - 1.6410) <= 5e-5
    assert abs(target_mean(SPEC, p, 63) - 1.8387) <= 5e-5
    tiny = HorizonSpec(alpha=1e-14, theta=1.008)
    assert target_mean(tiny, p, 40) == pytest.approx(1.0002**40, rel=1e-12)
    with pytest.raises(ModelError):
        target_mean(SPEC, p, 0)


def test_spec_validation():
    with pytest.raises(ModelError):
        HorizonSpec(alpha=0.0, theta=1.1)
    with pytest.raises(ModelError):
        HorizonSpec(alpha=1.0, theta=[1.1, 1.0])
    with pytest.raises(ModelError):
        HorizonSpec(alpha=1.0, theta=1.1, tau_max=0)


def test_objective_constant_case():
    p = MarketParams.constant(50, 1.0, [1.1], [[0.2]])
    beta = 0.25
    spec = HorizonSpec(alpha=0.7, theta=1.05, x=2.0)
    for tau in (1, 7, 50):
        expected = 0.49 * 4.0 / beta * 1.05 ** (2 * tau) / tau
        assert horizon_objective(spec, p, tau) == pytest.approx(expected, rel=1e-12)
    double = HorizonSpec(alpha=1.4, theta=1.05, x=2.0)
    _, a = objective_curve(spec, p)
    _, b = objective_curve(double, p)
    np.testing.assert_allclose(np.exp(b), 4 * np.exp(a), rtol=1e-12)


def test_objective_equals_frontier_variance_at_63():
    p = benchmark_market(63)
    J = horizon_objective(SPEC, p, 63)
    assert J == pytest.approx(efficient_frontier_variance(p, 0, 63, 1.0, target_mean(SPEC, p, 63)), rel=1e-12)
    assert abs(J - 0.0101) <= 5e-4


def test_zero_beta_raises():
    p = MarketParams.constant(3, 1.0, [1.0], [[0.1]])
    with pytest.raises(AssumptionViolation):
        horizon_objective(SPEC, p, 2)


def test_optimal_tau_examples():
    res = optimal_tau(SPEC, benchmark_market(10_000))
    assert res.tau_star == 63 == closed_form_tau(1.008)
    assert not res.truncated
    assert res.stop == 63
    sqrt2 = HorizonSpec(alpha=1.0, theta=math.sqrt(2.0))
    assert optimal_tau(sqrt2, benchmark_market(20)).tau_star == 1
    assert closed_form_tau(math.sqrt(2.0)) == 1


def test_truncation_flag():
    res = optimal_tau(SPEC, benchmark_market(40))
    assert res.truncated and res.stop is None
    assert res.tau_star == 40


def test_time_varying_theta_exhaustive():
    cycle = [1.02, 1.005, 1.01, 1.003, 1.015, 1.001, 1.007, 1.012, 1.002, 1.009]
    theta = np.tile(cycle, 20)
    p = MarketParams.constant(200, 1.0, [1.1], [[0.1]])  # beta = 1
    np.testing.assert_allclose(beta_schedule(p), 1.0)
    spec = HorizonSpec(alpha=0.3, theta=theta, tau_max=200)
    J = [0.09 * np.prod(theta[:tau]) ** 2 / tau for tau in range(1, 201)]
    assert optimal_tau(spec, p).tau_star == int(np.argmin(J)) + 1


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(1.0001, 1.5), beta_scale=st.floats(0.1, 3.0))
def test_constant_case_matches_ceiling(theta, beta_scale):
    n = closed_form_tau(theta)
    cap = 10 * n
    p = MarketParams.constant(cap, 1.0001, [1.0001 + 0.1 * math.sqrt(beta_scale)], [[0.1]])
    spec = HorizonSpec(alpha=0.5, theta=theta, tau_max=cap)
    res = optimal_tau(spec, p)
    taus, log_J = objective_curve(spec, p)
    ratio = 1.0 / (theta * theta - 1.0)
    if abs(ratio - round(ratio)) > 1e-9:
        assert res.tau_star == n
        assert res.tau_star == int(taus[np.argmin(log_J)])
    else:
        # J(n) and J(n+1) coincide analytically; rounding may land either side
        assert res.tau_star in (round(ratio), round(ratio) + 1)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_increment_sign_identity(seed):
    rng = np.random.default_rng(seed)
    T = 30
    p = random_market(rng, T=T)
    spec = HorizonSpec(alpha=0.4, theta=rng.uniform(1.001, 1.3, size=T))
    c = increment_sign_terms(spec, p)
    J = np.array([horizon_objective(spec, p, tau) for tau in range(1, T + 1)])
    diff = np.diff(J)
    mask = np.abs(c) > 1e-9 * np.abs(beta_schedule(p)).max()
    assert np.all(np.sign(diff[mask]) == np.sign(c[mask]))


def test_strategy_II_constant_case():
    p = benchmark_market(10_000)
    s2 = strategy_II(SPEC, p)
    assert s2.horizon == 63
    beta = beta_schedule(p)[0]
    direction = np.linalg.solve(p.covariance[0], p.gamma[0])
    for s in (0, 30, 62):
        # the last period carries no discount, hence the exponent s + 1 - tau*
        expected = (0.5 * 1.008**63 / (63 * beta)) * direction * 1.0002 ** (s + 1 - 63)
        np.testing.assert_allclose(s2.allocations[s], expected, rtol=1e-10)
    sub = p.truncate(63)
    mu = mu_from_target(sub, 0, 1.0, target_mean(SPEC, p, 63))
    np.testing.assert_array_equal(s2.allocations, bellman_strategy(sub, mu).allocations)


def test_mean_hits_target_at_tau_star():
    p = benchmark_market(200)
    s2 = strategy_II(SPEC, p)
    curve = frontier_recursion(p.truncate(63), s2.mu, 0, 1.0)
    g = target_mean(SPEC, p, 63)
    assert curve.mean[-1] == pytest.approx(g, abs=1e-9)
    assert np.all(curve.mean[:-1] < g)


def test_strategy_I_hits_its_own_target():
    p = benchmark_market(100)
    for tau in (1, 30, 90):
        s1 = strategy_I(SPEC, p, tau)
        assert s1.horizon == tau
        curve = frontier_recursion(p.truncate(tau), s1.mu, 0, 1.0)
        assert curve.mean[-1] == pytest.approx(target_mean(SPEC, p, tau), abs=1e-9)

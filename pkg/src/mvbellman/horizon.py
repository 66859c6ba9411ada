"""Varying investment period: moving target g(tau), objective J(tau), optimal tau."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market import AssumptionViolation, MarketParams, ModelError, beta_schedule, r_prod
from .strategy import StrategySchedule, bellman_strategy, mu_from_target

DEFAULT_TAU_MAX = 10_000
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class HorizonSpec:
    alpha: float
    theta: float | np.ndarray
    tau_max: int = DEFAULT_TAU_MAX
    x: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ModelError("alpha must be positive")
        if not np.all(np.asarray(self.theta) > 1):
            raise ModelError("theta(s) must exceed 1 for every period")
        if self.tau_max < 1:
            raise ModelError("tau_max must be at least 1")

    def theta_schedule(self, length: int) -> np.ndarray:
        th = np.asarray(self.theta, dtype=float)
        if th.ndim == 0:
            return np.full(length, float(th))
        if th.size < length:
            raise ModelError(f"theta schedule has {th.size} periods, need {length}")
        return th[:length]

    def search_cap(self, params: MarketParams) -> int:
        cap = min(self.tau_max, params.horizon_T)
        th = np.asarray(self.theta)
        if th.ndim == 1:
            cap = min(cap, th.size)
        return cap


def _check_tau(tau):
    if tau < 1:
        raise ModelError(f"investment period must be >= 1, got {tau}")


def target_mean(spec: HorizonSpec, params: MarketParams, tau: int) -> float:
    """g(tau) = x prod_{h<tau} r(h) + alpha x prod_{h<tau} theta(h)."""
    _check_tau(tau)
    theta = spec.theta_schedule(tau)
    return spec.x * r_prod(params, 0, tau - 1) + spec.alpha * spec.x * float(np.prod(theta))


def horizon_objective(spec: HorizonSpec, params: MarketParams, tau: int) -> float:
    """Minimal terminal variance at horizon tau under target g(tau)."""
    _check_tau(tau)
    beta_sum = beta_schedule(params)[:tau].sum()
    if not beta_sum > 0:
        raise AssumptionViolation(f"sum of beta over [0, {tau - 1}] is zero")
    theta = spec.theta_schedule(tau)
    return float(spec.alpha**2 * spec.x**2 * np.prod(theta) ** 2 / beta_sum)


def objective_curve(spec: HorizonSpec, params: MarketParams, cap: int | None = None):
    """log J(tau) for tau = 1..cap (log space keeps long horizons finite)."""
    cap = spec.search_cap(params) if cap is None else cap
    beta = beta_schedule(params)[:cap]
    beta_cum = np.cumsum(beta)
    if not beta_cum[0] > 0:
        raise AssumptionViolation("beta(0) is zero")
    log_theta_cum = np.cumsum(np.log(spec.theta_schedule(cap)))
    log_J = 2.0 * math.log(spec.alpha * abs(spec.x)) + 2.0 * log_theta_cum - np.log(beta_cum)
    return np.arange(1, cap + 1), log_J


def increment_sign_terms(spec: HorizonSpec, params: MarketParams, cap: int | None = None) -> np.ndarray:
    """c(s) = (theta(s)^2 - 1) sum_{h<s} beta(h) - beta(s) for s = 1..cap-1.

    J(s+1) - J(s) carries the sign of c(s).
    """
    cap = spec.search_cap(params) if cap is None else cap
    beta = beta_schedule(params)[:cap]
    theta = spec.theta_schedule(cap)
    s = np.arange(1, cap)
    return (theta[s] ** 2 - 1.0) * np.cumsum(beta)[s - 1] - beta[s]


@dataclass(frozen=True)
class OptimalTau:
    tau_star: int
    objective: float
    truncated: bool
    stop: int | None  # first s from which J is non-decreasing up to the cap
    taus: np.ndarray
    log_J: np.ndarray

    @property
    def J(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_J)


def optimal_tau(spec: HorizonSpec, params: MarketParams) -> OptimalTau:
    """Horizon minimising J over 1..min(tau_max, T); ties go to the shorter horizon.

    J is evaluated at every candidate. ``stop`` is the start of the final run
    on which the increment condition c(s) >= 0 holds; if J is still
    decreasing at the cap the result is flagged truncated.
    """
    cap = spec.search_cap(params)
    taus, log_J = objective_curve(spec, params, cap)
    best = log_J.min()
    # log-space tie tolerance ~ relative tolerance on J
    tau_star = int(taus[np.nonzero(log_J <= best + TIE_RTOL)[0][0]])
    c = increment_sign_terms(spec, params, cap)
    stop = None
    truncated = True
    if cap == 1:
        truncated, stop = False, 1
    elif c[-1] >= 0:
        truncated = False
        neg = np.nonzero(c < 0)[0]
        stop = int(neg[-1] + 2) if neg.size else 1
    return OptimalTau(
        tau_star=tau_star,
        objective=float(np.exp(log_J[tau_star - 1])),
        truncated=truncated,
        stop=stop,
        taus=taus,
        log_J=log_J,
    )


def closed_form_tau(theta: float) -> int:
    """ceil(1 / (theta^2 - 1)) for a constant excess factor."""
    return max(1, math.ceil(1.0 / (theta * theta - 1.0)))


def strategy_I(spec: HorizonSpec, params: MarketParams, tau: int) -> StrategySchedule:
    """Bellman strategy on [0, tau) calibrated so the terminal mean equals g(tau)."""
    sub = params.truncate(tau)
    mu = mu_from_target(sub, 0, spec.x, target_mean(spec, params, tau))
    return bellman_strategy(sub, mu, 0)


def strategy_II(spec: HorizonSpec, params: MarketParams) -> StrategySchedule:
    """Bellman strategy on the optimal horizon tau*."""
    return strategy_I(spec, params, optimal_tau(spec, params).tau_star)

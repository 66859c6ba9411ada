"""Closed-form strategies: Bellman (time-consistent), pre-committed and 1/n.

All allocations are capital amounts invested in each risky asset; the
remainder of wealth sits in the bond.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import (
    InfeasibleTarget,
    MarketParams,
    ModelError,
    beta_schedule,
    discount_to_end,
    r_prod,
    risky_direction,
)

BELLMAN = "bellman"
PRECOMMITTED = "precommitted"
EQUAL_WEIGHT = "equal_weight"


@dataclass(frozen=True)
class StrategySchedule:
    """A per-period allocation rule on periods start, ..., start + horizon - 1.

    bellman: fixed capital vectors ``allocations[k]``.
    precommitted: affine rule ``intercept[k] - slope[k] * X``.
    equal_weight: ``X / n`` in each asset.
    """

    kind: str
    n_assets: int
    start: int = 0
    allocations: np.ndarray | None = None
    intercept: np.ndarray | None = None
    slope: np.ndarray | None = None
    mu: float | None = None
    lam: float | None = None

    @property
    def horizon(self) -> int | None:
        if self.kind == BELLMAN:
            return len(self.allocations)
        if self.kind == PRECOMMITTED:
            return len(self.intercept)
        return None

    @property
    def state_independent(self) -> bool:
        return self.kind == BELLMAN

    def allocate(self, k: int, wealth) -> np.ndarray:
        """Capital vector(s) for period offset k given current wealth (scalar or (M,))."""
        wealth = np.asarray(wealth, dtype=float)
        if self.kind == BELLMAN:
            return np.broadcast_to(self.allocations[k], wealth.shape + (self.n_assets,))
        if self.kind == PRECOMMITTED:
            return self.intercept[k] - wealth[..., None] * self.slope[k]
        if self.kind == EQUAL_WEIGHT:
            return np.repeat(wealth[..., None] / self.n_assets, self.n_assets, axis=-1)
        raise ModelError(f"unknown strategy kind {self.kind!r}")


def _check_mu(mu):
    if not mu > 0:
        raise ModelError(f"risk aversion mu must be positive, got {mu}")


def bellman_strategy(params: MarketParams, mu: float, t: int = 0) -> StrategySchedule:
    """Time-consistent optimal capital allocation for periods t..T-1.

    pi*(s) = [sigma sigma']^{-1} gamma(s)' / (2 mu prod_{h=s+1}^{T-1} r(h)),
    i.e. the amount whose terminal-value exposure is the same in every
    period. It does not depend on wealth.
    """
    _check_mu(mu)
    T = params.horizon_T
    if not 0 <= t < T:
        raise ModelError(f"start period {t} outside 0..{T - 1}")
    disc = discount_to_end(params, t)
    alloc = risky_direction(params)[t:] / (2.0 * mu * disc[1:, None])
    alloc.setflags(write=False)
    return StrategySchedule(BELLMAN, params.n_assets, start=t, allocations=alloc, mu=mu)


def value_function(params: MarketParams, mu: float, t: int, x: float, y: float) -> float:
    """Optimal cost mu E[(X(T) - Y(T))^2] - E[X(T)] started from (t, x, y)."""
    _check_mu(mu)
    A = r_prod(params, t, params.horizon_T - 1)
    beta_sum = beta_schedule(params)[t:].sum()
    return mu * (x - y) ** 2 * A**2 - x * A - beta_sum / (4.0 * mu)


def mu_from_target(params: MarketParams, t: int, x: float, L: float) -> float:
    """Risk aversion whose Bellman strategy has terminal mean exactly L."""
    excess = L - x * r_prod(params, t, params.horizon_T - 1)
    if not excess > 0:
        raise InfeasibleTarget(
            f"target {L} must exceed risk-free growth x*prod r = {L - excess}"
        )
    return float(beta_schedule(params)[t:].sum() / (2.0 * excess))


def precommitted_lambda(params: MarketParams, mu: float, t: int, x: float) -> float:
    beta = beta_schedule(params)[t:]
    return float(np.prod(beta + 1.0) / (2.0 * mu) + x * r_prod(params, t, params.horizon_T - 1))


def precommitted_strategy(params: MarketParams, mu: float, t: int, x: float) -> StrategySchedule:
    """Pre-committed optimum for the time-t objective, as an affine rule in wealth.

    pi0(s, X) = [sigma sigma']^{-1} gamma' r(s) / (1 + beta(s)) * (lam / prod_{h=s}^{T-1} r - X)
    with lam = prod(beta + 1) / (2 mu) + x prod r. This is the rule whose
    terminal moments trace the frontier Var = (E - x prod r)^2 / (prod(beta+1) - 1).
    """
    _check_mu(mu)
    lam = precommitted_lambda(params, mu, t, x)
    beta = beta_schedule(params)[t:]
    disc = discount_to_end(params, t)
    slope = risky_direction(params)[t:] * (params.r[t:] / (1.0 + beta))[:, None]
    intercept = slope * (lam / disc[:-1])[:, None]
    slope.setflags(write=False)
    intercept.setflags(write=False)
    return StrategySchedule(
        PRECOMMITTED, params.n_assets, start=t, intercept=intercept, slope=slope, mu=mu, lam=lam
    )


def equal_weight_rule(n: int) -> StrategySchedule:
    if n < 1:
        raise ModelError("need at least one risky asset")
    return StrategySchedule(EQUAL_WEIGHT, n)

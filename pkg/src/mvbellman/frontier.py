"""Mean/variance of optimally controlled wealth and the efficient frontiers."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .market import (
    AssumptionViolation,
    InfeasibleTarget,
    MarketParams,
    ModelError,
    beta_schedule,
    discount_to_end,
    r_prod,
)
from .strategy import _check_mu, precommitted_lambda

CONSISTENCY_TOL = 1e-8


class ConsistencyError(RuntimeError):
    """Iterated moments and closed forms disagree; signals a numerical or coding fault."""


@dataclass(frozen=True)
class FrontierCurve:
    s: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    params: MarketParams
    mu: float
    x: float
    t: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "mean", "variance"])
        for s, m, v in zip(self.s, self.mean, self.variance):
            w.writerow([int(s), repr(float(m)), repr(float(v))])
        return buf.getvalue()


def closed_form_moments(params: MarketParams, mu: float, t: int, x: float):
    """Mean and variance at s = t..T from the explicit product/sum formulas."""
    T = params.horizon_T
    beta = beta_schedule(params)[t:]
    growth = np.concatenate([[1.0], np.cumprod(params.r[t:T])])  # prod_{h=t}^{s-1} r
    disc = discount_to_end(params, t)  # prod_{h=s}^{T-1} r
    beta_sum = np.concatenate([[0.0], np.cumsum(beta)])
    mean = x * growth + beta_sum / (2.0 * mu * disc)
    var = beta_sum / (4.0 * mu**2 * disc**2)
    return mean, var


def frontier_recursion(params: MarketParams, mu: float, t: int, x: float) -> FrontierCurve:
    """Iterate the one-step mean and variance recursions under the Bellman strategy.

    The closed forms are evaluated alongside; a disagreement above
    CONSISTENCY_TOL (relative to magnitude) raises ConsistencyError.
    """
    _check_mu(mu)
    T = params.horizon_T
    if not 0 <= t < T:
        raise ModelError(f"start period {t} outside 0..{T - 1}")
    beta = beta_schedule(params)
    disc = discount_to_end(params, t)
    n = T - t
    mean = np.empty(n + 1)
    var = np.empty(n + 1)
    mean[0], var[0] = x, 0.0
    for k in range(1, n + 1):
        s_prev = t + k - 1
        scale = 1.0 / disc[k]  # (prod_{h=s}^{T-1} r)^{-1}
        mean[k] = params.r[s_prev] * mean[k - 1] + beta[s_prev] / (2.0 * mu) * scale
        var[k] = params.r[s_prev] ** 2 * var[k - 1] + beta[s_prev] / (4.0 * mu**2) * scale**2
    cf_mean, cf_var = closed_form_moments(params, mu, t, x)
    for name, a, b in (("mean", mean, cf_mean), ("variance", var, cf_var)):
        err = np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))
        if err > CONSISTENCY_TOL:
            raise ConsistencyError(f"{name} recursion deviates from closed form by {err:.3g}")
    return FrontierCurve(np.arange(t, T + 1), mean, var, params, mu, x, t)


def efficient_frontier_variance(
    params: MarketParams, t: int, s: int, x: float, target_mean: float
) -> float:
    """Minimal variance at date s for mean target_mean, starting from wealth x at t."""
    if s <= t:
        raise ModelError(f"need s > t, got s={s}, t={t}")
    beta_sum = beta_schedule(params)[t:s].sum()
    if not beta_sum > 0:
        raise AssumptionViolation(f"sum of beta over [{t}, {s - 1}] is zero")
    return float((target_mean - x * r_prod(params, t, s - 1)) ** 2 / beta_sum)


def precommitted_frontier(params: MarketParams, t: int, x: float, target_mean: float):
    """Terminal variance of the pre-committed optimum at the given mean, and its lambda.

    Returns (variance, lam) where lam is the embedding constant of the
    pre-committed rule that reaches target_mean.
    """
    beta = beta_schedule(params)[t:]
    denom = np.prod(beta + 1.0) - 1.0
    if not denom > 0:
        raise AssumptionViolation("prod(beta + 1) - 1 is zero; no risky premium")
    A = r_prod(params, t, params.horizon_T - 1)
    excess = target_mean - x * A
    variance = excess**2 / denom
    # E[X0(T)] - xA = (P - 1) / (2 mu), lam = P / (2 mu) + xA
    lam = x * A + excess * (denom + 1.0) / denom
    return float(variance), float(lam)


def precommitted_terminal_moments(params: MarketParams, mu: float, t: int, x: float):
    _check_mu(mu)
    P = float(np.prod(beta_schedule(params)[t:] + 1.0))
    A = r_prod(params, t, params.horizon_T - 1)
    return x * A + (P - 1.0) / (2.0 * mu), (P - 1.0) / (4.0 * mu**2)


def precommitted_mean_path(params: MarketParams, mu: float, t: int, x: float) -> np.ndarray:
    """E[X0(s)] for s = t..T under the pre-committed rule."""
    beta = beta_schedule(params)[t:]
    lam = precommitted_lambda(params, mu, t, x)
    ratio = np.concatenate([[1.0], np.cumprod(params.r[t:] / (beta + 1.0))])
    bprod = np.concatenate([[1.0], np.cumprod(beta + 1.0)])
    disc = discount_to_end(params, t)
    return x * ratio + lam / disc * (1.0 - 1.0 / bprod)


@dataclass(frozen=True)
class ComparisonReport:
    mode: str
    mean_bellman: float
    var_bellman: float
    mean_pre: float
    var_pre: float
    mu_bellman: float
    mu_pre: float

    @property
    def var_gap(self) -> float:
        """Var_bellman - Var_pre (positive for fixed target, negative for fixed mu)."""
        return self.var_bellman - self.var_pre

    @property
    def mean_gap(self) -> float:
        return self.mean_bellman - self.mean_pre

    @property
    def directions_hold(self) -> bool:
        if self.mode == "fixed_target":
            return self.var_gap > 0
        return self.var_gap < 0 and self.mean_gap < 0


def compare_strategies(
    params: MarketParams, t: int, x: float, *, target: float | None = None, mu: float | None = None
) -> ComparisonReport:
    """Terminal moments of the Bellman and pre-committed optima at a common target or mu."""
    if (target is None) == (mu is None):
        raise ModelError("give exactly one of target= or mu=")
    beta = beta_schedule(params)[t:]
    beta_sum = beta.sum()
    P = np.prod(beta + 1.0)
    A = r_prod(params, t, params.horizon_T - 1)
    if target is not None:
        excess = target - x * A
        if not excess > 0:
            raise InfeasibleTarget(f"target {target} must exceed x*prod r = {x * A}")
        return ComparisonReport(
            "fixed_target",
            mean_bellman=target,
            var_bellman=float(excess**2 / beta_sum),
            mean_pre=target,
            var_pre=float(excess**2 / (P - 1.0)),
            mu_bellman=float(beta_sum / (2 * excess)),
            mu_pre=float((P - 1.0) / (2 * excess)),
        )
    _check_mu(mu)
    mean_pre, var_pre = precommitted_terminal_moments(params, mu, t, x)
    return ComparisonReport(
        "fixed_mu",
        mean_bellman=float(x * A + beta_sum / (2 * mu)),
        var_bellman=float(beta_sum / (4 * mu**2)),
        mean_pre=float(mean_pre),
        var_pre=float(var_pre),
        mu_bellman=float(mu),
        mu_pre=float(mu),
    )

"""Discrete-time multi-period mean-variance portfolios with Bellman-type strategies."""
from .market import (
    AssumptionViolation,
    InfeasibleTarget,
    MarketParams,
    ModelError,
    benchmark_market,
    beta_schedule,
    r_prod,
    validate,
)
from .strategy import (
    StrategySchedule,
    bellman_strategy,
    equal_weight_rule,
    mu_from_target,
    precommitted_strategy,
    value_function,
)
from .frontier import (
    ComparisonReport,
    FrontierCurve,
    compare_strategies,
    efficient_frontier_variance,
    frontier_recursion,
    precommitted_frontier,
)
from .horizon import HorizonSpec, horizon_objective, optimal_tau, strategy_I, strategy_II, target_mean
from .simulate import SimConfig, SimResult, simulate_table, simulate_wealth

__version__ = "0.1.0"

"""Seeded Monte Carlo of the wealth recursion under a strategy schedule.

Noise for path m is drawn from ``SeedSequence(seed, spawn_key=(m,))`` one
period at a time, so every increment is a pure function of
(seed, path, period) and results do not depend on M or evaluation order.

Sample variance uses divisor M (not M - 1).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .market import MarketParams, ModelError
from .strategy import StrategySchedule


@dataclass(frozen=True)
class SimConfig:
    params: MarketParams
    strategy: StrategySchedule
    x: float
    horizon: int
    n_paths: int
    seed: int
    label: str = ""
    antithetic: bool = False  # negate every increment (twin run)

    def check(self):
        if self.n_paths < 1:
            raise ModelError("need at least one path")
        if self.horizon < 1:
            raise ModelError("horizon must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")
        length = self.strategy.horizon
        if length is not None and self.horizon > length:
            raise ModelError(f"horizon {self.horizon} exceeds strategy length {length}")
        if self.strategy.start + self.horizon > self.params.horizon_T:
            raise ModelError("market schedule shorter than the simulated horizon")
        if self.strategy.n_assets != self.params.n_assets:
            raise ModelError("strategy and market disagree on the number of assets")


@dataclass(frozen=True)
class SimResult:
    label: str
    horizon: int
    mean: float
    variance: float
    stderr: float
    variance_stderr: float
    n_paths: int
    seed: int
    terminal: np.ndarray = field(repr=False, compare=False)

    @property
    def degenerate(self) -> bool:
        return self.n_paths < 2


def path_noise(seed: int, path: int, horizon: int, d: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path,)))
    return rng.standard_normal((horizon, d))


def simulate_paths(config: SimConfig) -> np.ndarray:
    """Terminal wealth on each of the M paths."""
    config.check()
    p, strat = config.params, config.strategy
    M, H, d = config.n_paths, config.horizon, p.d_noise
    noise = np.stack([path_noise(config.seed, m, H, d) for m in range(M)])  # (M, H, d)
    if config.antithetic:
        noise = -noise
    gamma = p.gamma
    X = np.full(M, float(config.x))
    for k in range(H):
        s = strat.start + k
        pi = strat.allocate(k, X)
        shock = np.einsum("mi,ij,mj->m", pi, p.sigma[s], noise[:, k, :])
        X = p.r[s] * X + pi @ gamma[s] + shock
    return X


def summarize(terminal: np.ndarray, label: str, horizon: int, seed: int) -> SimResult:
    M = terminal.size
    # centre on the first path so identical paths give exactly zero variance
    shifted = terminal - terminal[0]
    offset = shifted.mean()
    R = float(terminal[0] + offset)
    dev = shifted - offset
    V = float(np.mean(dev**2))
    if M > 1:
        se = float(np.sqrt(V / (M - 1)))
        var_se = float(np.sqrt(max(np.mean(dev**4) - V**2, 0.0) / M))
    else:
        se = var_se = float("nan")
    return SimResult(label, horizon, R, V, se, var_se, M, seed, terminal)


def simulate_wealth(config: SimConfig) -> SimResult:
    terminal = simulate_paths(config)
    return summarize(terminal, config.label or config.strategy.kind, config.horizon, config.seed)


@dataclass(frozen=True)
class TableRow:
    config: SimConfig
    result: SimResult | None
    error: str | None = None


def simulate_table(configs) -> list[TableRow]:
    """Run each config in order; a failing row records its error instead of aborting."""
    rows = []
    for cfg in configs:
        try:
            rows.append(TableRow(cfg, simulate_wealth(cfg)))
        except (ModelError, ValueError) as exc:
            rows.append(TableRow(cfg, None, f"{type(exc).__name__}: {exc}"))
    return rows


SIM_COLUMNS = ["strategy", "horizon", "R", "V", "stderr", "M", "seed"]


def table_to_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SIM_COLUMNS)
    for row in rows:
        res = row.result
        if res is None:
            continue
        w.writerow([res.label, res.horizon, repr(res.mean), repr(res.variance), repr(res.stderr), res.n_paths, res.seed])
    return buf.getvalue()

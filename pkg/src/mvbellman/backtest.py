"""Rolling-window backtest of strategies I/II/III on daily close prices.

Row t is the last day of the estimation window; the window covers rows
t-w+1..t with w = m0*L + 1, and a repetition then holds for tau periods
of L days each, reading prices at rows t, t+L, ..., t+tau*L.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

import numpy as np

from .market import ModelError


class DataError(ValueError):
    """Malformed, inconsistent or insufficient price data."""


@dataclass(frozen=True)
class PriceSeries:
    label: str
    dates: np.ndarray  # datetime64[D], strictly increasing
    close: np.ndarray

    def __len__(self):
        return self.close.size


def load_prices(path, label: str | None = None) -> PriceSeries:
    """Read a ``date,close`` CSV with ISO dates in ascending order."""
    path = Path(path)
    dates, closes = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "close"]:
            raise DataError(f"{path}:1: expected header 'date,close', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
                p = float(row[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not (p > 0 and math.isfinite(p)):
                raise DataError(f"{path}:{lineno}: price must be positive, got {row[1].strip()}")
            if dates and d <= dates[-1]:
                raise DataError(f"{path}:{lineno}: date {d} not after {dates[-1]}")
            dates.append(d)
            closes.append(p)
    return PriceSeries(label or path.stem, np.array(dates, dtype="datetime64[D]"), np.array(closes))


def write_prices(path, series: PriceSeries):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for d, p in zip(series.dates, series.close):
            w.writerow([str(d), repr(float(p))])


def align(*series: PriceSeries) -> np.ndarray:
    """Price matrix (days, assets) on the dates common to every series."""
    common = series[0].dates
    for s in series[1:]:
        common = np.intersect1d(common, s.dates)
    if common.size == 0:
        raise DataError("price series share no dates")
    cols = [s.close[np.searchsorted(s.dates, common)] for s in series]
    return np.column_stack(cols)


def synthetic_prices(b, sigma, n_days: int, seed: int, p0: float = 1.0) -> np.ndarray:
    """Daily prices from P(s) = P(s-1) [b + sigma dW], shape (n_days, n)."""
    b = np.asarray(b, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 1:
        sigma = np.diag(sigma)
    rng = np.random.default_rng(seed)
    dW = rng.standard_normal((n_days - 1, sigma.shape[1]))
    gross = b + dW @ sigma.T
    if np.any(gross <= 0):
        raise ModelError("simulated gross return is non-positive; reduce sigma")
    prices = np.vstack([np.full(b.size, p0), p0 * np.cumprod(gross, axis=0)])
    return prices


@dataclass(frozen=True)
class BacktestConfig:
    L: int = 30
    m0: int = 20
    tau: int = 9
    K: int = 1000
    r: float = 1.0002
    theta: float = 1.008
    alpha: float = 0.5
    x: float = 1.0
    strategy: str = "I"
    fee: float = 0.0
    loan: float | None = None  # daily gross loan rate; None means same as r
    costs: bool = False
    rf_excess: float = 0.0002  # daily rate in the Sharpe numerator
    beta_floor: float = 1e-12

    def __post_init__(self):
        if self.L < 1 or self.tau < 1 or self.K < 1:
            raise ModelError("L, tau and K must be >= 1")
        if self.m0 < 2:
            raise ModelError("m0 must be >= 2 for a sample variance")
        if self.strategy not in ("I", "II", "III"):
            raise ModelError(f"strategy must be I, II or III, got {self.strategy!r}")
        if self.fee < 0:
            raise ModelError("fee rate must be non-negative")
        if self.loan is not None and self.loan < self.r:
            raise ModelError("loan rate must be at least the risk-free rate")
        if not self.alpha > 0 or not self.theta > 1:
            raise ModelError("need alpha > 0 and theta > 1")

    @property
    def w(self) -> int:
        return self.m0 * self.L + 1

    @property
    def r_L(self) -> float:
        return 1.0 + (self.r - 1.0) * self.L

    @property
    def loan_L(self) -> float:
        loan = self.r if self.loan is None else self.loan
        return 1.0 + (loan - 1.0) * self.L

    @property
    def theta_L(self) -> float:
        return 1.0 + (self.theta - 1.0) * self.L

    @property
    def tau_star(self) -> int:
        return max(1, math.ceil(1.0 / (self.theta_L**2 - 1.0)))

    @property
    def horizon(self) -> int:
        return self.tau_star if self.strategy == "II" else self.tau

    def g(self, tau: int) -> float:
        """Mean target at L-day period length."""
        return self.x * self.r_L**tau + self.alpha * self.x * self.theta_L**tau

    def first_start(self) -> int:
        return self.w - 1

    def rows_needed(self) -> int:
        return self.w + self.K - 1 + self.horizon * self.L

    def echo(self) -> dict:
        return {
            "strategy": self.strategy,
            "L": self.L,
            "tau": self.tau,
            "tau_star": self.tau_star,
            "horizon": self.horizon,
            "m0": self.m0,
            "w": self.w,
            "K": self.K,
            "r": self.r,
            "theta": self.theta,
            "alpha": self.alpha,
            "x": self.x,
            "costs": self.costs,
            "fee": self.fee,
            "loan": self.r if self.loan is None else self.loan,
            "rf_excess": self.rf_excess,
        }


@dataclass(frozen=True)
class EstimatedParams:
    b_hat: np.ndarray
    var_hat: np.ndarray
    beta_hat: float
    r_L: float

    @property
    def degenerate(self) -> bool:
        return not np.all(self.var_hat > 0)


def period_sums(prices: np.ndarray, t: int, L: int, m0: int) -> np.ndarray:
    """I(t, s): simple daily returns summed over m0 consecutive L-day blocks ending at row t."""
    w = m0 * L + 1
    if t < w - 1:
        raise ModelError(f"row {t} has only {t + 1} rows of history, window needs {w}")
    window = prices[t - w + 1 : t + 1]
    daily = window[1:] / window[:-1] - 1.0
    return daily.reshape(m0, L, -1).sum(axis=1)


def estimate_params(prices: np.ndarray, t: int, L: int, m0: int, r: float) -> EstimatedParams:
    """Window estimates of L-day gross returns, variances and beta at row t."""
    if m0 < 2:
        raise ModelError("m0 must be >= 2")
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    I = period_sums(prices, t, L, m0)
    mean = I.mean(axis=0)
    var = ((I - mean) ** 2).sum(axis=0) / (m0 - 1)
    r_L = 1.0 + (r - 1.0) * L
    b_hat = 1.0 + mean
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = float(np.sum((b_hat - r_L) ** 2 / var)) if np.all(var > 0) else 0.0
    return EstimatedParams(b_hat, var, beta, r_L)


@dataclass(frozen=True)
class WealthPath:
    wealth: np.ndarray  # X(t, 0..horizon)
    fallback: bool = False
    estimate: EstimatedParams | None = None

    @property
    def terminal(self) -> float:
        return float(self.wealth[-1])


def _check_bounds(prices, t, horizon, L):
    last = t + horizon * L
    if last >= prices.shape[0]:
        raise DataError(f"repetition at row {t} needs row {last}, data has {prices.shape[0]} rows")


def bellman_capital(est: EstimatedParams, config: BacktestConfig, horizon: int) -> np.ndarray:
    """Capital per asset at steps s = 1..horizon, shape (horizon, n)."""
    r_L = est.r_L
    excess_target = config.g(horizon) - config.x * r_L**horizon
    mu_hat = horizon * est.beta_hat / (2.0 * excess_target)
    s = np.arange(1, horizon + 1)
    unit = (est.b_hat - r_L) / (2.0 * mu_hat * est.var_hat)
    return r_L ** (s - horizon)[:, None] * unit


def _run_bellman(prices, config: BacktestConfig, t: int, horizon: int, costs: bool) -> WealthPath:
    prices = np.asarray(prices, dtype=float)
    _check_bounds(prices, t, horizon, config.L)
    est = estimate_params(prices, t, config.L, config.m0, config.r)
    r_L = config.r_L
    X = np.empty(horizon + 1)
    X[0] = config.x
    if est.degenerate or est.beta_hat < config.beta_floor:
        X[1:] = config.x * r_L ** np.arange(1, horizon + 1)
        return WealthPath(X, fallback=True, estimate=est)
    omega = bellman_capital(est, config, horizon)
    rows = t + config.L * np.arange(horizon + 1)
    gross = prices[rows[1:]] / prices[rows[:-1]]
    loan_L = config.loan_L
    for k in range(horizon):
        w_risky = omega[k]
        resid = X[k] - w_risky.sum()
        if costs:
            cash = max(resid, 0.0) * r_L + min(resid, 0.0) * loan_L
            X[k + 1] = w_risky @ gross[k] + cash - np.abs(w_risky).sum() * config.fee
        else:
            X[k + 1] = w_risky @ gross[k] + resid * r_L
    return WealthPath(X, estimate=est)


def run_strategy_I(prices, config: BacktestConfig, t: int) -> WealthPath:
    return _run_bellman(prices, config, t, config.tau, costs=False)


def run_strategy_II(prices, config: BacktestConfig, t: int) -> WealthPath:
    return _run_bellman(prices, config, t, config.tau_star, costs=False)


def run_strategy_I_with_costs(prices, config: BacktestConfig, t: int) -> WealthPath:
    """Strategy I with fee on risky notional, cash earning r_L and borrowing paying the loan rate."""
    return _run_bellman(prices, config, t, config.tau, costs=True)


def run_strategy_III(prices, config: BacktestConfig, t: int) -> WealthPath:
    """Equal split of current wealth across the risky assets each period."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    _check_bounds(prices, t, config.tau, config.L)
    rows = t + config.L * np.arange(config.tau + 1)
    gross = prices[rows[1:]] / prices[rows[:-1]]
    X = config.x * np.concatenate([[1.0], np.cumprod(gross.mean(axis=1))])
    return WealthPath(X)


def aggregate_metrics(terminal, horizon: int, L: int, x: float = 1.0, rf_excess: float = 0.0002):
    """Yearly return and Sharpe ratio over K repetitions (250 trading days a year).

    Return = 250/(tau L K) sum(X_i - 1);
    Sharpe = sqrt(250/(tau L K)) (sum X_i - K - rf tau L K) / sqrt(sum (X_i - mean)^2).
    Wealth is measured per unit of initial capital. Sharpe is None when all X_i coincide.
    """
    X = np.asarray(terminal, dtype=float) / x
    K = X.size
    if K < 1:
        raise ModelError("no repetitions")
    scale = 250.0 / (horizon * L * K)
    ret = scale * float(np.sum(X - 1.0))
    disp = float(np.sqrt(np.sum((X - X.mean()) ** 2)))
    if disp == 0.0:
        return ret, None
    sharpe = math.sqrt(scale) * (float(X.sum()) - K - rf_excess * horizon * L * K) / disp
    return ret, sharpe


def theory_metrics(config: BacktestConfig, beta_hats, horizon: int | None = None):
    """Model-implied yearly return and Sharpe ratio given the estimated beta sequence."""
    horizon = config.horizon if horizon is None else horizon
    beta_hats = np.asarray(beta_hats, dtype=float)
    if beta_hats.size == 0 or np.any(beta_hats <= 0):
        raise ModelError("theory metrics need positive beta estimates")
    K = beta_hats.size
    L, x = config.L, config.x
    g = config.g(horizon)
    ret = 250.0 / (L * horizon) * (g - x)
    sd = config.alpha * x * config.theta_L**horizon / np.sqrt(horizon * beta_hats)
    sharpe = math.sqrt(250.0 / (L * horizon)) * K * (g - x - config.rf_excess * horizon * L) / sd.sum()
    return ret, float(sharpe)


@dataclass
class BacktestReport:
    config: BacktestConfig
    starts: np.ndarray
    terminal: np.ndarray
    beta_hats: np.ndarray
    fallback: np.ndarray
    yearly_return: float
    sharpe: float | None
    flags: list[str] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.config.horizon

    def row(self) -> list:
        c = self.config
        sharpe = "nan" if self.sharpe is None else repr(self.sharpe)
        return [c.strategy, c.L, self.horizon, c.K, repr(self.yearly_return), sharpe, ";".join(self.flags)]


REPORT_COLUMNS = ["strategy", "L", "tau", "K", "yearly_return", "sharpe", "flags"]


def run_backtest(prices, config: BacktestConfig) -> BacktestReport:
    """Repeat estimation and execution for K consecutive start rows and aggregate."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    need = config.rows_needed()
    if prices.shape[0] < need:
        raise DataError(f"need {need} rows of prices, have {prices.shape[0]} (short by {need - prices.shape[0]})")
    if config.costs and config.strategy == "III":
        raise ModelError("transaction costs are defined for strategies I and II only")
    starts = config.first_start() + np.arange(config.K)
    if config.strategy == "III":
        runner = run_strategy_III
    else:
        h = config.horizon

        def runner(p, cfg, t):
            return _run_bellman(p, cfg, t, h, costs=cfg.costs)

    paths = [runner(prices, config, int(t)) for t in starts]
    terminal = np.array([p.terminal for p in paths])
    fallback = np.array([p.fallback for p in paths])
    betas = np.array([p.estimate.beta_hat if p.estimate is not None else np.nan for p in paths])
    ret, sharpe = aggregate_metrics(terminal, config.horizon, config.L, config.x, config.rf_excess)
    flags = []
    if fallback.any():
        flags.append(f"risk_free_fallback={int(fallback.sum())}")
    if sharpe is None:
        flags.append("sharpe_undefined")
    return BacktestReport(config, starts, terminal, betas, fallback, ret, sharpe, flags)


def report_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for rep in reports:
        w.writerow(rep.row())
    return buf.getvalue()


def wealth_csv(report: BacktestReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["repetition", "terminal_wealth"])
    for i, v in enumerate(report.terminal, start=1):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()


@dataclass(frozen=True)
class SweepRow:
    L: int
    strategy: str
    report: BacktestReport | None
    reason: str | None = None


def sweep_over_L(prices, base: BacktestConfig, L_values) -> list[SweepRow]:
    """Strategies I, II, III for each L with tau = ceil(250/L); failures kept with a reason."""
    rows = []
    for L in L_values:
        for strat in ("I", "II", "III"):
            try:
                cfg = replace(base, L=int(L), tau=math.ceil(250 / L), strategy=strat,
                              costs=base.costs and strat != "III")
                rows.append(SweepRow(int(L), strat, run_backtest(prices, cfg)))
            except (DataError, ModelError) as exc:
                rows.append(SweepRow(int(L), strat, None, str(exc)))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "strategy", "yearly_return", "sharpe"])
    for row in rows:
        if row.report is None:
            continue
        s = row.report.sharpe
        w.writerow([row.L, row.strategy, repr(row.report.yearly_return), "nan" if s is None else repr(s)])
    return buf.getvalue()

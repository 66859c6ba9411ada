"""Command-line entry point: frontier, simulate, tau, backtest, sweep.

Every option may also come from a YAML/JSON file given by --config, using
the option name with underscores (``prices_a``, ``tau_max``...); flags
given on the command line win. Output files start with ``# key=value``
lines echoing the effective configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import backtest as bt
from .frontier import frontier_recursion
from .horizon import HorizonSpec, optimal_tau, strategy_I, strategy_II, target_mean
from .market import (
    DEFAULT_DELTA,
    InfeasibleTarget,
    MarketParams,
    ModelError,
    benchmark_market,
    r_prod,
    validate,
)
from .simulate import SimConfig, simulate_table, table_to_csv
from .strategy import bellman_strategy, equal_weight_rule, mu_from_target

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4

DEFAULTS = {
    "x": 1.0,
    "t": 0,
    "r": 1.0002,
    "b": 1.005,
    "n_assets": 10,
    "alpha": 0.5,
    "theta": 1.008,
    "delta": DEFAULT_DELTA,
    "tau": 30,
    "tau_max": 10_000,
    "M": 5000,
    "seed": 20190802,
    "preset": "standard",
    "format": "csv",
    "L": 30,
    "m0": 20,
    "K": 1000,
    "strategy": "I",
    "fee": 0.0,
    "loan": None,
    "costs": False,
    "L_min": 1,
    "L_max": 60,
}


def fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _echo(cfg: dict, keys) -> str:
    lines = []
    for k in keys:
        v = cfg.get(k)
        if v is None:
            continue
        if isinstance(v, float):
            v = repr(v)
        elif isinstance(v, (list, tuple)):
            v = json.dumps(v)
        lines.append(f"# {k}={v}")
    return "".join(line + "\n" for line in lines)


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ModelError(f"config {path} must be a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def merged(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k not in ("config", "func")})
    return cfg


def build_market(cfg: dict, horizon_T: int, L: int = 1) -> MarketParams:
    """Market from config keys (b, sigma...) or the 10-asset benchmark, at L-day periods."""
    if "sigma" in cfg:
        params = MarketParams.from_config({**cfg, "horizon_T": cfg.get("horizon_T", horizon_T)})
        if params.horizon_T < horizon_T:
            raise ModelError(f"market has {params.horizon_T} periods, need {horizon_T}")
        params = params.truncate(horizon_T)
    else:
        n = int(cfg["n_assets"])
        r_L = 1 + (float(cfg["r"]) - 1) * L
        b_L = 1 + (float(cfg["b"]) - 1) * L
        sigma = np.diag(0.01 + 0.001 * np.arange(1, n + 1)) * math.sqrt(L)
        params = MarketParams.constant(horizon_T, r_L, np.full(n, b_L), sigma) if L != 1 else benchmark_market(
            horizon_T, n=n, r=float(cfg["r"]), b=float(cfg["b"])
        )
    validate(params, float(cfg["delta"])).raise_if_failed()
    return params


def _horizon_spec(cfg: dict, L: int = 1) -> HorizonSpec:
    theta = cfg["theta"]
    theta = np.asarray(theta, dtype=float) if isinstance(theta, (list, tuple)) else float(theta)
    theta = 1 + (theta - 1) * L
    return HorizonSpec(alpha=float(cfg["alpha"]), theta=theta, tau_max=int(cfg["tau_max"]), x=float(cfg["x"]))


def cmd_frontier(args) -> int:
    cfg = merged(args)
    tau = int(cfg["tau"])
    params = build_market(cfg, int(cfg.get("horizon_T", tau)) if "sigma" in cfg else tau)
    t, x = int(cfg["t"]), float(cfg["x"])
    if cfg.get("mu") is not None:
        mu = float(cfg["mu"])
        target = None
    else:
        if cfg.get("target") is not None:
            target = float(cfg["target"])
        else:
            target = target_mean(_horizon_spec(cfg), params, params.horizon_T)
        floor = x * r_prod(params, t, params.horizon_T - 1)
        if not target > floor:
            raise InfeasibleTarget(
                f"target {target!r} is not above risk-free growth x*prod r = {floor!r}; "
                "a mean target must exceed it for a positive risk aversion"
            )
        mu = mu_from_target(params, t, x, target)
    curve = frontier_recursion(params, mu, t, x)
    echo = {**{k: cfg.get(k) for k in ("x", "t", "r", "b", "alpha", "theta")},
            "horizon_T": params.horizon_T, "target": target, "mu": mu}
    _emit(_echo(echo, echo) + curve.to_csv(), cfg.get("out"))
    if cfg.get("out") not in (None, "-"):
        print(f"mu={fmt(mu)} terminal_mean={fmt(float(curve.mean[-1]))} terminal_variance={fmt(float(curve.variance[-1]))}")
    return EXIT_OK


def _sim_rows(cfg: dict):
    M, seed, x = int(cfg["M"]), int(cfg["seed"]), float(cfg["x"])
    spec = _horizon_spec(cfg)
    if cfg.get("strategy_sim") or cfg["preset"] == "single":
        layout = [(cfg.get("strategy_sim") or "I", int(cfg["tau"]))]
    else:
        layout = [("I", 30), ("I", 90), ("II", None), ("III", 30), ("III", 63), ("III", 90)]
    tau_star = None
    configs = []
    for i, (name, tau) in enumerate(layout):
        if name == "II":
            if tau_star is None:
                big = build_market(cfg, int(cfg["tau_max"]))
                tau_star = optimal_tau(spec, big).tau_star
            tau = tau_star
        params = build_market(cfg, tau)
        if name == "I":
            strat = strategy_I(spec, params, tau)
        elif name == "II":
            strat = strategy_I(spec, params, tau)
        else:
            strat = equal_weight_rule(params.n_assets)
        configs.append(SimConfig(params, strat, x, tau, M, seed + i, label=name))
    return configs


def cmd_simulate(args) -> int:
    cfg = merged(args)
    rows = simulate_table(_sim_rows(cfg))
    for row in rows:
        if row.error:
            print(f"warning: row {row.config.label} failed: {row.error}", file=sys.stderr)
        elif row.result.degenerate:
            print(f"warning: row {row.config.label}: M=1, variance is degenerate", file=sys.stderr)
    echo_keys = ("preset", "M", "seed", "x", "r", "b", "alpha", "theta")
    if cfg["format"] == "json":
        payload = {
            "config": {k: cfg.get(k) for k in echo_keys},
            "rows": [
                {"strategy": r.result.label, "horizon": r.result.horizon, "R": r.result.mean,
                 "V": r.result.variance, "stderr": r.result.stderr, "M": r.result.n_paths, "seed": r.result.seed}
                for r in rows if r.result is not None
            ],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = _echo(cfg, echo_keys) + table_to_csv(rows)
    _emit(text, cfg.get("out"))
    if cfg.get("out") not in (None, "-"):
        for r in rows:
            if r.result is not None:
                res = r.result
                print(f"{res.label:>4} horizon={res.horizon:<4} R={fmt(res.mean)} V={fmt(res.variance)}")
    return EXIT_OK if any(r.result is not None for r in rows) else EXIT_CONFIG


def cmd_tau(args) -> int:
    cfg = merged(args)
    L = int(cfg["L"]) if args.L is not None or "L" in _load_config(args.config) else 1
    spec = _horizon_spec(cfg, L)
    params = build_market(cfg, int(cfg["tau_max"]), L)
    res = optimal_tau(spec, params)
    if res.truncated:
        print(f"warning: objective still decreasing at the search cap {res.taus[-1]}; "
              "tau_star is the best value found", file=sys.stderr)
    echo = {"alpha": spec.alpha, "theta": cfg["theta"], "L": L, "x": spec.x, "tau_max": spec.tau_max,
            "tau_star": res.tau_star, "objective": res.objective, "truncated": res.truncated}
    lines = ["tau,J"] + [f"{int(t)},{float(j)!r}" for t, j in zip(res.taus, res.J)]
    _emit(_echo(echo, echo) + "\n".join(lines) + "\n", cfg.get("out"))
    print(f"tau_star={res.tau_star} objective={fmt(res.objective)}", file=sys.stdout if cfg.get("out") not in (None, "-") else sys.stderr)
    return EXIT_OK


def _bt_config(cfg: dict, strategy=None) -> bt.BacktestConfig:
    L = int(cfg["L"])
    tau = cfg.get("tau_bt")
    tau = int(tau) if tau is not None else math.ceil(250 / L)
    return bt.BacktestConfig(
        L=L, m0=int(cfg["m0"]), tau=tau, K=int(cfg["K"]), r=float(cfg["r"]), theta=float(cfg["theta"]),
        alpha=float(cfg["alpha"]), x=float(cfg["x"]), strategy=strategy or str(cfg["strategy"]),
        fee=float(cfg["fee"]), loan=None if cfg["loan"] is None else float(cfg["loan"]),
        costs=bool(cfg["costs"]),
    )


def _prices(cfg: dict) -> np.ndarray:
    paths = [cfg.get("prices_a"), cfg.get("prices_b")]
    if any(p is None for p in paths):
        raise ModelError("both --prices-a and --prices-b are required")
    for p in paths:
        if not Path(p).exists():
            raise bt.DataError(f"price file {p} does not exist")
    return bt.align(*(bt.load_prices(p) for p in paths))


def cmd_backtest(args) -> int:
    cfg = merged(args)
    prices = _prices(cfg)
    conf = _bt_config(cfg)
    report = bt.run_backtest(prices, conf)
    echo = {**conf.echo(), "prices_a": cfg["prices_a"], "prices_b": cfg["prices_b"], "rows": prices.shape[0]}
    head = _echo(echo, echo)
    out = cfg.get("out")
    _emit(head + bt.report_csv([report]), out)
    wealth_out = cfg.get("wealth_out") or (None if out in (None, "-") else str(Path(out).with_suffix(".wealth.csv")))
    if wealth_out:
        Path(wealth_out).write_text(head + bt.wealth_csv(report), encoding="utf-8")
    if out not in (None, "-"):
        sharpe = "undefined" if report.sharpe is None else fmt(report.sharpe)
        print(f"strategy={conf.strategy} L={conf.L} tau={conf.horizon} tau_star={conf.tau_star} "
              f"yearly_return={fmt(report.yearly_return)} sharpe={sharpe}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = merged(args)
    prices = _prices(cfg)
    base = _bt_config(cfg)
    L_values = cfg.get("L_values") or list(range(int(cfg["L_min"]), int(cfg["L_max"]) + 1))
    rows = bt.sweep_over_L(prices, base, L_values)
    for row in rows:
        if row.report is None:
            print(f"warning: L={row.L} strategy {row.strategy} skipped: {row.reason}", file=sys.stderr)
    echo = {**{k: v for k, v in base.echo().items() if k not in ("strategy", "L", "tau", "tau_star", "horizon", "w")},
            "L_values": [int(v) for v in L_values], "prices_a": cfg["prices_a"], "prices_b": cfg["prices_b"]}
    _emit(_echo(echo, echo) + bt.sweep_csv(rows), cfg.get("out"))
    return EXIT_OK if any(r.report is not None for r in rows) else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvbellman", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML/JSON file with option values")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--x", type=float, help="initial wealth")
        sp.add_argument("--r", type=float, help="daily gross risk-free return")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--theta", type=float, help="daily excess growth factor")
        return sp

    def market(sp):
        sp.add_argument("--b", type=float, help="gross expected return of each benchmark asset")
        sp.add_argument("--n-assets", dest="n_assets", type=int)
        sp.add_argument("--delta", type=float)

    sp = common(sub.add_parser("frontier", help="mean/variance of optimal wealth per period"))
    market(sp)
    sp.add_argument("--tau", type=int, help="investment horizon (periods)")
    sp.add_argument("--t", type=int)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--target", type=float, help="terminal mean target L")
    g.add_argument("--mu", type=float, help="risk aversion")
    sp.set_defaults(func=cmd_frontier)

    sp = common(sub.add_parser("simulate", help="Monte Carlo of strategies I/II/III"))
    market(sp)
    sp.add_argument("--preset", choices=["standard", "single"])
    sp.add_argument("--strategy", dest="strategy_sim", choices=["I", "II", "III"])
    sp.add_argument("--tau", type=int)
    sp.add_argument("--tau-max", dest="tau_max", type=int)
    sp.add_argument("--M", type=int, help="number of paths")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--format", choices=["csv", "json"])
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("tau", help="optimal investment period and J(tau) curve"))
    market(sp)
    sp.add_argument("--L", type=int, help="single-period length in days (rescales theta, r, b)")
    sp.add_argument("--tau-max", dest="tau_max", type=int)
    sp.set_defaults(func=cmd_tau)

    for name, func, text in (("backtest", cmd_backtest, "rolling-window backtest"),
                             ("sweep", cmd_sweep, "backtest metrics across single-period lengths")):
        sp = common(sub.add_parser(name, help=text))
        sp.add_argument("--prices-a", dest="prices_a")
        sp.add_argument("--prices-b", dest="prices_b")
        sp.add_argument("--L", type=int)
        sp.add_argument("--tau", dest="tau_bt", type=int, help="investment period (default ceil(250/L))")
        sp.add_argument("--m0", type=int)
        sp.add_argument("--K", type=int)
        sp.add_argument("--fee", type=float, help="transaction fee rate r0")
        sp.add_argument("--loan", type=float, help="daily gross loan rate")
        sp.add_argument("--costs", action="store_const", const=True, help="apply fee/loan execution")
        sp.add_argument("--seed", type=int, help="accepted for uniformity; the backtest is deterministic")
        if name == "backtest":
            sp.add_argument("--strategy", choices=["I", "II", "III"])
            sp.add_argument("--wealth-out", dest="wealth_out")
        else:
            sp.add_argument("--L-min", dest="L_min", type=int)
            sp.add_argument("--L-max", dest="L_max", type=int)
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleTarget as exc:
        print(f"error: infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except bt.DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ModelError, KeyError, TypeError, OSError, yaml.YAMLError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

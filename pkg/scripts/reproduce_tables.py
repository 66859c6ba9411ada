"""Theory and Monte Carlo tables for the 10-asset benchmark market.

Prints the optimal horizon, the exact terminal mean/variance of strategy I
at several horizons and of strategy II at tau*, then the Monte Carlo
estimates of strategies I, II and III.

    python3 scripts/reproduce_tables.py --M 5000 --seed 20190802
"""
from __future__ import annotations

import argparse

from mvbellman.frontier import frontier_recursion
from mvbellman.horizon import HorizonSpec, optimal_tau, strategy_I, target_mean
from mvbellman.market import benchmark_market
from mvbellman.simulate import SimConfig, simulate_table
from mvbellman.strategy import equal_weight_rule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=20190802)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--theta", type=float, default=1.008)
    args = ap.parse_args()

    spec = HorizonSpec(alpha=args.alpha, theta=args.theta)
    best = optimal_tau(spec, benchmark_market(spec.tau_max))
    tau_star = best.tau_star
    print(f"tau* = {tau_star}  J(tau*) = {best.objective:.6f}")

    print("\nexact moments under the Bellman strategy")
    print(f"{'tau':>5} {'g(tau)':>10} {'variance':>10}")
    for tau in sorted({30, tau_star, 90}):
        p = benchmark_market(tau)
        strat = strategy_I(spec, p, tau)
        curve = frontier_recursion(p, strat.mu, 0, spec.x)
        print(f"{tau:>5} {target_mean(spec, p, tau):>10.6f} {curve.variance[-1]:>10.6f}")

    layout = [("I", 30), ("I", 90), ("II", tau_star), ("III", 30), ("III", 63), ("III", 90)]
    configs = []
    for i, (name, tau) in enumerate(layout):
        p = benchmark_market(tau)
        strat = equal_weight_rule(p.n_assets) if name == "III" else strategy_I(spec, p, tau)
        configs.append(SimConfig(p, strat, spec.x, tau, args.M, args.seed + i, label=name))

    print(f"\nMonte Carlo, M = {args.M}")
    print(f"{'strategy':>8} {'tau':>5} {'R':>10} {'V':>10} {'stderr':>10}")
    for row in simulate_table(configs):
        res = row.result
        print(f"{res.label:>8} {res.horizon:>5} {res.mean:>10.6f} {res.variance:>10.6f} {res.stderr:>10.6f}")


if __name__ == "__main__":
    main()

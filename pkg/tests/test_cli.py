import json
import math

import numpy as np
import pytest

from mvbellman.backtest import PriceSeries, synthetic_prices, write_prices
from mvbellman.cli import EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE, EXIT_OK, main


def body(path):
    """Data rows of an output file with the echo header stripped."""
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def header(path):
    return dict(line[2:].split("=", 1) for line in path.read_text().splitlines() if line.startswith("# "))


def price_files(tmp_path, prices, names=("a", "b")):
    dates = np.datetime64("2010-01-01") + np.arange(prices.shape[0])
    files = []
    for j, name in enumerate(names):
        f = tmp_path / f"{name}.csv"
        write_prices(f, PriceSeries(name, dates, prices[:, j]))
        files.append(str(f))
    return files


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    d = tmp_path_factory.mktemp("prices")
    prices = synthetic_prices([1.0008, 1.0006], [0.012, 0.010], 1500, seed=9)
    return price_files(d, prices)


def test_frontier_target_example(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["frontier", "--tau", "30", "--target", "1.6410", "--out", str(out)]) == EXIT_OK
    rows = body(out)
    assert rows[0] == "s,mean,variance" and len(rows) == 32
    assert abs(float(rows[-1].split(",")[2]) - 0.0126) <= 5e-4
    assert header(out)["target"] == "1.641"


def test_frontier_default_target_is_g(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["frontier", "--tau", "63", "--out", str(out)]) == EXIT_OK
    _, mean, var = body(out)[-1].split(",")
    assert abs(float(mean) - 1.8387) <= 5e-4 and abs(float(var) - 0.0101) <= 5e-4


def test_frontier_infeasible_and_single_step(tmp_path, capsys):
    assert main(["frontier", "--tau", "5", "--target", repr(1.0002**5), "--out", str(tmp_path / "x")]) == EXIT_INFEASIBLE
    assert "risk-free growth" in capsys.readouterr().err
    out = tmp_path / "one.csv"
    assert main(["frontier", "--tau", "1", "--mu", "2.0", "--out", str(out)]) == EXIT_OK
    assert len(body(out)) == 3


def test_simulate_standard_layout_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--M", "200", "--seed", "5"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = body(a)
    assert rows[0] == "strategy,horizon,R,V,stderr,M,seed"
    assert [r.split(",")[:2] for r in rows[1:]] == [
        ["I", "30"], ["I", "90"], ["II", "63"], ["III", "30"], ["III", "63"], ["III", "90"]]
    assert [r.split(",")[6] for r in rows[1:]] == ["5", "6", "7", "8", "9", "10"]


def test_simulate_single_path_warns(tmp_path, capsys):
    out = tmp_path / "s.json"
    rc = main(["simulate", "--strategy", "I", "--tau", "5", "--M", "1", "--format", "json", "--out", str(out)])
    assert rc == EXIT_OK
    assert "degenerate" in capsys.readouterr().err
    data = json.loads(out.read_text())
    assert data["rows"][0]["V"] == 0.0 and data["rows"][0]["M"] == 1


def test_tau_examples(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["tau", "--out", str(out)]) == EXIT_OK
    assert header(out)["tau_star"] == "63"
    assert len(body(out)) == 10_001
    assert main(["tau", "--theta", repr(math.sqrt(2)), "--tau-max", "50", "--out", str(out)]) == EXIT_OK
    assert header(out)["tau_star"] == "1"
    assert main(["tau", "--L", "30", "--tau-max", "100", "--out", str(out)]) == EXIT_OK
    assert header(out)["tau_star"] == "2"


def test_tau_schedule_from_config(tmp_path):
    cycle = [1.02, 1.005, 1.01, 1.003, 1.015, 1.001, 1.007, 1.012, 1.002, 1.009]
    theta = cycle * 20
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"theta: {json.dumps(theta)}\ntau_max: 200\n")
    out = tmp_path / "t.csv"
    assert main(["tau", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = body(out)
    assert len(rows) == 201
    J = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert int(header(out)["tau_star"]) == int(np.argmin(J)) + 1


def test_tau_truncation_warning(tmp_path, capsys):
    assert main(["tau", "--tau-max", "20", "--out", str(tmp_path / "t.csv")]) == EXIT_OK
    assert "search cap" in capsys.readouterr().err


def test_backtest_outputs(tmp_path, synth):
    out = tmp_path / "bt.csv"
    args = ["backtest", "--prices-a", synth[0], "--prices-b", synth[1], "--L", "30", "--K", "50",
            "--strategy", "II", "--out", str(out)]
    assert main(args) == EXIT_OK
    h = header(out)
    assert h["tau_star"] == "2" and h["horizon"] == "2" and h["tau"] == "9"
    assert body(out)[0] == "strategy,L,tau,K,yearly_return,sharpe,flags"
    wealth = tmp_path / "bt.wealth.csv"
    assert len(body(wealth)) == 51
    first = out.read_bytes()
    assert main(args) == EXIT_OK
    assert out.read_bytes() == first


def test_backtest_flat_prices_strategy_III(tmp_path):
    files = price_files(tmp_path, np.ones((200, 2)))
    out = tmp_path / "bt.csv"
    rc = main(["backtest", "--prices-a", files[0], "--prices-b", files[1], "--L", "2", "--m0", "5",
               "--K", "20", "--tau", "3", "--strategy", "III", "--out", str(out)])
    assert rc == EXIT_OK
    assert float(body(out)[1].split(",")[4]) == 0.0


def test_backtest_errors(tmp_path, synth, capsys):
    assert main(["backtest", "--prices-a", synth[0], "--prices-b", synth[1], "--K", "5000",
                 "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert "short by" in capsys.readouterr().err
    assert main(["backtest", "--prices-a", synth[0], "--prices-b", str(tmp_path / "missing.csv")]) == EXIT_DATA
    assert main(["backtest", "--prices-a", synth[0]]) == EXIT_CONFIG
    assert main(["backtest", "--prices-a", synth[0], "--prices-b", synth[1], "--m0", "1"]) == EXIT_CONFIG
    bad = tmp_path / "bad.csv"
    bad.write_text("date,close\n2010-01-01,1\n2010-01-02,x\n")
    assert main(["backtest", "--prices-a", synth[0], "--prices-b", str(bad)]) == EXIT_DATA
    assert ":3:" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path, synth):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"prices_a: {synth[0]}\nprices_b: {synth[1]}\nL: 10\nK: 20\nstrategy: III\n")
    out = tmp_path / "bt.csv"
    assert main(["backtest", "--config", str(cfg), "--K", "30", "--out", str(out)]) == EXIT_OK
    h = header(out)
    assert (h["L"], h["K"], h["strategy"]) == ("10", "30", "III")
    broken = tmp_path / "broken.yaml"
    broken.write_text("- just\n- a list\n")
    assert main(["tau", "--config", str(broken)]) == EXIT_CONFIG


def test_sweep_single_L(tmp_path, synth):
    out = tmp_path / "sw.csv"
    rc = main(["sweep", "--prices-a", synth[0], "--prices-b", synth[1], "--L-min", "30", "--L-max", "30",
               "--K", "50", "--out", str(out)])
    assert rc == EXIT_OK
    rows = body(out)
    assert rows[0] == "L,strategy,yearly_return,sharpe"
    assert [r.split(",")[:2] for r in rows[1:]] == [["30", "I"], ["30", "II"], ["30", "III"]]


def test_sweep_all_failing(tmp_path, capsys):
    files = price_files(tmp_path, synthetic_prices([1.0, 1.0], [0.01, 0.01], 50, seed=1))
    rc = main(["sweep", "--prices-a", files[0], "--prices-b", files[1], "--L-min", "30", "--L-max", "31",
               "--out", str(tmp_path / "sw.csv")])
    assert rc == EXIT_DATA
    assert "skipped" in capsys.readouterr().err

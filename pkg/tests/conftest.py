import numpy as np
import pytest

from mvbellman.market import MarketParams


def random_market(rng, T, n=None, d=None, r_range=(0.97, 1.05)):
    """Validated market with time-varying coefficients; sigma has a dominant diagonal."""
    n = n or int(rng.integers(1, 5))
    d = d or n + int(rng.integers(0, 3))
    r = rng.uniform(*r_range, size=T)
    gamma = rng.uniform(0.01, 0.1, size=(T, n)) * rng.choice([-1, 1], size=(T, n))
    sigma = rng.normal(scale=0.03, size=(T, n, d))
    sigma[:, np.arange(n), np.arange(n)] += rng.uniform(0.1, 0.3, size=(T, n))
    return MarketParams(r=r, b=r[:, None] + gamma, sigma=sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_market():
    """r = 1, beta = 1 per period, one asset: gamma = 0.1, sigma = 0.1."""
    def make(T):
        return MarketParams.constant(T, 1.0, [1.1], [[0.1]])
    return make


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

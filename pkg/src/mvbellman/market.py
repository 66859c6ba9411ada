"""Market parameter schedules for the discrete-time model.

One risk-free bond with gross return r(s) and n risky assets with gross
expected returns b(s) and loadings sigma(s) (n x d) on a d-dimensional
noise increment, for periods s = 0, ..., T-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Base class for domain errors raised by the package."""


class AssumptionViolation(ModelError):
    """Market data violates the standing assumptions (r>0, gamma!=0, sigma sigma' > delta I)."""


class InfeasibleTarget(ModelError):
    """Requested mean target cannot be reached with a positive risk aversion."""


DEFAULT_DELTA = 1e-10


@dataclass(frozen=True)
class MarketParams:
    r: np.ndarray  # (T,)
    b: np.ndarray  # (T, n)
    sigma: np.ndarray  # (T, n, d)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        b = np.asarray(self.b, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if r.ndim != 1 or r.size < 1:
            raise ModelError("r must be a non-empty 1-d schedule")
        T = r.size
        if b.ndim != 2 or b.shape[0] != T:
            raise ModelError(f"b must have shape (T, n) with T={T}, got {b.shape}")
        if sigma.ndim != 3 or sigma.shape[:2] != b.shape:
            raise ModelError(f"sigma must have shape (T, n, d) matching b, got {sigma.shape}")
        for arr in (r, b, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def constant(cls, horizon_T, r, b, sigma) -> MarketParams:
        """Black-Scholes style market with time-independent coefficients."""
        b = np.atleast_1d(np.asarray(b, dtype=float))
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = sigma.reshape(1, 1)
        elif sigma.ndim == 1:
            sigma = np.diag(sigma)
        return cls(
            r=np.full(horizon_T, float(r)),
            b=np.broadcast_to(b, (horizon_T, b.size)).copy(),
            sigma=np.broadcast_to(sigma, (horizon_T,) + sigma.shape).copy(),
        )

    @classmethod
    def from_config(cls, cfg: dict) -> MarketParams:
        """Build from a mapping with keys horizon_T, n_assets, d_noise, r, b, sigma.

        Each of r, b, sigma may be given in constant form (scalar, n-vector,
        n x d matrix or a length-n diagonal) or per period (leading axis T).
        """
        T = int(cfg["horizon_T"])
        n = int(cfg.get("n_assets", np.size(cfg["b"]) if np.ndim(cfg["b"]) <= 1 else np.shape(cfg["b"])[1]))
        r = np.asarray(cfg["r"], dtype=float)
        r = np.full(T, float(r)) if r.ndim == 0 else r
        b = np.asarray(cfg["b"], dtype=float)
        if b.ndim == 0:
            b = np.full((T, n), float(b))
        elif b.ndim == 1:
            b = np.broadcast_to(b, (T, b.size)).copy()
        sigma = np.asarray(cfg["sigma"], dtype=float)
        d = int(cfg.get("d_noise", n))
        if sigma.ndim == 0:
            sigma = np.broadcast_to(float(sigma) * np.eye(n, d), (T, n, d)).copy()
        elif sigma.ndim == 1:
            sigma = np.broadcast_to(np.diag(sigma), (T, n, n)).copy()
        elif sigma.ndim == 2:
            sigma = np.broadcast_to(sigma, (T,) + sigma.shape).copy()
        params = cls(r=r, b=b, sigma=sigma)
        if params.horizon_T != T or params.n_assets != n or params.d_noise != d:
            raise ModelError(
                f"config dimensions (T={T}, n={n}, d={d}) disagree with schedules "
                f"(T={params.horizon_T}, n={params.n_assets}, d={params.d_noise})"
            )
        return params

    @property
    def horizon_T(self) -> int:
        return self.r.size

    @property
    def n_assets(self) -> int:
        return self.b.shape[1]

    @property
    def d_noise(self) -> int:
        return self.sigma.shape[2]

    @property
    def gamma(self) -> np.ndarray:
        """Excess-return schedule b(s) - r(s), shape (T, n)."""
        return self.b - self.r[:, None]

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma @ np.swapaxes(self.sigma, 1, 2)

    def truncate(self, horizon_T: int) -> MarketParams:
        if not 1 <= horizon_T <= self.horizon_T:
            raise ModelError(f"cannot truncate a {self.horizon_T}-period market to {horizon_T}")
        return MarketParams(self.r[:horizon_T], self.b[:horizon_T], self.sigma[:horizon_T])


def benchmark_market(horizon_T: int, n: int = 10, r: float = 1.0002, b: float = 1.005) -> MarketParams:
    """Daily market used in the simulation study: sigma = diag(0.01 + 0.001 i), i = 1..n."""
    sigma = np.diag(0.01 + 0.001 * np.arange(1, n + 1))
    return MarketParams.constant(horizon_T, r, np.full(n, b), sigma)


@dataclass
class ValidationReport:
    delta: float
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_if_failed(self):
        if self.failures:
            s, what = self.failures[0]
            raise AssumptionViolation(
                f"{len(self.failures)} assumption failure(s); first at period {s}: {what}"
            )


def _pd_mask(mats: np.ndarray) -> np.ndarray:
    ok = np.empty(mats.shape[0], dtype=bool)
    for i, m in enumerate(mats):
        try:
            np.linalg.cholesky(m)
            ok[i] = True
        except np.linalg.LinAlgError:
            ok[i] = False
    return ok


def validate(params: MarketParams, delta: float = DEFAULT_DELTA) -> ValidationReport:
    """Check r(s) > 0, gamma(s) != 0 and sigma(s) sigma(s)' - delta I positive definite."""
    if delta <= 0:
        raise ModelError("delta must be positive")
    report = ValidationReport(delta=delta)
    r_bad = ~(params.r > 0)
    g_bad = ~np.any(params.gamma != 0, axis=1)
    shifted = params.covariance - delta * np.eye(params.n_assets)
    pd_bad = ~_pd_mask(shifted)
    for s in range(params.horizon_T):
        if r_bad[s]:
            report.failures.append((s, "r(s) > 0"))
        if g_bad[s]:
            report.failures.append((s, "gamma(s) != 0"))
        if pd_bad[s]:
            report.failures.append((s, "sigma(s) sigma(s)' > delta I"))
    return report


def beta_schedule(params: MarketParams) -> np.ndarray:
    """beta(s) = gamma(s) [sigma(s) sigma(s)']^{-1} gamma(s)' for every period."""
    return _beta_and_direction(params)[0]


def risky_direction(params: MarketParams) -> np.ndarray:
    """[sigma(s) sigma(s)']^{-1} gamma(s)', shape (T, n)."""
    return _beta_and_direction(params)[1]


def _beta_and_direction(params: MarketParams):
    cov = params.covariance
    gamma = params.gamma
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise AssumptionViolation("sigma sigma' is singular or indefinite") from exc
    # two triangular solves: L z = gamma, L' u = z
    z = np.linalg.solve(chol, gamma[..., None])
    u = np.linalg.solve(np.swapaxes(chol, 1, 2), z)[..., 0]
    beta = np.einsum("ti,ti->t", z[..., 0], z[..., 0])
    return beta, u


def r_prod(params: MarketParams, a: int, b: int) -> float:
    """prod_{s=a}^{b} r(s); the empty product (b < a) is 1."""
    if b < a:
        return 1.0
    if a < 0 or b >= params.horizon_T:
        raise ModelError(f"range [{a}, {b}] outside periods 0..{params.horizon_T - 1}")
    return float(np.prod(params.r[a : b + 1]))


def discount_to_end(params: MarketParams, t: int, T: int | None = None) -> np.ndarray:
    """D[k] = prod_{h=t+k}^{T-1} r(h) for k = 0..T-t (last entry is 1)."""
    T = params.horizon_T if T is None else T
    tail = np.cumprod(params.r[t:T][::-1])[::-1]
    return np.append(tail, 1.0)

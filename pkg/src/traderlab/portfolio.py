"""Return/covariance estimation, long-only max-Sharpe weights, and the
lot-constrained conversion of weights into order volumes.

Annualization uses 252 trading days per year and a default risk-free rate
of zero throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .errors import NoExcessReturn, TooFewObservations

TRADING_DAYS_PER_YEAR = 252


def _returns(prices: np.ndarray) -> np.ndarray:
    return prices[1:] / prices[:-1] - 1.0


def mean_historical_return(prices: Mapping[str, np.ndarray],
                           periods_per_year: int = TRADING_DAYS_PER_YEAR) -> dict[str, float]:
    """Geometric annualization of simple per-bar returns:
    (prod(1+r_t))^(periods/T) - 1 over T observed returns."""
    out: dict[str, float] = {}
    for asset, p in prices.items():
        p = np.asarray(p, dtype=np.float64)
        if len(p) < 2:
            raise TooFewObservations(f"{asset}: need >= 2 prices, got {len(p)}")
        r = _returns(p)
        growth = float(np.prod(1.0 + r))
        out[asset] = growth ** (periods_per_year / len(r)) - 1.0
    return out


def sample_cov(prices: Mapping[str, np.ndarray],
               periods_per_year: int = TRADING_DAYS_PER_YEAR) -> np.ndarray:
    """Unbiased covariance of simple per-bar returns, annualized.

    Asset order is the mapping's iteration order.
    """
    arrays = [np.asarray(p, dtype=np.float64) for p in prices.values()]
    if not arrays:
        raise TooFewObservations("no price series")
    lengths = {len(p) for p in arrays}
    if len(lengths) != 1:
        raise ValueError("price series must be aligned to equal length")
    if lengths.pop() < 3:
        raise TooFewObservations("need >= 3 prices (>= 2 returns) for sample covariance")
    rets = np.column_stack([_returns(p) for p in arrays])
    cov = np.cov(rets, rowvar=False, ddof=1) * periods_per_year
    return np.atleast_2d(cov)


@dataclass(frozen=True)
class ReturnEstimates:
    """Expected annualized returns plus annualized return covariance."""

    assets: tuple[str, ...]
    mu: Mapping[str, float]
    cov: np.ndarray
    risk_free: float = 0.0

    def __post_init__(self) -> None:
        n = len(self.assets)
        if self.cov.shape != (n, n):
            raise ValueError(f"covariance shape {self.cov.shape} != ({n}, {n})")
        if not np.allclose(self.cov, self.cov.T, atol=1e-10, rtol=0.0):
            raise ValueError("covariance matrix is not symmetric")
        if n and float(np.linalg.eigvalsh(self.cov)[0]) < -1e-10:
            raise ValueError("covariance matrix is not PSD within tolerance")
        missing = [a for a in self.assets if a not in self.mu]
        if missing:
            raise ValueError(f"missing expected returns for {missing}")

    @classmethod
    def from_history(cls, prices: Mapping[str, np.ndarray],
                     risk_free: float = 0.0) -> "ReturnEstimates":
        return cls(tuple(prices), mean_historical_return(prices),
                   sample_cov(prices), risk_free)

    def with_mu(self, mu: Mapping[str, float]) -> "ReturnEstimates":
        return ReturnEstimates(self.assets, mu, self.cov, self.risk_free)

    def mu_vector(self) -> np.ndarray:
        return np.array([self.mu[a] for a in self.assets], dtype=np.float64)


def sharpe_ratio(weights: Mapping[str, float], est: ReturnEstimates) -> float:
    """Annualized Sharpe of a weight vector under the estimates."""
    w = np.array([weights.get(a, 0.0) for a in est.assets])
    excess = float(w @ est.mu_vector()) - est.risk_free
    var = float(w @ est.cov @ w)
    if var <= 0.0:
        return math.inf if excess > 0 else -math.inf
    return excess / math.sqrt(var)


def _ridge_if_needed(cov: np.ndarray) -> np.ndarray:
    n = cov.shape[0]
    tr = float(np.trace(cov))
    eigmin = float(np.linalg.eigvalsh(cov)[0])
    if eigmin < 1e-10 * max(tr / n, 0.0):
        return cov + np.eye(n) * (1e-8 * tr / n)
    return cov


def _active_set_polish(cov: np.ndarray, a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact KKT solve on the support found by the gradient solver."""
    scale = float(y.max(initial=0.0))
    if scale <= 0.0:
        return y
    support = y > 1e-9 * scale
    sub = cov[np.ix_(support, support)]
    try:
        u = np.linalg.solve(sub, a[support])
    except np.linalg.LinAlgError:
        return y
    denom = float(a[support] @ u)
    if denom <= 0.0:
        return y
    ys = u / denom
    if np.any(ys < 0.0):
        return y
    y2 = np.zeros_like(y)
    y2[support] = ys
    lam = 2.0 * float(y2 @ cov @ y2)
    slack = 2.0 * (cov @ y2) - lam * a
    if np.any(slack < -1e-9 * max(1.0, abs(lam))):
        return y
    if float(y2 @ cov @ y2) <= float(y @ cov @ y) + 1e-15:
        return y2
    return y


def max_sharpe(est: ReturnEstimates, max_iter: int = 10_000,
               tol: float = 1e-10) -> dict[str, float]:
    """Long-only weights (sum 1) maximizing (w.mu - rf) / sqrt(w'Sw).

    Solved through the convex reformulation min y'Sy on {a.y = 1, y >= 0}
    with a = mu - rf, using accelerated projected gradient plus an
    active-set polish; near-singular covariances get a small diagonal
    ridge (1e-8 * trace/n).
    """
    assets = est.assets
    mu = est.mu_vector()
    a = mu - est.risk_free
    if len(assets) == 0 or float(np.max(a)) <= 0.0:
        raise NoExcessReturn("no asset with expected return above the risk-free rate")
    if len(assets) == 1:
        return {assets[0]: 1.0}
    cov = _ridge_if_needed(np.asarray(est.cov, dtype=np.float64))

    y = kernels.max_sharpe_qp(cov, a, max_iter, tol)
    y = _active_set_polish(cov, a, y)
    w = y / y.sum()
    best = {asset: float(w[i]) for i, asset in enumerate(assets)}
    best_sharpe = sharpe_ratio(best, est)
    # safety net: never fall below the best single eligible asset
    for i, asset in enumerate(assets):
        if a[i] <= 0.0:
            continue
        single = {asset: 1.0}
        s = sharpe_ratio(single, est)
        if s > best_sharpe:
            best, best_sharpe = single, s
    return {asset: best.get(asset, 0.0) for asset in assets}


def clean_weights(weights: Mapping[str, float], cutoff: float = 1e-4,
                  digits: int = 5) -> dict[str, float]:
    """Zero out weights below cutoff and round the rest; not renormalized."""
    return {a: 0.0 if abs(w) < cutoff else round(w, digits)
            for a, w in weights.items()}


def get_affor_shares(money: float, price: float, step: int = 1) -> int:
    """Largest affordable volume that is a multiple of the lot step."""
    if price <= 0:
        raise ValueError("price must be positive")
    if step < 1:
        raise ValueError("step must be >= 1")
    if money <= 0:
        return 0
    return int(money // (price * step)) * step


def volumes_from_weights(assets: list[str], weights: Mapping[str, float],
                         last_prices: Mapping[str, float], capital: float,
                         lots: Mapping[str, int] | None = None) -> dict[str, int]:
    """Convert target weights into lot-constrained buy volumes.

    Round 1 buys the affordable shares inside each asset's weight budget.
    Round 2 walks assets by descending weight (ties keep input order) and
    adds whole lots while a lot still fits both the remaining capital and
    the asset's missing allocation.  Total cost never exceeds ``capital``
    when the weights sum to at most 1.

    Round 2 can overshoot an individual target weight: an asset whose
    missing allocation is already non-positive still receives one lot when
    that lot fits the remaining capital.  This is a known property of the
    procedure, kept as-is.
    """
    lots = lots or {}
    ordered = dict(sorted(weights.items(), key=lambda kv: kv[1], reverse=True))
    curr: dict[str, float] = {}
    volumes: dict[str, int] = {}
    total_weight = 0.0
    for asset in assets:
        step = int(lots.get(asset, 1))
        price = last_prices[asset]
        shares = get_affor_shares(ordered.get(asset, 0.0) * capital, price, step)
        if shares <= 0:
            curr[asset] = 0.0
            volumes[asset] = 0
        else:
            curr[asset] = (shares * price) / capital
            volumes[asset] = shares
        total_weight += curr[asset]
    remain = capital - total_weight * capital
    if remain <= 0:
        return volumes
    for asset in ordered:
        if asset not in volumes:
            continue
        step = int(lots.get(asset, 1))
        price = last_prices[asset]
        s = step
        missing = (ordered[asset] - curr[asset]) * capital
        while s * price < remain and s * price < missing:
            s += step
        if s * price > remain:
            s -= step
        curr[asset] += (s * price) / capital
        volumes[asset] += s
        remain -= s * price
        if remain <= 0:
            break
    return volumes


def orders_from_curr_shares(target_volumes: Mapping[str, int],
                            current_shares: Mapping[str, int]) -> dict[str, int]:
    """Signed share deltas: positive buys, negative sells, zero holds."""
    out: dict[str, int] = {}
    for asset in dict(target_volumes) | dict(current_shares):
        out[asset] = int(target_volumes.get(asset, 0)) - int(current_shares.get(asset, 0))
    return out

"""The built-in traders.

Mono-asset rules (applied independently per asset, splitting the cash
balance equally):

* random  - coin-flip buy/sell of a random volume, a sanity baseline
* rsi     - buy everything affordable when window RSI >= 70, else sell out;
            the buy-on-high-RSI reading is deliberate, momentum-style
* ma      - buy in an uptrend while price sits below its moving average,
            sell in a downtrend while price sits above it
* rfor    - per-asset random forest classifying the next close into
            low/mid/high; high buys, low sells

Multi-asset allocators rebalance toward long-only max-Sharpe weights using
lot-constrained volumes:

* hr   - expected returns and covariance frozen from the setup window
* apm1 - same, but each bar the expected returns are re-estimated as the
         ensemble of the rsi/ma/rfor analysts with the historical baseline

Both allocators emit sells before buys so the freed cash always covers the
buys; mu and Sigma stay frozen from setup (windows are not accumulated).
"""

from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from .analysts import (
    Analyst,
    ForestAnalyst,
    MovingAverageAnalyst,
    RsiAnalyst,
    ensemble_analyses,
)
from .backtest import AccountView
from .errors import NoExcessReturn
from .indicators import moving_average, rsi, trend
from .market_data import BarSeries, MarketSnapshot
from .ml import bars_to_dataset, derive_seed, fit_discretizer, rf_predict, rf_train, window_features
from .orders import Order, Side
from .portfolio import (
    ReturnEstimates,
    clean_weights,
    get_affor_shares,
    max_sharpe,
    orders_from_curr_shares,
    volumes_from_weights,
)

logger = logging.getLogger(__name__)

LotSpec = Mapping[str, int]


class Trader:
    """Base contract: setup on prestart history, trade per decision bar."""

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        pass

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        raise NotImplementedError


class _AssetTrader(Trader):
    def __init__(self, assets: list[str], lots: LotSpec | None = None):
        if not assets:
            raise ValueError("need at least one asset")
        self.assets = list(assets)
        self.lots = dict(lots or {})

    def step(self, asset: str) -> int:
        return int(self.lots.get(asset, 1))


class RandomTrader(_AssetTrader):
    """One random order per asset per bar: volume uniform in [1, 1000],
    side a fair coin flip.  Reproducible given the seed."""

    def __init__(self, assets: list[str], seed: int = 0,
                 lots: LotSpec | None = None):
        super().__init__(assets, lots)
        self._rng = np.random.default_rng(seed)

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        orders = []
        for asset in self.assets:
            volume = int(self._rng.integers(1, 1001))
            step = self.step(asset)
            if step > 1:
                volume = max(step, (volume // step) * step)
            side = Side.BUY if int(self._rng.integers(0, 2)) == 1 else Side.SELL
            orders.append(Order(asset, side, volume))
        return orders


class RsiTrader(_AssetTrader):
    """All-in/all-out per asset on the window RSI: >= 70 buys everything
    the per-asset cash slice affords, < 70 liquidates."""

    def __init__(self, assets: list[str], lots: LotSpec | None = None,
                 threshold: float = 70.0):
        super().__init__(assets, lots)
        self.threshold = threshold

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        orders = []
        money = account.balance / len(self.assets)
        for asset in self.assets:
            closes = snap.closes(asset)
            price = float(closes[-1])
            free = get_affor_shares(money, price, self.step(asset))
            held = account.shares(asset)
            r = rsi(closes)
            if r >= self.threshold and free > 0:
                orders.append(Order(asset, Side.BUY, free))
            elif r < self.threshold and held > 0:
                orders.append(Order(asset, Side.SELL, held))
        return orders


class MovingAverageTrader(_AssetTrader):
    """Buys a dip inside an uptrend, sells a bounce inside a downtrend."""

    def __init__(self, assets: list[str], lots: LotSpec | None = None,
                 period: int = 10):
        super().__init__(assets, lots)
        self.period = period

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        orders = []
        money = account.balance / len(self.assets)
        for asset in self.assets:
            closes = snap.closes(asset)
            price = float(closes[-1])
            m = moving_average(closes, self.period)
            t = trend(closes)
            held = account.shares(asset)
            if t > 0 and price < m:
                free = get_affor_shares(money, price, self.step(asset))
                if free > 0:
                    orders.append(Order(asset, Side.BUY, free))
            elif t < 0 and m < price and held > 0:
                orders.append(Order(asset, Side.SELL, held))
        return orders


class RandomForestTrader(_AssetTrader):
    """Per-asset forest over flattened OHLCV windows of the setup history;
    predicts the next close's bin and trades the edge bins."""

    def __init__(self, assets: list[str], lots: LotSpec | None = None,
                 time_frame: int = 10, horizon: int = 1, n_bins: int = 3,
                 n_estimators: int = 10, seed: int = 0):
        super().__init__(assets, lots)
        self.time_frame = time_frame
        self.horizon = horizon
        self.n_bins = n_bins
        self.n_estimators = n_estimators
        self.seed = seed
        self.models: dict = {}

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        self.models = {}
        for i, asset in enumerate(self.assets):
            ds = bars_to_dataset(history[asset], "close", self.time_frame, self.horizon)
            disc = fit_discretizer(ds.y, self.n_bins)
            self.models[asset] = rf_train(ds.X, disc.transform(ds.y),
                                          self.n_estimators,
                                          seed=derive_seed(self.seed, i),
                                          n_classes=self.n_bins)

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        orders = []
        money = account.balance / len(self.assets)
        for asset in self.assets:
            window = snap.window(asset)
            price = float(window.close[-1])
            p = rf_predict(self.models[asset], window_features(window, self.time_frame))
            held = account.shares(asset)
            if p == self.n_bins - 1:
                free = get_affor_shares(money, price, self.step(asset))
                if free > 0:
                    orders.append(Order(asset, Side.BUY, free))
            elif p == 0 and held > 0:
                orders.append(Order(asset, Side.SELL, held))
        return orders


class MaxSharpeTrader(_AssetTrader):
    """Rebalances toward long-only max-Sharpe weights each bar.

    Expected returns and covariance are estimated once from the setup
    window and kept frozen; orders are the lot-constrained share deltas
    between the target allocation (over current equity) and the current
    positions, priced at the decision closes.
    """

    def __init__(self, assets: list[str], lots: LotSpec | None = None,
                 risk_free: float = 0.0):
        super().__init__(assets, lots)
        self.risk_free = risk_free
        self.estimates: ReturnEstimates | None = None

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        closes = {a: history[a].close for a in self.assets}
        self.estimates = ReturnEstimates.from_history(closes, self.risk_free)

    def expected_returns(self, snap: MarketSnapshot) -> Mapping[str, float]:
        assert self.estimates is not None
        return self.estimates.mu

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]:
        assert self.estimates is not None, "setup() was not called"
        est = self.estimates.with_mu(dict(self.expected_returns(snap)))
        try:
            weights = clean_weights(max_sharpe(est))
        except NoExcessReturn:
            logger.warning("no asset beats the risk-free rate; holding")
            return []
        last = {a: snap.last_price(a) for a in self.assets}
        equity = account.balance + sum(account.shares(a) * last[a] for a in self.assets)
        targets = volumes_from_weights(self.assets, weights, last, equity, self.lots)
        deltas = orders_from_curr_shares(targets, {a: account.shares(a)
                                                   for a in self.assets})
        sells = [Order(a, Side.SELL, -deltas[a], limit=last[a])
                 for a in self.assets if deltas[a] < 0]
        buys = [Order(a, Side.BUY, deltas[a], limit=last[a])
                for a in self.assets if deltas[a] > 0]
        return sells + buys


class AnalystEnsembleTrader(MaxSharpeTrader):
    """Max-Sharpe allocator whose expected returns are refreshed each bar
    by averaging the rsi/ma/rfor analyst estimates with the baseline."""

    def __init__(self, assets: list[str], lots: LotSpec | None = None,
                 risk_free: float = 0.0, alpha: float = 0.5,
                 ma_period: int = 10, time_frame: int = 10, horizon: int = 1,
                 n_bins: int = 3, n_estimators: int = 10, seed: int = 0):
        super().__init__(assets, lots, risk_free)
        self.analysts: list[Analyst] = [
            RsiAnalyst(alpha),
            MovingAverageAnalyst(alpha, ma_period),
            ForestAnalyst(alpha, time_frame, horizon, n_bins, n_estimators, seed),
        ]

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        super().setup(history)
        scoped = {a: history[a] for a in self.assets}
        for analyst in self.analysts:
            analyst.setup(scoped)

    def expected_returns(self, snap: MarketSnapshot) -> Mapping[str, float]:
        assert self.estimates is not None
        analyses = [analyst.analyze(snap) for analyst in self.analysts]
        return ensemble_analyses(analyses, self.estimates.mu)

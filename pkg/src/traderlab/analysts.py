"""Analyst agents: per-asset expected-return estimates and their ensemble.

Each analyst starts from the annualized mean historical return of its
setup window and nudges it by a signal: a bullish read scales the baseline
up by ``alpha * |baseline|``, a bearish read scales it down, and ``None``
means no opinion.  The trading rules are intentionally those of the
corresponding mono-asset strategies, including the unconventional
buy-on-high-RSI reading.

The ensemble is the plain average of the baseline and every non-abstaining
analyst estimate; the baseline counts as one vote.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .errors import MissingAsset, ModelMissing
from .indicators import moving_average, rsi, trend
from .market_data import BarSeries, MarketSnapshot
from .ml import (
    bars_to_dataset,
    derive_seed,
    fit_discretizer,
    rf_predict,
    rf_train,
    window_features,
)

Analysis = dict[str, float | None]

DEFAULT_ALPHA = 0.5


class Analyst:
    """Contract: setup once on prestart history, then analyze snapshots.

    Analysts are independent of the investor's capital and preferences;
    they see bars, nothing else.
    """

    def setup(self, history: Mapping[str, BarSeries]) -> None:  # pragma: no cover
        pass

    def analyze(self, snapshot: MarketSnapshot) -> Analysis:
        raise NotImplementedError


class _BaselineAnalyst(Analyst):
    def __init__(self, alpha: float = DEFAULT_ALPHA):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.alpha = alpha
        self.mu: dict[str, float] = {}

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        from .portfolio import mean_historical_return

        self.mu = mean_historical_return({a: s.close for a, s in history.items()})

    def _baseline(self, asset: str) -> float:
        if asset not in self.mu:
            raise MissingAsset(f"no baseline return for {asset}")
        return self.mu[asset]

    def _bullish(self, er: float) -> float:
        return er + self.alpha * abs(er)

    def _bearish(self, er: float) -> float:
        return er - self.alpha * abs(er)


class RsiAnalyst(_BaselineAnalyst):
    """Bullish when window RSI >= threshold, bearish otherwise (never abstains)."""

    def __init__(self, alpha: float = DEFAULT_ALPHA, threshold: float = 70.0):
        super().__init__(alpha)
        self.threshold = threshold

    def analyze(self, snapshot: MarketSnapshot) -> Analysis:
        out: Analysis = {}
        for asset in snapshot.assets:
            er = self._baseline(asset)
            if rsi(snapshot.closes(asset)) >= self.threshold:
                out[asset] = self._bullish(er)
            else:
                out[asset] = self._bearish(er)
        return out


class MovingAverageAnalyst(_BaselineAnalyst):
    """Bullish in an uptrend with the last close below its moving average,
    bearish in a downtrend with the last close above it, silent otherwise."""

    def __init__(self, alpha: float = DEFAULT_ALPHA, period: int = 10):
        super().__init__(alpha)
        self.period = period

    def analyze(self, snapshot: MarketSnapshot) -> Analysis:
        out: Analysis = {}
        for asset in snapshot.assets:
            er = self._baseline(asset)
            closes = snapshot.closes(asset)
            m = moving_average(closes, self.period)
            t = trend(closes)
            last = float(closes[-1])
            if t > 0 and last < m:
                out[asset] = self._bullish(er)
            elif t < 0 and m < last:
                out[asset] = self._bearish(er)
            else:
                out[asset] = None
        return out


class ForestAnalyst(_BaselineAnalyst):
    """Classifies the next close into low/middle/high bins with a per-asset
    random forest; high is bullish, low is bearish, middle abstains."""

    def __init__(self, alpha: float = DEFAULT_ALPHA, time_frame: int = 10,
                 horizon: int = 1, n_bins: int = 3, n_estimators: int = 10,
                 seed: int = 0):
        super().__init__(alpha)
        self.time_frame = time_frame
        self.horizon = horizon
        self.n_bins = n_bins
        self.n_estimators = n_estimators
        self.seed = seed
        self.models: dict = {}

    def setup(self, history: Mapping[str, BarSeries]) -> None:
        super().setup(history)
        self.models = {}
        for i, (asset, series) in enumerate(history.items()):
            ds = bars_to_dataset(series, "close", self.time_frame, self.horizon)
            disc = fit_discretizer(ds.y, self.n_bins)
            classes = disc.transform(ds.y)
            self.models[asset] = rf_train(ds.X, classes, self.n_estimators,
                                          seed=derive_seed(self.seed, i),
                                          n_classes=self.n_bins)

    def analyze(self, snapshot: MarketSnapshot) -> Analysis:
        out: Analysis = {}
        for asset in snapshot.assets:
            er = self._baseline(asset)
            if asset not in self.models:
                raise ModelMissing(f"no trained model for {asset}")
            x = window_features(snapshot.window(asset), self.time_frame)
            p = rf_predict(self.models[asset], x)
            if p == self.n_bins - 1:
                out[asset] = self._bullish(er)
            elif p == 0:
                out[asset] = self._bearish(er)
            else:
                out[asset] = None
        return out


def ensemble_analyses(analyses: Iterable[Analysis],
                      mu: Mapping[str, float]) -> dict[str, float]:
    """Average the baseline with all non-abstaining analyst estimates.

    Assets every analyst abstains on keep their baseline unchanged.
    """
    analyses = list(analyses)
    for analysis in analyses:
        unknown = [a for a in analysis if a not in mu]
        if unknown:
            raise MissingAsset(f"analysis covers assets outside the baseline: {unknown}")
    out: dict[str, float] = {}
    for asset, base in mu.items():
        votes = [base]
        for analysis in analyses:
            value = analysis.get(asset)
            if value is not None:
                votes.append(value)
        out[asset] = sum(votes) / len(votes)
    return out

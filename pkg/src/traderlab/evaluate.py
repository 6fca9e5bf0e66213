"""Performance report over an equity series.

Headline metrics follow the per-bar return series r_t = E_t/E_{t-1} - 1:

* annualized return  = (E_N / E_0)^(periods/N) - 1, N = number of returns
* daily volatility   = sample stdev of r_t (T-1 denominator)
* annualized Sharpe  = mean(r_t - rf_daily)/stdev(r_t) * sqrt(periods)

All three are reported in percent.  Volatility's headline is the per-bar
(daily) standard deviation; the annualized figure is carried alongside.
A flat equity curve has zero volatility, so its Sharpe is undefined and
reported as such rather than as infinity.  Max drawdown is included as an
extra, clearly-labeled metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backtest import EquityRecord, read_results_csv
from .errors import TooFewRecords
from .market_data import Period

PERIODS_PER_YEAR = {Period.DAILY: 252, Period.INTRADAY: 252 * 390}


@dataclass(frozen=True)
class PerformanceReport:
    ann_return_pct: float
    ann_sharpe_pct: float | None  # None when volatility is zero
    daily_vol_pct: float
    ann_vol_pct: float
    max_drawdown_pct: float
    n_bars: int
    start: np.datetime64
    end: np.datetime64

    def to_json_dict(self) -> dict:
        return {
            "ann_return_pct": self.ann_return_pct,
            "ann_sharpe_pct": self.ann_sharpe_pct,
            "daily_vol_pct": self.daily_vol_pct,
            "max_drawdown_pct": self.max_drawdown_pct,
            "n_bars": self.n_bars,
        }

    def to_text(self) -> str:
        sharpe = "undefined" if self.ann_sharpe_pct is None else f"{self.ann_sharpe_pct:.2f}"
        rows = [
            ("An. Return (%)", f"{self.ann_return_pct:.2f}"),
            ("An. Sharpe Ratio (%)", sharpe),
            ("Volatility (%)", f"{self.daily_vol_pct:.3f}"),
            ("An. Volatility (%)", f"{self.ann_vol_pct:.2f}"),
            ("Max Drawdown (%)", f"{self.max_drawdown_pct:.2f}"),
            ("Bars", str(self.n_bars)),
            ("Span", f"{self.start} .. {self.end}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def evaluate(records: list[EquityRecord], risk_free: float = 0.0,
             periods_per_year: int = 252) -> PerformanceReport:
    """Compute the report from an in-memory equity frame."""
    if len(records) < 2:
        raise TooFewRecords(f"need >= 2 equity records, got {len(records)}")
    equity = np.array([r.equity for r in records], dtype=np.float64)
    if np.any(equity <= 0):
        raise ValueError("equity must stay positive to annualize returns")
    n_returns = len(equity) - 1
    returns = equity[1:] / equity[:-1] - 1.0

    ann_return = (equity[-1] / equity[0]) ** (periods_per_year / n_returns) - 1.0
    vol = float(np.std(returns, ddof=1)) if n_returns > 1 else 0.0
    if vol > 0.0:
        rf_daily = (1.0 + risk_free) ** (1.0 / periods_per_year) - 1.0
        sharpe = float(np.mean(returns - rf_daily)) / vol * math.sqrt(periods_per_year)
        sharpe_pct: float | None = sharpe * 100.0
    else:
        sharpe_pct = None
    peaks = np.maximum.accumulate(equity)
    drawdown = float(np.max((peaks - equity) / peaks))

    return PerformanceReport(
        ann_return_pct=float(ann_return) * 100.0,
        ann_sharpe_pct=sharpe_pct,
        daily_vol_pct=vol * 100.0,
        ann_vol_pct=vol * math.sqrt(periods_per_year) * 100.0,
        max_drawdown_pct=drawdown * 100.0,
        n_bars=len(records),
        start=records[0].timestamp,
        end=records[-1].timestamp,
    )


def evaluate_file(path: str | Path, risk_free: float = 0.0,
                  periods_per_year: int = 252) -> PerformanceReport:
    """Evaluate a results CSV produced by the backtest engine."""
    return evaluate(read_results_csv(path), risk_free, periods_per_year)


def write_report_json(report: PerformanceReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")

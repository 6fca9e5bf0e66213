"""traderlab: build, backtest and evaluate autonomous multi-asset traders.

The pieces mirror a small portfolio-management desk: market data loading
and windowing, technical indicators, analyst agents that estimate expected
returns, a long-only max-Sharpe allocator with lot-constrained order
sizing, an investment-policy checker, a netting backtest engine, and
performance reporting.  See the README for the CLI and file formats.
"""

from .analysts import (
    Analyst,
    ForestAnalyst,
    MovingAverageAnalyst,
    RsiAnalyst,
    ensemble_analyses,
)
from .backtest import (
    AccountState,
    AccountView,
    BacktestSetup,
    EquityRecord,
    FillPolicy,
    RunTrace,
    execute_order,
    get_balance,
    get_shares,
    read_results_csv,
    run,
    write_results_csv,
)
from .evaluate import PerformanceReport, evaluate, evaluate_file
from .indicators import moving_average, rsi, trend
from .ips import PolicyStatement, Violation, ViolationKind, check_portfolio, vet_orders
from .market_data import (
    Bar,
    BarSeries,
    MarketSnapshot,
    Period,
    align,
    load_bar_csv,
    save_bar_csv,
    snapshot,
)
from .ml import (
    Dataset,
    Discretizer,
    ForestModel,
    bars_to_dataset,
    fit_discretizer,
    forest_to_json,
    rf_predict,
    rf_train,
)
from .orders import CostModel, Fill, Order, Rejection, Side
from .portfolio import (
    ReturnEstimates,
    clean_weights,
    get_affor_shares,
    max_sharpe,
    mean_historical_return,
    orders_from_curr_shares,
    sample_cov,
    sharpe_ratio,
    volumes_from_weights,
)
from .strategies import (
    AnalystEnsembleTrader,
    MaxSharpeTrader,
    MovingAverageTrader,
    RandomForestTrader,
    RandomTrader,
    RsiTrader,
    Trader,
)

__version__ = "0.1.0"

"""Bar-discretized backtest engine with a long-only netting account.

Time advances one bar at a time over the aligned calendar.  At each bar
the trader sees a trailing window of ``mem`` bars per asset (never a
future bar), returns orders, and the engine executes them either at the
decision bar's close (default, matches strategies that quote last prices)
or at the next bar's open (lookahead-safe).  One equity record is written
per simulated bar, valued at that bar's closes.

The engine itself holds no randomness: a run is fully determined by
(data, setup, trader state incl. seed).
"""

from __future__ import annotations

import csv
import enum
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np

from .errors import DataGap, InsufficientHistory, MalformedRow, TooFewRecords
from .ips import PolicyStatement, vet_orders
from .market_data import BarSeries, MarketSnapshot, Period, align, snapshot
from .orders import CostModel, Fill, Order, Rejection, Side

RESULTS_HEADER = ("bar_index", "timestamp", "cash", "holdings_value", "equity")


class FillPolicy(enum.Enum):
    DECISION_CLOSE = "decision_close"
    NEXT_OPEN = "next_open"


def _as_timestamp(value) -> np.datetime64:
    return np.datetime64(value).astype("datetime64[s]")


@dataclass
class BacktestSetup:
    """Everything a run needs besides the trader and the data."""

    assets: list[str]
    prestart: np.datetime64
    start: np.datetime64
    end: np.datetime64
    period: Period = Period.DAILY
    capital: float = 100_000.0
    mem: int = 10
    results_file: str | Path | None = None
    verbose: bool = False
    seed: int = 0
    fill_policy: FillPolicy = FillPolicy.DECISION_CLOSE
    cost_model: CostModel = field(default_factory=CostModel)
    policy: PolicyStatement | None = None

    def __post_init__(self) -> None:
        self.prestart = _as_timestamp(self.prestart)
        self.start = _as_timestamp(self.start)
        self.end = _as_timestamp(self.end)
        if not (self.prestart <= self.start < self.end):
            raise ValueError("need prestart <= start < end")
        if self.capital <= 0:
            raise ValueError("capital must be positive")
        if self.mem < 1:
            raise ValueError("mem must be >= 1")


@dataclass
class AccountState:
    """Netting account: cash plus one non-negative share position per asset."""

    cash: float
    positions: dict[str, int] = field(default_factory=dict)
    fills: list[Fill] = field(default_factory=list)


def get_balance(account: AccountState) -> float:
    return account.cash


def get_shares(account: AccountState, asset: str) -> int:
    return account.positions.get(asset, 0)


class AccountView:
    """Read-only view handed to traders at decision time."""

    def __init__(self, account: AccountState):
        self._account = account

    @property
    def balance(self) -> float:
        return self._account.cash

    def shares(self, asset: str) -> int:
        return get_shares(self._account, asset)

    def positions(self) -> dict[str, int]:
        return dict(self._account.positions)


class Trader(Protocol):
    def setup(self, history: Mapping[str, BarSeries]) -> None: ...

    def trade(self, account: AccountView, snap: MarketSnapshot) -> list[Order]: ...


@dataclass(frozen=True)
class EquityRecord:
    bar_index: int
    timestamp: np.datetime64
    cash: float
    holdings_value: float
    equity: float  # always cash + holdings_value


@dataclass(frozen=True)
class DecisionRecord:
    """Audit row: what the trader was shown and when (lookahead checks)."""

    bar_index: int
    timestamp: np.datetime64
    snapshot_last_timestamp: np.datetime64
    n_orders: int


@dataclass
class RunTrace:
    """Optional collector for fills, rejections and decision audits."""

    fills: list[Fill] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)
    decisions: list[DecisionRecord] = field(default_factory=list)


def execute_order(account: AccountState, order: Order, fill_price: float,
                  cost_model: CostModel | None = None, decision_index: int = -1,
                  fill_index: int = -1,
                  timestamp: np.datetime64 | None = None) -> Fill | Rejection:
    """Apply one order to the account at ``fill_price``.

    Buys need full cash coverage (no partial fills); sells are clipped to
    the held position.  A rejection leaves the account untouched.
    """
    if fill_price <= 0:
        raise ValueError("fill price must be positive")
    cm = cost_model if cost_model is not None else CostModel()
    ts = timestamp if timestamp is not None else np.datetime64("1970-01-01T00:00:00")
    if order.side is Side.BUY:
        fee = cm.cost(order.volume, fill_price)
        total = order.volume * fill_price + fee
        if total > account.cash:
            return Rejection(order, "insufficient_cash", decision_index)
        account.cash -= total
        account.positions[order.asset] = account.positions.get(order.asset, 0) + order.volume
        volume = order.volume
    else:
        held = account.positions.get(order.asset, 0)
        volume = min(order.volume, held)
        if volume <= 0:
            return Rejection(order, "no_position", decision_index)
        fee = cm.cost(volume, fill_price)
        proceeds = volume * fill_price - fee
        if account.cash + proceeds < 0:
            return Rejection(order, "insufficient_cash", decision_index)
        account.cash += proceeds
        account.positions[order.asset] = held - volume
    fill = Fill(order.asset, order.side, volume, fill_price, fee,
                decision_index, fill_index, ts, account.cash)
    account.fills.append(fill)
    return fill


def _log(setup: BacktestSetup, message: str) -> None:
    if setup.verbose:
        print(message, file=sys.stderr)


def run(trader: Trader, setup: BacktestSetup, data: Mapping[str, BarSeries],
        trace: RunTrace | None = None) -> list[EquityRecord]:
    """Run one backtest and return (and optionally write) the equity frame.

    The trader's ``setup`` sees only bars in [prestart, start); each
    ``trade`` call sees a snapshot ending at the decision bar.
    """
    aligned = align(data)
    ref = next(iter(aligned.values()))
    ts = ref.timestamps
    for s in aligned.values():
        if not np.array_equal(s.timestamps, ts):
            raise DataGap(f"{s.asset}: calendar mismatch after alignment")

    prestart_i = int(np.searchsorted(ts, setup.prestart, side="left"))
    start_i = int(np.searchsorted(ts, setup.start, side="left"))
    end_i = int(np.searchsorted(ts, setup.end, side="right")) - 1
    if end_i < start_i:
        raise InsufficientHistory("no bars inside [start, end]")
    if start_i - prestart_i < setup.mem:
        raise InsufficientHistory(
            f"prestart window has {start_i - prestart_i} bars, need >= {setup.mem}")

    history = {a: s.slice(prestart_i, start_i) for a, s in aligned.items()}
    trader.setup(history)

    account = AccountState(cash=float(setup.capital))
    pending: list[Order] = []
    records: list[EquityRecord] = []

    def _execute(orders: list[Order], prices: Mapping[str, float],
                 decision_index: int, fill_index: int, when: np.datetime64) -> None:
        for order in orders:
            result = execute_order(account, order, prices[order.asset],
                                   setup.cost_model, decision_index, fill_index, when)
            if isinstance(result, Rejection):
                if trace is not None:
                    trace.rejections.append(result)
                _log(setup, f"{when} reject {order.side.value} {order.volume} "
                            f"{order.asset}: {result.reason}")
            else:
                if trace is not None:
                    trace.fills.append(result)
                _log(setup, f"{when} fill {result.side.value} {result.volume} "
                            f"{result.asset} @ {result.price}")

    for step, t in enumerate(range(start_i, end_i + 1)):
        now = ts[t]
        closes = {a: float(s.close[t]) for a, s in aligned.items()}
        if setup.fill_policy is FillPolicy.NEXT_OPEN and pending:
            opens = {a: float(s.open[t]) for a, s in aligned.items()}
            _execute(pending, opens, step - 1, step, now)
            pending = []

        snap = snapshot(aligned, t, setup.mem)
        orders = list(trader.trade(AccountView(account), snap) or [])
        if setup.policy is not None:
            orders = vet_orders(setup.policy, orders, account.positions,
                                closes, account.cash)
        if trace is not None:
            trace.decisions.append(
                DecisionRecord(step, now, snap.last_timestamp, len(orders)))

        if setup.fill_policy is FillPolicy.DECISION_CLOSE:
            _execute(orders, closes, step, step, now)
        else:
            pending = orders

        holdings = sum(account.positions.get(a, 0) * closes[a] for a in aligned)
        records.append(EquityRecord(step, now, account.cash, holdings,
                                    account.cash + holdings))
        _log(setup, f"{now} equity {account.cash + holdings:.2f}")

    if pending:
        _log(setup, f"discarding {len(pending)} order(s) pending after the last bar")

    if setup.results_file is not None:
        write_results_csv(records, setup.results_file, setup.period)
    return records


def write_results_csv(records: list[EquityRecord], path: str | Path,
                      period: Period = Period.DAILY) -> None:
    from .market_data import _format_timestamp

    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in records:
            writer.writerow([r.bar_index, _format_timestamp(r.timestamp, period),
                             repr(r.cash), repr(r.holdings_value), repr(r.equity)])


def read_results_csv(path: str | Path) -> list[EquityRecord]:
    path = Path(path)
    records: list[EquityRecord] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != RESULTS_HEADER:
            raise MalformedRow(f"{path}: bad header {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(f"{path} row {row_no}: expected 5 columns")
            try:
                records.append(EquityRecord(int(row[0]), _as_timestamp(row[1]),
                                            float(row[2]), float(row[3]),
                                            float(row[4])))
            except ValueError as exc:
                raise MalformedRow(f"{path} row {row_no}: {exc}") from None
    if len(records) < 2:
        raise TooFewRecords(f"{path}: need >= 2 records, got {len(records)}")
    return records

"""OHLCV bar series: loading, validation, calendar alignment and windowing.

Bar CSV schema (header required)::

    timestamp,open,high,low,close,volume

Timestamps are ISO-8601: ``YYYY-MM-DD`` for daily bars and
``YYYY-MM-DDTHH:MM:SS`` for intraday bars.  Decimal point is ``.``, no
thousands separators.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    DuplicateTimestamp,
    EmptyIntersection,
    IndexOutOfRange,
    InvariantViolation,
    MalformedRow,
)

CSV_HEADER = ("timestamp", "open", "high", "low", "close", "volume")


class Period(enum.Enum):
    DAILY = "daily"
    INTRADAY = "intraday"  # one-minute bars


@dataclass(frozen=True)
class Bar:
    """One OHLCV observation."""

    timestamp: np.datetime64
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self) -> None:
        _check_bar(self.open, self.high, self.low, self.close, self.volume,
                   context=str(self.timestamp))


def _check_bar(o: float, h: float, lo: float, c: float, v: float, context: str) -> None:
    if not (o > 0 and h > 0 and lo > 0 and c > 0):
        raise InvariantViolation(f"non-positive price at {context}")
    if lo > h:
        raise InvariantViolation(f"low > high at {context}")
    if not (lo <= o <= h):
        raise InvariantViolation(f"open outside [low, high] at {context}")
    if not (lo <= c <= h):
        raise InvariantViolation(f"close outside [low, high] at {context}")
    if v < 0:
        raise InvariantViolation(f"negative volume at {context}")


@dataclass(frozen=True)
class BarSeries:
    """Time-ordered OHLCV series for one asset.

    Arrays are treated as immutable after construction; loaded series are
    safe to share across concurrent backtest runs.
    """

    asset: str
    period: Period
    timestamps: np.ndarray  # datetime64[s], strictly increasing
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.timestamps)
        for arr in (self.open, self.high, self.low, self.close, self.volume):
            if len(arr) != n:
                raise InvariantViolation(f"{self.asset}: ragged column lengths")
        if n == 0:
            return
        diffs = np.diff(self.timestamps)
        if np.any(diffs == np.timedelta64(0, "s")):
            at = self.timestamps[1:][diffs == np.timedelta64(0, "s")][0]
            raise DuplicateTimestamp(f"{self.asset}: duplicate timestamp {at}")
        if np.any(diffs < np.timedelta64(0, "s")):
            raise InvariantViolation(f"{self.asset}: timestamps not sorted")
        bad = (
            (self.open <= 0) | (self.high <= 0) | (self.low <= 0) | (self.close <= 0)
            | (self.low > self.high)
            | (self.open < self.low) | (self.open > self.high)
            | (self.close < self.low) | (self.close > self.high)
            | (self.volume < 0)
        )
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            _check_bar(float(self.open[i]), float(self.high[i]), float(self.low[i]),
                       float(self.close[i]), float(self.volume[i]),
                       context=f"{self.asset} {self.timestamps[i]}")

    def __len__(self) -> int:
        return len(self.timestamps)

    def bar(self, i: int) -> Bar:
        if not 0 <= i < len(self):
            raise IndexOutOfRange(f"bar index {i} outside series of length {len(self)}")
        return Bar(self.timestamps[i], float(self.open[i]), float(self.high[i]),
                   float(self.low[i]), float(self.close[i]), float(self.volume[i]))

    def slice(self, start: int, stop: int) -> "BarSeries":
        return BarSeries(self.asset, self.period, self.timestamps[start:stop],
                         self.open[start:stop], self.high[start:stop],
                         self.low[start:stop], self.close[start:stop],
                         self.volume[start:stop])

    @classmethod
    def from_bars(cls, asset: str, period: Period, bars: list[Bar]) -> "BarSeries":
        ts = np.array([b.timestamp for b in bars], dtype="datetime64[s]")
        cols = {f: np.array([getattr(b, f) for b in bars], dtype=np.float64)
                for f in ("open", "high", "low", "close", "volume")}
        return cls(asset, period, ts, **cols)


@dataclass(frozen=True)
class MarketSnapshot:
    """Per-asset trailing bar windows, all ending at the same timestamp."""

    windows: Mapping[str, BarSeries] = field(default_factory=dict)

    def __post_init__(self) -> None:
        last = None
        for asset, w in self.windows.items():
            if len(w) == 0:
                raise InvariantViolation(f"empty snapshot window for {asset}")
            ts = w.timestamps[-1]
            if last is None:
                last = ts
            elif ts != last:
                raise InvariantViolation("snapshot windows end at different timestamps")

    @property
    def assets(self) -> list[str]:
        return list(self.windows.keys())

    @property
    def last_timestamp(self) -> np.datetime64:
        first = next(iter(self.windows.values()))
        return first.timestamps[-1]

    def window(self, asset: str) -> BarSeries:
        return self.windows[asset]

    def closes(self, asset: str) -> np.ndarray:
        return self.windows[asset].close

    def last_price(self, asset: str) -> float:
        return float(self.windows[asset].close[-1])

    def last_prices(self) -> dict[str, float]:
        return {a: self.last_price(a) for a in self.windows}


def _parse_timestamp(text: str, row_no: int) -> np.datetime64:
    try:
        return np.datetime64(text).astype("datetime64[s]")
    except ValueError as exc:
        raise MalformedRow(f"row {row_no}: bad timestamp {text!r}") from exc


def load_bar_csv(path: str | Path, asset: str, period: Period | None = None) -> BarSeries:
    """Load one asset's bar series from CSV, validating every invariant.

    Rows are sorted by timestamp; the period is inferred from the first
    timestamp (date-only means daily) unless given explicitly.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedRow(f"{path}: bad header {header!r}")
        ts_list: list[np.datetime64] = []
        cols: list[list[float]] = [[], [], [], [], []]
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise MalformedRow(f"{path} row {row_no}: expected 6 columns, got {len(row)}")
            if period is None:
                period = Period.INTRADAY if "T" in row[0] else Period.DAILY
            ts_list.append(_parse_timestamp(row[0], row_no))
            for k, text in enumerate(row[1:]):
                try:
                    cols[k].append(float(text))
                except ValueError as exc:
                    raise MalformedRow(f"{path} row {row_no}: bad number {text!r}") from exc
    if not ts_list:
        raise MalformedRow(f"{path}: no data rows")
    ts = np.array(ts_list, dtype="datetime64[s]")
    order = np.argsort(ts, kind="stable")
    arrays = [np.asarray(c, dtype=np.float64)[order] for c in cols]
    try:
        return BarSeries(asset, period or Period.DAILY, ts[order], *arrays)
    except (InvariantViolation, DuplicateTimestamp) as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _format_timestamp(ts: np.datetime64, period: Period) -> str:
    if period is Period.DAILY:
        return str(ts.astype("datetime64[D]"))
    return str(ts.astype("datetime64[s]"))


def save_bar_csv(series: BarSeries, path: str | Path) -> None:
    """Write a series back to CSV. Round-trips exactly with load_bar_csv."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i in range(len(series)):
            writer.writerow([
                _format_timestamp(series.timestamps[i], series.period),
                repr(float(series.open[i])), repr(float(series.high[i])),
                repr(float(series.low[i])), repr(float(series.close[i])),
                repr(float(series.volume[i])),
            ])


def align(series_map: Mapping[str, BarSeries]) -> dict[str, BarSeries]:
    """Restrict every series to the timestamps present in all of them.

    Order is preserved; no prices are fabricated (intersection, not
    forward-fill).  Idempotent.
    """
    if not series_map:
        raise ValueError("align requires at least one series")
    names = list(series_map)
    common = series_map[names[0]].timestamps
    for name in names[1:]:
        common = np.intersect1d(common, series_map[name].timestamps)
    if len(common) == 0:
        raise EmptyIntersection(f"no common timestamp across {names}")
    out: dict[str, BarSeries] = {}
    for name in names:
        s = series_map[name]
        mask = np.isin(s.timestamps, common)
        out[name] = BarSeries(s.asset, s.period, s.timestamps[mask], s.open[mask],
                              s.high[mask], s.low[mask], s.close[mask], s.volume[mask])
    return out


def snapshot(series_map: Mapping[str, BarSeries], end_index: int, mem: int) -> MarketSnapshot:
    """Trailing windows of up to ``mem`` bars ending at ``end_index``.

    The map must already be aligned; windows near the start of the data are
    truncated rather than padded.
    """
    if mem < 1:
        raise ValueError("mem must be >= 1")
    windows: dict[str, BarSeries] = {}
    for asset, s in series_map.items():
        if not 0 <= end_index < len(s):
            raise IndexOutOfRange(
                f"end_index {end_index} outside {asset} series of length {len(s)}")
        windows[asset] = s.slice(max(0, end_index - mem + 1), end_index + 1)
    return MarketSnapshot(windows)

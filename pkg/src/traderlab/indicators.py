"""Technical indicators over close-price windows: RSI, moving average, trend.

All functions are pure and operate on the whole window they are handed
(the decision window of ``mem`` bars), so RSI here uses simple averages
over the window's diffs rather than a fixed 14-period Wilder smoothing.

Note: the trading rules built on top of this RSI buy at ``rsi >= 70``,
which inverts the conventional overbought reading.  That is deliberate and
documented where the rules live (see strategies/analysts); the indicator
itself is standard.
"""

from __future__ import annotations

import numpy as np

from .errors import WindowTooShort


def _closes(window) -> np.ndarray:
    closes = np.asarray(window, dtype=np.float64)
    if closes.ndim != 1:
        raise ValueError("close window must be one-dimensional")
    if np.any(closes <= 0):
        raise ValueError("close prices must be positive")
    return closes


def rsi(window) -> float:
    """Relative Strength Index in [0, 100] over the whole window.

    Average gain and average loss are simple means over the n-1
    close-to-close diffs.  No losses -> 100, no gains -> 0, flat -> 50.
    """
    closes = _closes(window)
    if len(closes) < 2:
        raise WindowTooShort("rsi needs at least 2 closes")
    diffs = np.diff(closes)
    n = len(diffs)
    avg_gain = float(np.sum(diffs[diffs > 0])) / n
    avg_loss = float(-np.sum(diffs[diffs < 0])) / n
    if avg_loss == 0.0 and avg_gain == 0.0:
        return 50.0
    if avg_loss == 0.0:
        return 100.0
    if avg_gain == 0.0:
        return 0.0
    rs = avg_gain / avg_loss
    return 100.0 - 100.0 / (1.0 + rs)


def moving_average(window, period: int) -> float:
    """Arithmetic mean of the last ``period`` closes."""
    closes = _closes(window)
    if period < 1:
        raise ValueError("period must be >= 1")
    if len(closes) < period:
        raise WindowTooShort(f"moving_average needs {period} closes, got {len(closes)}")
    return float(np.mean(closes[-period:]))


def trend(window) -> float:
    """Ordinary-least-squares slope of close against bar index.

    The sign is the trend signal; units are price per bar.
    """
    closes = _closes(window)
    n = len(closes)
    if n < 2:
        raise WindowTooShort("trend needs at least 2 closes")
    x = np.arange(n, dtype=np.float64)
    xc = x - x.mean()
    yc = closes - closes.mean()
    return float(np.dot(xc, yc) / np.dot(xc, xc))

"""Exception hierarchy shared across the package.

Two broad families matter to the CLI: configuration problems (exit code 2)
and data/runtime problems (exit code 3).
"""

from __future__ import annotations


class TraderLabError(Exception):
    """Base class for all package errors."""


class ConfigError(TraderLabError):
    """Invalid run configuration (unknown strategy, bad dates, bad policy)."""


class DataError(TraderLabError):
    """Problem with input data files or series."""


# -- market data ------------------------------------------------------------

class MalformedRow(DataError):
    """CSV row with wrong column count or an unparseable field."""


class InvariantViolation(DataError):
    """A bar breaks an OHLCV invariant (e.g. low > high, price <= 0)."""


class DuplicateTimestamp(DataError):
    """Two bars in one series share a timestamp."""


class EmptyIntersection(DataError):
    """Calendar alignment left no common timestamp."""


class IndexOutOfRange(TraderLabError):
    """Bar index outside the series."""


# -- indicators --------------------------------------------------------------

class WindowTooShort(TraderLabError):
    """Indicator window shorter than the indicator requires."""


# -- ml ----------------------------------------------------------------------

class SeriesTooShort(TraderLabError):
    """Series too short for the requested window/horizon dataset."""


class DegenerateRange(TraderLabError):
    """All target values identical; uniform bins undefined."""


class EmptyDataset(TraderLabError):
    """Not enough training examples."""


class DimensionMismatch(TraderLabError):
    """Feature row length differs from the trained feature count."""


class ModelMissing(TraderLabError):
    """No trained model for the requested asset."""


# -- analysts ----------------------------------------------------------------

class MissingAsset(TraderLabError):
    """Snapshot contains an asset absent from the baseline expectations."""


# -- portfolio ---------------------------------------------------------------

class TooFewObservations(TraderLabError):
    """Not enough price rows to estimate returns or covariance."""


class NoExcessReturn(TraderLabError):
    """Every expected return is at or below the risk-free rate."""


class SingularCovariance(TraderLabError):
    """Covariance matrix unusable even after regularization."""


# -- ips ---------------------------------------------------------------------

class MissingPrice(TraderLabError):
    """No price available for a held or ordered asset."""


# -- backtest ----------------------------------------------------------------

class InsufficientHistory(DataError):
    """Prestart window does not provide the required number of bars."""


class DataGap(DataError):
    """An aligned series unexpectedly misses a bar (engine self-check)."""


# -- evaluate ----------------------------------------------------------------

class TooFewRecords(TraderLabError):
    """Equity frame has fewer than two records."""

"""Order, fill and cost-model types shared by the engine, strategies and
the policy checker."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"


@dataclass(frozen=True)
class Order:
    """One intended trade; market order when ``limit`` is None.

    The simulator fills at the price dictated by the fill policy; ``limit``
    is carried as metadata (strategies quote the decision price) and does
    not gate execution.
    """

    asset: str
    side: Side
    volume: int
    limit: float | None = None

    def __post_init__(self) -> None:
        if self.volume <= 0:
            raise ValueError(f"order volume must be positive, got {self.volume}")


@dataclass(frozen=True)
class Fill:
    """Executed order: what traded, at what price, and when."""

    asset: str
    side: Side
    volume: int
    price: float
    fee: float
    decision_index: int
    fill_index: int
    timestamp: np.datetime64
    cash_after: float


@dataclass(frozen=True)
class Rejection:
    order: Order
    reason: str  # "insufficient_cash" | "no_position"
    decision_index: int


@dataclass(frozen=True)
class CostModel:
    """Per-order transaction cost: fixed fee plus a fraction of notional."""

    fixed: float = 0.0
    proportional: float = 0.0

    def cost(self, volume: int, price: float) -> float:
        return self.fixed + self.proportional * volume * price

"""Investment policy statement: portfolio adherence checks and order vetting.

A policy lists the tradable assets and per-class weight bounds (e.g. the
classic balanced rule of keeping common stocks between 25% and 75% of the
portfolio).  Vetting simulates intended orders in sequence and drops any
order whose post-fill portfolio would introduce a new violation or worsen
an existing one; orders that reduce an existing violation pass even when
the portfolio still violates afterwards, so a non-adherent portfolio can
be repaired.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .errors import MissingPrice
from .orders import Order, Side

_EPS = 1e-12


class ViolationKind(enum.Enum):
    DISALLOWED_ASSET = "disallowed_asset"
    CLASS_UNDER_MIN = "class_under_min"
    CLASS_OVER_MAX = "class_over_max"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: str  # asset or class label
    observed: float
    bound: float


@dataclass(frozen=True)
class PolicyStatement:
    allowed_assets: frozenset[str]
    asset_class: Mapping[str, str] = field(default_factory=dict)
    class_bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for cls, (lo, hi) in self.class_bounds.items():
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"class {cls!r}: bounds [{lo}, {hi}] invalid")
        unclassed = [a for a in self.allowed_assets if a not in self.asset_class]
        if unclassed and self.class_bounds:
            raise ValueError(f"allowed assets without a class: {sorted(unclassed)}")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "PolicyStatement":
        bounds = {c: (float(v[0]), float(v[1]))
                  for c, v in dict(raw.get("class_bounds", {})).items()}
        return cls(frozenset(raw.get("allowed_assets", ())),
                   dict(raw.get("asset_class", {})), bounds)


def _portfolio_weights(policy: PolicyStatement, positions: Mapping[str, int],
                       prices: Mapping[str, float], cash: float):
    total = cash
    class_value: dict[str, float] = {c: 0.0 for c in policy.class_bounds}
    asset_value: dict[str, float] = {}
    for asset, shares in positions.items():
        if shares == 0:
            continue
        if asset not in prices:
            raise MissingPrice(f"no price for held asset {asset}")
        value = shares * prices[asset]
        total += value
        asset_value[asset] = value
        cls = policy.asset_class.get(asset)
        if cls in class_value:
            class_value[cls] += value
    if total <= 0:
        return {c: 0.0 for c in class_value}, {a: 0.0 for a in asset_value}
    return ({c: v / total for c, v in class_value.items()},
            {a: v / total for a, v in asset_value.items()})


def check_portfolio(policy: PolicyStatement, positions: Mapping[str, int],
                    prices: Mapping[str, float], cash: float) -> list[Violation]:
    """All policy breaches of the current portfolio; empty means adherent."""
    class_w, asset_w = _portfolio_weights(policy, positions, prices, cash)
    violations: list[Violation] = []
    for asset in sorted(asset_w):
        if asset not in policy.allowed_assets:
            violations.append(Violation(ViolationKind.DISALLOWED_ASSET, asset,
                                        asset_w[asset], 0.0))
    for cls in sorted(policy.class_bounds):
        lo, hi = policy.class_bounds[cls]
        w = class_w[cls]
        if w < lo - _EPS:
            violations.append(Violation(ViolationKind.CLASS_UNDER_MIN, cls, w, lo))
        elif w > hi + _EPS:
            violations.append(Violation(ViolationKind.CLASS_OVER_MAX, cls, w, hi))
    return violations


def _severities(policy, positions, prices, cash) -> dict[tuple, float]:
    out: dict[tuple, float] = {}
    for v in check_portfolio(policy, positions, prices, cash):
        if v.kind is ViolationKind.DISALLOWED_ASSET:
            out[(v.kind, v.subject)] = v.observed
        elif v.kind is ViolationKind.CLASS_UNDER_MIN:
            out[(v.kind, v.subject)] = v.bound - v.observed
        else:
            out[(v.kind, v.subject)] = v.observed - v.bound
    return out


def _simulate_fill(order: Order, positions: Mapping[str, int], cash: float,
                   prices: Mapping[str, float]):
    if order.asset not in prices:
        raise MissingPrice(f"no price for ordered asset {order.asset}")
    pos = dict(positions)
    price = prices[order.asset]
    if order.side is Side.BUY:
        pos[order.asset] = pos.get(order.asset, 0) + order.volume
        cash -= order.volume * price
    else:
        vol = min(order.volume, pos.get(order.asset, 0))
        pos[order.asset] = pos.get(order.asset, 0) - vol
        cash += vol * price
    return pos, cash


def vet_orders(policy: PolicyStatement, orders: list[Order],
               positions: Mapping[str, int], prices: Mapping[str, float],
               cash: float) -> list[Order]:
    """Drop every order whose simulated fill would leave the portfolio in a
    worse policy state; accepted orders keep their input order.

    Affordability is not checked here (the engine enforces cash); the
    simulation only tracks weights.
    """
    sim_pos: Mapping[str, int] = dict(positions)
    sim_cash = cash
    before = _severities(policy, sim_pos, prices, sim_cash)
    accepted: list[Order] = []
    for order in orders:
        new_pos, new_cash = _simulate_fill(order, sim_pos, sim_cash, prices)
        after = _severities(policy, new_pos, prices, new_cash)
        ok = all(key in before and sev <= before[key] + _EPS
                 for key, sev in after.items())
        if ok:
            accepted.append(order)
            sim_pos, sim_cash, before = new_pos, new_cash, after
    return accepted

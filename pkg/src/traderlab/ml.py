"""Windowed datasets, uniform-bin target discretization and a seeded
from-scratch random-forest classifier.

The forest uses the classic defaults: bootstrap samples of full size, Gini
impurity, ceil(sqrt(n_features)) candidate features per split, trees grown
until pure or below two samples.  All randomness is drawn up front from a
seeded generator, so training is fully deterministic (per-tree seed =
master_seed XOR tree_index) and identical with or without numba.

The discretized target is the raw future close binned over the training
range, not a return.  That mirrors the pipeline this replicates and is
statistically weak: a trending series pushes future closes out of the
training range, where they clip into the edge bins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DegenerateRange,
    DimensionMismatch,
    EmptyDataset,
    SeriesTooShort,
)
from .market_data import BarSeries

BAR_FIELDS = ("open", "high", "low", "close", "volume")


def derive_seed(master: int, index: int) -> int:
    """Stable child seed for the index-th model trained under one master seed."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


@dataclass
class Dataset:
    X: np.ndarray  # (examples, time_frame * len(BAR_FIELDS))
    y: np.ndarray  # raw target values
    feature_names: list[str]


def bars_to_dataset(series: BarSeries, target_field: str = "close",
                    time_frame: int = 10, horizon: int = 1) -> Dataset:
    """Sliding-window dataset: example i holds the OHLCV fields of bars
    [i, i+time_frame) flattened bar-major; its target is ``target_field``
    of bar i+time_frame+horizon-1.  Timestamps are excluded from features.
    """
    if target_field not in BAR_FIELDS:
        raise ValueError(f"unknown target field {target_field!r}")
    if time_frame < 1 or horizon < 1:
        raise ValueError("time_frame and horizon must be >= 1")
    n = len(series)
    n_examples = n - time_frame - horizon + 1
    if n_examples < 1:
        raise SeriesTooShort(
            f"{series.asset}: need >= {time_frame + horizon} bars, got {n}")
    cols = np.column_stack([getattr(series, f) for f in BAR_FIELDS])
    X = np.empty((n_examples, time_frame * len(BAR_FIELDS)))
    for i in range(n_examples):
        X[i] = cols[i:i + time_frame].ravel()
    target_col = getattr(series, target_field)
    y = target_col[time_frame + horizon - 1:time_frame + horizon - 1 + n_examples].copy()
    names = [f"{f}_{j}" for j in range(time_frame) for f in BAR_FIELDS]
    return Dataset(X, y, names)


def window_features(series: BarSeries, time_frame: int = 10) -> np.ndarray:
    """Feature row for prediction: the last ``time_frame`` bars flattened
    the same way bars_to_dataset flattens training windows."""
    n = len(series)
    if n < time_frame:
        raise SeriesTooShort(f"{series.asset}: need >= {time_frame} bars, got {n}")
    cols = np.column_stack([getattr(series, f) for f in BAR_FIELDS])
    return cols[n - time_frame:].ravel()


@dataclass(frozen=True)
class Discretizer:
    """Uniform-width ordinal binning fitted on a training vector."""

    n_bins: int
    edges: np.ndarray  # n_bins + 1 ascending cut points

    def transform(self, values) -> np.ndarray:
        """Bin indices in 0..n_bins-1; values at/above the top edge map to
        the last bin, values at/below the bottom edge to bin 0."""
        v = np.asarray(values, dtype=np.float64)
        return np.searchsorted(self.edges[1:-1], v, side="right").astype(np.int64)


def fit_discretizer(values, n_bins: int = 3) -> Discretizer:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DegenerateRange("cannot fit a discretizer on an empty vector")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    lo = float(np.min(v))
    hi = float(np.max(v))
    if hi <= lo:
        raise DegenerateRange("all values identical; uniform bins undefined")
    return Discretizer(n_bins, np.linspace(lo, hi, n_bins + 1))


@dataclass
class ForestModel:
    """Packed forest: per-tree node arrays concatenated, offsets marking
    tree boundaries, child ids local to each tree."""

    n_classes: int
    n_estimators: int
    seed: int
    n_features: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf: np.ndarray
    offsets: np.ndarray


def rf_train(X, y, n_estimators: int = 10, seed: int = 0,
             n_classes: int | None = None) -> ForestModel:
    """Train a forest of ``n_estimators`` trees; deterministic given seed."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    n, d = X.shape
    if n < 2:
        raise EmptyDataset(f"need at least 2 examples, got {n}")
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    if np.any(y < 0):
        raise ValueError("classes must be non-negative integers")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    elif np.any(y >= n_classes):
        raise ValueError("label outside 0..n_classes-1")
    k = int(np.ceil(np.sqrt(d)))
    cap = 2 * n + 1

    parts = []
    offsets = [0]
    for t in range(n_estimators):
        rng = np.random.default_rng(seed ^ t)
        boot = rng.integers(0, n, size=n).astype(np.int64)
        cand = rng.permuted(np.tile(np.arange(d, dtype=np.int64), (cap, 1)),
                            axis=1)[:, :k]
        cand = np.ascontiguousarray(cand)
        feature = np.empty(cap, np.int64)
        threshold = np.empty(cap, np.float64)
        left = np.empty(cap, np.int64)
        right = np.empty(cap, np.int64)
        leaf = np.empty(cap, np.int64)
        n_nodes = kernels.grow_tree(X, y, n_classes, boot, cand,
                                    feature, threshold, left, right, leaf)
        parts.append((feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
                      right[:n_nodes], leaf[:n_nodes]))
        offsets.append(offsets[-1] + n_nodes)

    return ForestModel(
        n_classes=n_classes,
        n_estimators=n_estimators,
        seed=seed,
        n_features=d,
        feature=np.concatenate([p[0] for p in parts]),
        threshold=np.concatenate([p[1] for p in parts]),
        left=np.concatenate([p[2] for p in parts]),
        right=np.concatenate([p[3] for p in parts]),
        leaf=np.concatenate([p[4] for p in parts]),
        offsets=np.asarray(offsets, dtype=np.int64),
    )


def rf_predict_many(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got {X.shape[1]}")
    return kernels.forest_predict(X, model.feature, model.threshold,
                                  model.left, model.right, model.leaf,
                                  model.offsets, model.n_classes)


def rf_predict(model: ForestModel, x) -> int:
    """Majority-vote class for a single feature row; ties break low."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("rf_predict takes a single feature row")
    return int(rf_predict_many(model, x[None, :])[0])


def forest_to_json(model: ForestModel) -> dict:
    """Inspectable dump: one object per tree with its node arrays."""
    trees = []
    for t in range(model.n_estimators):
        a, b = int(model.offsets[t]), int(model.offsets[t + 1])
        trees.append({
            "feature": model.feature[a:b].tolist(),
            "threshold": model.threshold[a:b].tolist(),
            "left": model.left[a:b].tolist(),
            "right": model.right[a:b].tolist(),
            "leaf_class": model.leaf[a:b].tolist(),
        })
    return {
        "n_classes": model.n_classes,
        "n_estimators": model.n_estimators,
        "seed": model.seed,
        "n_features": model.n_features,
        "trees": trees,
    }


def save_forest_json(model: ForestModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(forest_to_json(model), indent=2))

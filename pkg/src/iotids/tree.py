"""CART-style binary decision trees.

Classification growth (gini/entropy, optional sample weights, optional
per-node sqrt feature sampling) plus squared-error regression growth with a
caller-supplied leaf-value rule; the regression path backs gradient boosting.

Split policy: candidate thresholds are midpoints between consecutive distinct
sorted values of a feature. The winner maximizes weighted impurity decrease;
ties break to the lowest feature index, then the lowest threshold. A node
splits only if some candidate leaves >= min_samples_leaf rows on each side
and strictly decreases impurity. Prediction routes left when
value <= threshold, and prediction ties resolve to class 0 (normal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .data import DataTable
from .seeding import TREE_STREAM, stream_rng

CRITERIA = ("gini", "entropy")
FEATURE_MODES = ("all", "sqrt")


@dataclass(frozen=True)
class TreeConfig:
    criterion: str = "gini"
    max_depth: Optional[int] = None  # None = unlimited
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: str = "all"
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in CRITERIA + ("squared_error",):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_features not in FEATURE_MODES:
            raise ValueError(f"max_features must be one of {FEATURE_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Leaf:
    class_counts: Optional[tuple[float, float]] = None  # per-class weight totals
    value: Optional[float] = None  # regression leaves only


@dataclass(frozen=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Internal, Leaf]


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    config: TreeConfig
    n_features: int


def impurity(class_counts, criterion: str) -> float:
    """Node impurity from a (count_class0, count_class1) pair."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    w0, w1 = float(class_counts[0]), float(class_counts[1])
    total = w0 + w1
    if total <= 0:
        raise ValueError("impurity of an empty node")
    p0, p1 = w0 / total, w1 / total
    if criterion == "gini":
        return 1.0 - p0 * p0 - p1 * p1
    out = 0.0
    for p in (p0, p1):
        if p > 0.0:
            out -= p * math.log2(p)
    return out


def _impurity_arrays(w0, w1, criterion):
    total = w0 + w1
    # boosting can underflow sample weights to exactly zero, so a candidate
    # side may carry no weight; its impurity is multiplied by ~0 upstream,
    # so any finite value works, and dead lanes must not divide by zero
    live = total > 0.0
    p0 = np.divide(w0, total, out=np.zeros_like(total), where=live)
    p1 = np.divide(w1, total, out=np.zeros_like(total), where=live)
    if criterion == "gini":
        return 1.0 - p0 * p0 - p1 * p1
    out = np.zeros_like(p0)
    for p in (p0, p1):
        mask = p > 0.0
        out[mask] -= p[mask] * np.log2(p[mask])
    return out


def _boundary_positions(sorted_values, n, min_samples_leaf):
    # candidate i splits between sorted positions i and i+1
    pos = np.flatnonzero(sorted_values[1:] > sorted_values[:-1])
    if min_samples_leaf > 1:
        pos = pos[(pos + 1 >= min_samples_leaf) & (n - pos - 1 >= min_samples_leaf)]
    return pos


def _best_classification_split(X, y, weights, idx, feature_ids, criterion, min_samples_leaf):
    n = idx.size
    y_node = y[idx]
    w_node = None if weights is None else weights[idx]
    if w_node is None:
        total_w1 = float(y_node.sum())
        total_w = float(n)
    else:
        total_w1 = float((w_node * y_node).sum())
        total_w = float(w_node.sum())
    parent = impurity((total_w - total_w1, total_w1), criterion)
    best = None  # (decrease, feature, threshold)
    for f in feature_ids:
        column = X[idx, f]
        order = np.argsort(column)
        xs = column[order]
        pos = _boundary_positions(xs, n, min_samples_leaf)
        if pos.size == 0:
            continue
        ys = y_node[order]
        if w_node is None:
            left_w1 = np.cumsum(ys)[pos].astype(np.float64)
            left_w = (pos + 1).astype(np.float64)
        else:
            ws = w_node[order]
            left_w1 = np.cumsum(ws * ys)[pos]
            left_w = np.cumsum(ws)[pos]
        left_w0 = left_w - left_w1
        right_w1 = total_w1 - left_w1
        right_w0 = (total_w - total_w1) - left_w0
        children = (
            left_w * _impurity_arrays(left_w0, left_w1, criterion)
            + (total_w - left_w) * _impurity_arrays(right_w0, right_w1, criterion)
        ) / total_w
        decrease = parent - children
        # degenerate candidates must never win the argmax or the gain test
        decrease[~np.isfinite(decrease)] = -np.inf
        j = int(np.argmax(decrease))
        if best is None or decrease[j] > best[0]:
            threshold = float(xs[pos[j]] / 2.0 + xs[pos[j] + 1] / 2.0)
            best = (float(decrease[j]), int(f), threshold)
    if best is None or best[0] <= 0.0:
        return None
    return best[1], best[2], best[0]


def _best_regression_split(X, targets, idx, feature_ids, min_samples_leaf):
    n = idx.size
    t_node = targets[idx]
    total_s = float(t_node.sum())
    total_s2 = float((t_node * t_node).sum())
    parent_sse = total_s2 - total_s * total_s / n
    best = None
    for f in feature_ids:
        column = X[idx, f]
        order = np.argsort(column)
        xs = column[order]
        pos = _boundary_positions(xs, n, min_samples_leaf)
        if pos.size == 0:
            continue
        ts = t_node[order]
        left_n = (pos + 1).astype(np.float64)
        left_s = np.cumsum(ts)[pos]
        left_s2 = np.cumsum(ts * ts)[pos]
        sse = (left_s2 - left_s * left_s / left_n) + (
            (total_s2 - left_s2) - (total_s - left_s) ** 2 / (n - left_n)
        )
        decrease = parent_sse - sse
        j = int(np.argmax(decrease))
        if best is None or decrease[j] > best[0]:
            threshold = float(xs[pos[j]] / 2.0 + xs[pos[j] + 1] / 2.0)
            best = (float(decrease[j]), int(f), threshold)
    if best is None or best[0] <= 0.0:
        return None
    return best[1], best[2], best[0]


def best_split(features, labels, candidate_features, criterion, min_samples_leaf=1, sample_weight=None):
    """Best (feature_index, threshold, impurity_decrease) over the candidates,
    or None when no split yields two valid sides with an impurity decrease."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("best_split on an empty sample set")
    feats = np.sort(np.asarray(list(candidate_features), dtype=np.int64))
    weights = None if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    return _best_classification_split(
        X, y, weights, np.arange(X.shape[0]), feats, criterion, min_samples_leaf
    )


def _candidate_features(n_features, config, rng):
    if n_features == 0:
        return np.empty(0, dtype=np.int64)
    if config.max_features == "sqrt":
        k = max(1, math.isqrt(n_features))
        return np.sort(rng.choice(n_features, size=k, replace=False))
    return np.arange(n_features)


def grow_classification_tree(X, y, config, indices, rng, sample_weight=None) -> DecisionTreeModel:
    """Grow a classifier on the given row indices of a prepared (X, y).

    Ensemble entry point: the caller controls the index set (bootstrap,
    subsample), the RNG stream, and optional per-sample weights.
    """
    if config.criterion not in CRITERIA:
        raise ValueError("classification trees need a gini or entropy criterion")
    if indices.size == 0:
        raise ValueError("cannot fit a tree on an empty table")
    n_features = X.shape[1]

    def grow(idx, depth):
        y_node = y[idx]
        if sample_weight is None:
            w1 = float(y_node.sum())
            w0 = float(idx.size) - w1
        else:
            w_node = sample_weight[idx]
            w1 = float((w_node * y_node).sum())
            w0 = float(w_node.sum()) - w1
        counts = (w0, w1)
        at_depth_limit = config.max_depth is not None and depth >= config.max_depth
        if at_depth_limit or idx.size < config.min_samples_split or w0 == 0.0 or w1 == 0.0:
            return Leaf(class_counts=counts)
        feats = _candidate_features(n_features, config, rng)
        found = _best_classification_split(
            X, y, sample_weight, idx, feats, config.criterion, config.min_samples_leaf
        )
        if found is None:
            return Leaf(class_counts=counts)
        feature, threshold, _ = found
        mask = X[idx, feature] <= threshold
        return Internal(
            feature_index=feature,
            threshold=threshold,
            left=grow(idx[mask], depth + 1),
            right=grow(idx[~mask], depth + 1),
        )

    return DecisionTreeModel(root=grow(indices, 0), config=config, n_features=n_features)


def grow_regression_tree(
    X,
    targets,
    indices,
    max_depth: Optional[int],
    leaf_value: Callable[[np.ndarray], float],
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
) -> DecisionTreeModel:
    """Squared-error regression tree; `leaf_value(row_indices)` sets each leaf."""
    if indices.size == 0:
        raise ValueError("cannot fit a tree on an empty table")
    n_features = X.shape[1]
    feats = np.arange(n_features)

    def grow(idx, depth):
        if (max_depth is not None and depth >= max_depth) or idx.size < min_samples_split:
            return Leaf(value=float(leaf_value(idx)))
        found = _best_regression_split(X, targets, idx, feats, min_samples_leaf)
        if found is None:
            return Leaf(value=float(leaf_value(idx)))
        feature, threshold, _ = found
        mask = X[idx, feature] <= threshold
        return Internal(
            feature_index=feature,
            threshold=threshold,
            left=grow(idx[mask], depth + 1),
            right=grow(idx[~mask], depth + 1),
        )

    config = TreeConfig(
        criterion="squared_error",
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        min_samples_leaf=min_samples_leaf,
    )
    return DecisionTreeModel(root=grow(indices, 0), config=config, n_features=n_features)


def fit_tree(table: DataTable, config: TreeConfig) -> DecisionTreeModel:
    """Fit a classification tree to a table. Deterministic in (table, config)."""
    if table.n_rows == 0:
        raise ValueError("cannot fit a tree on an empty table")
    X = np.asfortranarray(table.features)
    rng = stream_rng(config.seed, TREE_STREAM, 0)
    return grow_classification_tree(X, table.labels, config, np.arange(table.n_rows), rng)


def _check_row(model: DecisionTreeModel, row) -> np.ndarray:
    arr = np.asarray(row, dtype=np.float64)
    if arr.shape != (model.n_features,):
        raise ValueError(f"row has {arr.size} values, model expects {model.n_features}")
    return arr


def _leaf_proba(leaf: Leaf) -> tuple[float, float]:
    w0, w1 = leaf.class_counts
    total = w0 + w1
    return w0 / total, w1 / total


def predict_proba_tree(model: DecisionTreeModel, row) -> tuple[float, float]:
    """Class-probability pair from the leaf the row lands in."""
    arr = _check_row(model, row)
    node = model.root
    while isinstance(node, Internal):
        node = node.left if arr[node.feature_index] <= node.threshold else node.right
    if node.class_counts is None:
        raise ValueError("regression tree has no class probabilities")
    return _leaf_proba(node)


def predict_tree(model: DecisionTreeModel, row) -> int:
    p0, p1 = predict_proba_tree(model, row)
    return 1 if p1 > p0 else 0


def tree_proba_batch(model: DecisionTreeModel, X) -> np.ndarray:
    """(n, 2) class probabilities for a matrix of rows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) matrix, got {X.shape}")
    out = np.empty((X.shape[0], 2))

    def assign(node, idx):
        if isinstance(node, Leaf):
            out[idx] = _leaf_proba(node)
            return
        mask = X[idx, node.feature_index] <= node.threshold
        assign(node.left, idx[mask])
        assign(node.right, idx[~mask])

    assign(model.root, np.arange(X.shape[0]))
    return out


def tree_value_batch(model: DecisionTreeModel, X) -> np.ndarray:
    """(n,) regression leaf values for a matrix of rows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) matrix, got {X.shape}")
    out = np.empty(X.shape[0])

    def assign(node, idx):
        if isinstance(node, Leaf):
            out[idx] = node.value
            return
        mask = X[idx, node.feature_index] <= node.threshold
        assign(node.left, idx[mask])
        assign(node.right, idx[~mask])

    assign(model.root, np.arange(X.shape[0]))
    return out


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))

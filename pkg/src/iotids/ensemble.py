"""Tree ensembles: random forest, gradient boosting, AdaBoost (SAMME.R).

All three share the tree module's growers and a common EnsembleModel record.
Fits are deterministic for identical (table, config): each member draws from
its own RNG stream keyed by (seed, member index), so forest training gives
bit-identical models at any worker count.

Scoring conventions, all emitting a (class 0, class 1) probability pair:
  forest          mean of member leaf distributions (soft vote)
  gradient_boost  sigmoid(F0 + learning_rate * sum of member values)
  adaboost        sigmoid(2 * sum of half-log-odds member contributions)
Predicted class is 1 only when the class-1 score strictly exceeds 0.5, so
exact ties resolve to class 0 (normal traffic).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DataTable
from .seeding import BOOST_STREAM, TREE_STREAM, stream_rng
from .tree import (
    DecisionTreeModel,
    Leaf,
    TreeConfig,
    grow_classification_tree,
    grow_regression_tree,
    tree_proba_batch,
    tree_value_batch,
)

ENSEMBLE_KINDS = ("forest", "gradient_boost", "adaboost")

# SAMME.R guard: leaf probabilities are clipped here before taking logs,
# and the gradient-boost Newton denominator is floored, so pure leaves
# cannot produce infinite contributions.
PROBA_CLIP = 1e-10
HESSIAN_FLOOR = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    tree: TreeConfig = field(default_factory=TreeConfig)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class GradientBoostConfig:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        # zero is allowed: it freezes the prior, a documented degenerate case
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class AdaBoostConfig:
    n_estimators: int = 50
    learning_rate: float = 1.0
    base_depth: int = 1
    variant: str = "SAMME_R"
    seed: int = 0

    def __post_init__(self):
        if self.variant != "SAMME_R":
            raise ValueError(f"unsupported variant {self.variant!r}")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.base_depth < 1:
            raise ValueError("base_depth must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class EnsembleModel:
    kind: str
    members: tuple[DecisionTreeModel, ...]
    n_features: int
    baseline_score: float = 0.0  # gradient boosting F0; unused otherwise
    learning_rate: float = 1.0  # gradient boosting shrinkage at predict time

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _require_two_classes(table: DataTable, what: str):
    n0, n1 = table.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError(f"{what} requires both classes in the training table")


def fit_forest(table: DataTable, config: ForestConfig, workers: int = 1) -> EnsembleModel:
    """Bagged forest: per member, an optional bootstrap resample (n draws with
    replacement) then a tree grown per config.tree. Member t draws everything
    from the stream keyed (config.seed, t); config.tree.seed is ignored."""
    if table.n_rows == 0:
        raise ValueError("cannot fit a forest on an empty table")
    if config.tree.criterion not in ("gini", "entropy"):
        raise ValueError("forest members need a gini or entropy criterion")
    X = np.asfortranarray(table.features)
    y = table.labels
    n = table.n_rows

    def build(t: int) -> DecisionTreeModel:
        rng = stream_rng(config.seed, TREE_STREAM, t)
        if config.bootstrap:
            indices = rng.integers(0, n, size=n)
        else:
            indices = np.arange(n)
        return grow_classification_tree(X, y, config.tree, indices, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            members = tuple(pool.map(build, range(config.n_estimators)))
    else:
        members = tuple(build(t) for t in range(config.n_estimators))
    return EnsembleModel(kind="forest", members=members, n_features=table.n_features)


def fit_gradient_boost(table: DataTable, config: GradientBoostConfig) -> EnsembleModel:
    """Binary logistic gradient boosting.

    F0 = log(p1/p0) over the training labels; each round fits a squared-error
    regression tree to the residuals y - sigmoid(F) on a without-replacement
    row subsample, sets leaves by a guarded Newton step, and advances
    F += learning_rate * tree(x) on every training row.
    """
    if table.n_rows == 0:
        raise ValueError("cannot fit on an empty table")
    _require_two_classes(table, "gradient boosting")
    X = np.asfortranarray(table.features)
    y = table.labels.astype(np.float64)
    n = table.n_rows
    p1 = float(y.mean())
    f0 = math.log(p1 / (1.0 - p1))
    scores = np.full(n, f0)
    sub_size = max(1, int(math.floor(config.subsample * n)))
    members = []
    for m in range(config.n_estimators):
        prob = _sigmoid(scores)
        residual = y - prob
        hessian = prob * (1.0 - prob)
        if sub_size < n:
            rng = stream_rng(config.seed, BOOST_STREAM, m)
            indices = rng.choice(n, size=sub_size, replace=False)
        else:
            indices = np.arange(n)

        def newton_step(leaf_rows: np.ndarray) -> float:
            return float(residual[leaf_rows].sum() / max(hessian[leaf_rows].sum(), HESSIAN_FLOOR))

        tree = grow_regression_tree(X, residual, indices, config.max_depth, newton_step)
        members.append(tree)
        scores = scores + config.learning_rate * tree_value_batch(tree, X)
    return EnsembleModel(
        kind="gradient_boost",
        members=tuple(members),
        n_features=table.n_features,
        baseline_score=f0,
        learning_rate=config.learning_rate,
    )


def _half_log_odds(tree: DecisionTreeModel, X: np.ndarray) -> np.ndarray:
    # clip both columns before the logs so opposing pure leaves cancel exactly
    proba = np.clip(tree_proba_batch(tree, X), PROBA_CLIP, 1.0 - PROBA_CLIP)
    return 0.5 * (np.log(proba[:, 1]) - np.log(proba[:, 0]))


def fit_adaboost(table: DataTable, config: AdaBoostConfig) -> EnsembleModel:
    """SAMME.R boosting of weighted depth-base_depth trees.

    Sample weights start uniform and stay normalized; round m fits a weighted
    tree, forms its half-log-odds contribution, and reweights by
    exp(-learning_rate * y_pm * h_m) with y_pm in {-1, +1}. A round whose
    tree degenerates to a single leaf stops the loop without being kept.
    """
    if table.n_rows == 0:
        raise ValueError("cannot fit on an empty table")
    _require_two_classes(table, "adaboost")
    X = np.asfortranarray(table.features)
    y = table.labels
    n = table.n_rows
    y_pm = y.astype(np.float64) * 2.0 - 1.0
    weights = np.full(n, 1.0 / n)
    base = TreeConfig(criterion="gini", max_depth=config.base_depth)
    all_rows = np.arange(n)
    members = []
    for m in range(config.n_estimators):
        rng = stream_rng(config.seed, TREE_STREAM, m)
        tree = grow_classification_tree(X, y, base, all_rows, rng, sample_weight=weights)
        if isinstance(tree.root, Leaf):
            break
        members.append(tree)
        contribution = _half_log_odds(tree, X)
        weights = weights * np.exp(-config.learning_rate * y_pm * contribution)
        weights = weights / weights.sum()
    return EnsembleModel(kind="adaboost", members=tuple(members), n_features=table.n_features)


def _check_matrix(model: EnsembleModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) matrix, got {X.shape}")
    return X


def ensemble_score_batch(model: EnsembleModel, X) -> np.ndarray:
    """(n, 2) class-probability pairs under the model kind's scoring rule."""
    X = _check_matrix(model, X)
    n = X.shape[0]
    if model.kind == "forest":
        total = np.zeros((n, 2))
        for tree in model.members:
            total += tree_proba_batch(tree, X)
        total /= len(model.members)
        return total
    if model.kind == "gradient_boost":
        raw = np.full(n, model.baseline_score)
        for tree in model.members:
            raw += model.learning_rate * tree_value_batch(tree, X)
    else:
        raw = np.zeros(n)
        for tree in model.members:
            raw += _half_log_odds(tree, X)
        raw *= 2.0
    score1 = _sigmoid(raw)
    return np.column_stack([1.0 - score1, score1])


def _score_row(model: EnsembleModel, row) -> tuple[float, float]:
    arr = np.asarray(row, dtype=np.float64)
    if arr.shape != (model.n_features,):
        raise ValueError(f"row has {arr.size} values, model expects {model.n_features}")
    pair = ensemble_score_batch(model, arr.reshape(1, -1))[0]
    return float(pair[0]), float(pair[1])


def forest_predict_score(model: EnsembleModel, row) -> tuple[float, float]:
    if model.kind != "forest":
        raise ValueError(f"expected a forest model, got {model.kind!r}")
    return _score_row(model, row)


def gradient_boost_predict_score(model: EnsembleModel, row) -> tuple[float, float]:
    if model.kind != "gradient_boost":
        raise ValueError(f"expected a gradient_boost model, got {model.kind!r}")
    return _score_row(model, row)


def adaboost_predict_score(model: EnsembleModel, row) -> tuple[float, float]:
    if model.kind != "adaboost":
        raise ValueError(f"expected an adaboost model, got {model.kind!r}")
    return _score_row(model, row)


def ensemble_predict_batch(model: EnsembleModel, X) -> np.ndarray:
    """Predicted class per row: argmax of the score pair, ties to class 0."""
    scores = ensemble_score_batch(model, X)
    return (scores[:, 1] > scores[:, 0]).astype(np.int64)

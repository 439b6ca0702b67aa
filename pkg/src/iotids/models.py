"""Uniform facade over the five classifiers plus a majority-class baseline.

Every model kind fits from a plain hyperparameter dict (JSON-friendly) and
scores through the same TrainedModel record, which is what the selection and
pipeline layers consume. TUNED_PARAMS holds the study's tuned settings per
kind; DEFAULT_GRIDS are small search lattices that contain those winning
values on every axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .data import DataTable
from .ensemble import (
    AdaBoostConfig,
    EnsembleModel,
    ForestConfig,
    GradientBoostConfig,
    ensemble_score_batch,
    fit_adaboost,
    fit_forest,
    fit_gradient_boost,
)
from .knn import KnnConfig, KnnModel, fit_knn, knn_score_batch
from .tree import (
    DecisionTreeModel,
    Internal,
    Leaf,
    TreeConfig,
    fit_tree,
    tree_proba_batch,
)

MODEL_KINDS = (
    "decision_tree",
    "random_forest",
    "knn",
    "gradient_boost",
    "adaboost",
    "majority",
)

MODEL_FILE_SCHEMA_VERSION = 1

# The tuned settings each model runs with when no explicit parameters or
# grid are supplied.
TUNED_PARAMS: dict[str, dict[str, Any]] = {
    "decision_tree": {
        "criterion": "entropy",
        "max_depth": 30,
        "min_samples_leaf": 5,
        "min_samples_split": 10,
        "max_features": "sqrt",
    },
    "random_forest": {
        "criterion": "gini",
        "max_depth": 8,
        "max_features": "sqrt",
        "n_estimators": 200,
        "bootstrap": True,
    },
    "knn": {
        "k": 5,
        "weighting": "distance",
        "metric": "manhattan",
        "p": 1,
    },
    "gradient_boost": {
        "learning_rate": 0.01,
        "max_depth": 4,
        "n_estimators": 500,
        "subsample": 0.8,
    },
    "adaboost": {
        "variant": "SAMME_R",
        "learning_rate": 0.1,
        "n_estimators": 100,
        "base_depth": 1,
    },
    "majority": {},
}

# Axis declaration order is the grid iteration order.
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "decision_tree": {
        "criterion": ["gini", "entropy"],
        "max_depth": [10, 30],
        "min_samples_leaf": [1, 5],
        "min_samples_split": [2, 10],
        "max_features": ["sqrt"],
    },
    "random_forest": {
        "n_estimators": [100, 200, 300],
        "max_depth": [4, 8, 16],
        "criterion": ["gini"],
        "max_features": ["sqrt"],
    },
    "knn": {
        "k": [3, 5, 7],
        "weighting": ["uniform", "distance"],
        "metric": ["manhattan"],
        "p": [1],
    },
    "gradient_boost": {
        "learning_rate": [0.01, 0.1],
        "max_depth": [2, 4],
        "n_estimators": [100, 500],
        "subsample": [0.8],
    },
    "adaboost": {
        "learning_rate": [0.1, 1.0],
        "n_estimators": [50, 100],
        "base_depth": [1],
    },
}

_PARAM_KEYS = {kind: frozenset(TUNED_PARAMS[kind]) for kind in MODEL_KINDS}
_PARAM_KEYS["decision_tree"] |= frozenset(["min_samples_leaf", "min_samples_split"])
_PARAM_KEYS["random_forest"] |= frozenset(["min_samples_leaf", "min_samples_split"])


@dataclass(frozen=True)
class MajorityModel:
    """Baseline that always predicts the training majority class."""

    class_counts: tuple[int, int]
    n_features: int


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    params: dict
    inner: Any


def known_param_keys(kind: str) -> frozenset:
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return _PARAM_KEYS[kind]


def resolve_params(kind: str, params: Optional[dict]) -> dict:
    """Tuned defaults overlaid with the caller's overrides; rejects unknown keys."""
    allowed = known_param_keys(kind)
    overrides = dict(params or {})
    unknown = sorted(set(overrides) - allowed)
    if unknown:
        raise ValueError(f"unknown {kind} parameter(s): {', '.join(unknown)}")
    return {**TUNED_PARAMS[kind], **overrides}


def _tree_config(params: dict, seed: int) -> TreeConfig:
    return TreeConfig(
        criterion=params["criterion"],
        max_depth=params["max_depth"],
        min_samples_split=params.get("min_samples_split", 2),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        max_features=params["max_features"],
        seed=seed,
    )


def fit_model(
    kind: str,
    table: DataTable,
    params: Optional[dict] = None,
    seed: int = 0,
    workers: int = 1,
) -> TrainedModel:
    """Fit one model kind from a hyperparameter dict. Deterministic in
    (kind, table, params, seed) at any worker count."""
    resolved = resolve_params(kind, params)
    if kind == "decision_tree":
        inner: Any = fit_tree(table, _tree_config(resolved, seed))
    elif kind == "random_forest":
        config = ForestConfig(
            n_estimators=resolved["n_estimators"],
            tree=_tree_config(resolved, seed),
            bootstrap=resolved["bootstrap"],
            seed=seed,
        )
        inner = fit_forest(table, config, workers=workers)
    elif kind == "knn":
        config = KnnConfig(
            k=resolved["k"],
            weighting=resolved["weighting"],
            metric=resolved["metric"],
            p=float(resolved["p"]),
        )
        inner = fit_knn(table, config)
    elif kind == "gradient_boost":
        config = GradientBoostConfig(
            n_estimators=resolved["n_estimators"],
            learning_rate=resolved["learning_rate"],
            max_depth=resolved["max_depth"],
            subsample=resolved["subsample"],
            seed=seed,
        )
        inner = fit_gradient_boost(table, config)
    elif kind == "adaboost":
        config = AdaBoostConfig(
            n_estimators=resolved["n_estimators"],
            learning_rate=resolved["learning_rate"],
            base_depth=resolved["base_depth"],
            variant=resolved["variant"],
            seed=seed,
        )
        inner = fit_adaboost(table, config)
    else:
        if table.n_rows == 0:
            raise ValueError("cannot fit on an empty table")
        n0, n1 = table.class_counts()
        inner = MajorityModel(class_counts=(n0, n1), n_features=table.n_features)
    return TrainedModel(kind=kind, params=resolved, inner=inner)


def score_model(model: TrainedModel, X, workers: int = 1) -> np.ndarray:
    """(n, 2) class-score pairs under the model's own scoring rule."""
    if model.kind == "decision_tree":
        return tree_proba_batch(model.inner, X)
    if model.kind == "knn":
        return knn_score_batch(model.inner, X, workers=workers)
    if model.kind == "majority":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != model.inner.n_features:
            raise ValueError(f"expected (n, {model.inner.n_features}) matrix, got {X.shape}")
        n0, n1 = model.inner.class_counts
        pair = (n0 / (n0 + n1), n1 / (n0 + n1))
        return np.tile(pair, (X.shape[0], 1))
    return ensemble_score_batch(model.inner, X)


def predict_model(model: TrainedModel, X, workers: int = 1) -> np.ndarray:
    """Predicted classes: argmax of the score pair, ties to class 0."""
    scores = score_model(model, X, workers=workers)
    return (scores[:, 1] > scores[:, 0]).astype(np.int64)


def _node_to_dict(node) -> dict:
    if isinstance(node, Leaf):
        if node.class_counts is not None:
            return {"counts": [node.class_counts[0], node.class_counts[1]]}
        return {"value": node.value}
    return {
        "feature": node.feature_index,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(payload: dict):
    if "feature" in payload:
        return Internal(
            feature_index=int(payload["feature"]),
            threshold=float(payload["threshold"]),
            left=_node_from_dict(payload["left"]),
            right=_node_from_dict(payload["right"]),
        )
    if "counts" in payload:
        counts = payload["counts"]
        return Leaf(class_counts=(float(counts[0]), float(counts[1])))
    return Leaf(value=float(payload["value"]))


def _tree_to_dict(tree: DecisionTreeModel) -> dict:
    config = tree.config
    return {
        "config": {
            "criterion": config.criterion,
            "max_depth": config.max_depth,
            "min_samples_split": config.min_samples_split,
            "min_samples_leaf": config.min_samples_leaf,
            "max_features": config.max_features,
            "seed": config.seed,
        },
        "n_features": tree.n_features,
        "root": _node_to_dict(tree.root),
    }


def _tree_from_dict(payload: dict) -> DecisionTreeModel:
    return DecisionTreeModel(
        root=_node_from_dict(payload["root"]),
        config=TreeConfig(**payload["config"]),
        n_features=int(payload["n_features"]),
    )


def encode_model(model: TrainedModel) -> dict:
    """Versioned JSON-ready encoding of a fitted model."""
    kind = model.kind
    if kind == "decision_tree":
        payload = _tree_to_dict(model.inner)
    elif kind == "knn":
        table = model.inner.table
        payload = {
            "config": {
                "k": model.inner.config.k,
                "weighting": model.inner.config.weighting,
                "metric": model.inner.config.metric,
                "p": model.inner.config.p,
            },
            "table": {
                "feature_names": list(table.feature_names),
                "features": table.features.tolist(),
                "labels": table.labels.tolist(),
            },
        }
    elif kind == "majority":
        payload = {
            "class_counts": list(model.inner.class_counts),
            "n_features": model.inner.n_features,
        }
    else:
        inner: EnsembleModel = model.inner
        payload = {
            "ensemble_kind": inner.kind,
            "n_features": inner.n_features,
            "baseline_score": inner.baseline_score,
            "learning_rate": inner.learning_rate,
            "members": [_tree_to_dict(tree) for tree in inner.members],
        }
    return {
        "schema_version": MODEL_FILE_SCHEMA_VERSION,
        "kind": kind,
        "params": dict(model.params),
        "model": payload,
    }


def decode_model(document: dict) -> TrainedModel:
    """Inverse of encode_model; validates the schema version and kind."""
    version = document.get("schema_version")
    if version != MODEL_FILE_SCHEMA_VERSION:
        raise ValueError(f"unsupported model file schema_version {version!r}")
    kind = document.get("kind")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    payload = document["model"]
    if kind == "decision_tree":
        inner: Any = _tree_from_dict(payload)
    elif kind == "knn":
        table = DataTable(
            feature_names=list(payload["table"]["feature_names"]),
            features=np.asarray(payload["table"]["features"], dtype=np.float64).reshape(
                len(payload["table"]["labels"]), len(payload["table"]["feature_names"])
            ),
            labels=np.asarray(payload["table"]["labels"], dtype=np.int64),
        )
        inner = KnnModel(table=table, config=KnnConfig(**payload["config"]))
    elif kind == "majority":
        counts = payload["class_counts"]
        inner = MajorityModel(
            class_counts=(int(counts[0]), int(counts[1])),
            n_features=int(payload["n_features"]),
        )
    else:
        inner = EnsembleModel(
            kind=payload["ensemble_kind"],
            members=tuple(_tree_from_dict(t) for t in payload["members"]),
            n_features=int(payload["n_features"]),
            baseline_score=float(payload["baseline_score"]),
            learning_rate=float(payload["learning_rate"]),
        )
    return TrainedModel(kind=kind, params=dict(document.get("params", {})), inner=inner)

"""Weighted k-nearest-neighbor classification over a stored training table.

Neighbor search is an exact full scan; there is no approximate index.
Ties at the k-th distance are broken by lowest training-row index, so
predictions are deterministic for a fixed row order. Under distance
weighting, zero-distance neighbors dominate: the score becomes the class
frequency among the exact matches alone.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import DataTable

WEIGHTINGS = ("uniform", "distance")
METRICS = ("manhattan", "minkowski")

_QUERY_CHUNK = 32
_TRAIN_BLOCK = 8192


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    weighting: str = "uniform"
    metric: str = "minkowski"
    p: float = 2.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass(frozen=True)
class KnnModel:
    table: DataTable
    config: KnnConfig

    def __post_init__(self):
        if self.table.n_rows == 0:
            raise ValueError("training table is empty")
        if self.config.k > self.table.n_rows:
            raise ValueError(
                f"k={self.config.k} exceeds the {self.table.n_rows} training rows"
            )


def fit_knn(table: DataTable, config: KnnConfig) -> KnnModel:
    """KNN 'training' just validates and stores the table."""
    return KnnModel(table=table, config=config)


def distance(a, b, metric: str, p: float = 2.0) -> float:
    """Minkowski distance (sum |a_i - b_i|^p)^(1/p); manhattan is p = 1."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if metric == "minkowski" and p <= 0:
        raise ValueError("p must be positive")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    if metric == "manhattan" or p == 1:
        return float(diff.sum())
    return float((diff**p).sum() ** (1.0 / p))


def _chunk_distances(train: np.ndarray, queries: np.ndarray, metric: str, p: float) -> np.ndarray:
    """(n_queries, n_train) distances, built block-wise to bound memory."""
    n_q, n_train = queries.shape[0], train.shape[0]
    taxicab = metric == "manhattan" or p == 1
    out = np.empty((n_q, n_train))
    for start in range(0, n_train, _TRAIN_BLOCK):
        block = train[start : start + _TRAIN_BLOCK]
        acc = np.zeros((n_q, block.shape[0]))
        for f in range(train.shape[1]):
            diff = np.abs(queries[:, f, None] - block[None, :, f])
            acc += diff if taxicab else diff**p
        out[:, start : start + block.shape[0]] = acc if taxicab else acc ** (1.0 / p)
    return out


def _select_neighbors(distances: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest rows, nearest first.

    Ties at the k-th distance keep the lowest row indices; the returned
    order is (distance, row index) ascending.
    """
    n = distances.size
    if k >= n:
        chosen = np.arange(n)
    else:
        part = np.argpartition(distances, k - 1)[:k]
        kth = distances[part].max()
        strict = np.flatnonzero(distances < kth)
        tied = np.flatnonzero(distances == kth)
        chosen = np.concatenate([strict, tied[: k - strict.size]])
    return chosen[np.lexsort((chosen, distances[chosen]))]


def _score_from_neighbors(dist: np.ndarray, labels: np.ndarray, weighting: str) -> float:
    """Class-1 score from the selected neighbors' distances and labels."""
    if weighting == "distance":
        exact = dist == 0.0
        if exact.any():
            return float(labels[exact].mean())
        inv = 1.0 / dist
        return float(inv[labels == 1].sum() / inv.sum())
    return float(labels.mean())


def neighbor_indices(model: KnnModel, row) -> list[int]:
    """The k selected training-row indices for one query, nearest first."""
    arr = _check_row(model, row)
    dists = _chunk_distances(
        model.table.features, arr.reshape(1, -1), model.config.metric, model.config.p
    )[0]
    return [int(i) for i in _select_neighbors(dists, model.config.k)]


def _check_row(model: KnnModel, row) -> np.ndarray:
    arr = np.asarray(row, dtype=np.float64)
    if arr.shape != (model.table.n_features,):
        raise ValueError(f"row has {arr.size} values, model expects {model.table.n_features}")
    return arr


def knn_predict_score(model: KnnModel, row) -> tuple[float, float]:
    """(class 0, class 1) score pair for one query row."""
    arr = _check_row(model, row)
    pair = knn_score_batch(model, arr.reshape(1, -1))[0]
    return float(pair[0]), float(pair[1])


def knn_score_batch(model: KnnModel, X, workers: int = 1) -> np.ndarray:
    """(n, 2) score pairs for a query matrix; chunked, worker-count invariant."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.table.n_features:
        raise ValueError(f"expected (n, {model.table.n_features}) matrix, got {X.shape}")
    cfg = model.config
    train = model.table.features
    labels = model.table.labels
    out = np.empty((X.shape[0], 2))

    def run_chunk(start: int):
        queries = X[start : start + _QUERY_CHUNK]
        dists = _chunk_distances(train, queries, cfg.metric, cfg.p)
        for i in range(queries.shape[0]):
            sel = _select_neighbors(dists[i], cfg.k)
            score1 = _score_from_neighbors(dists[i, sel], labels[sel], cfg.weighting)
            out[start + i] = (1.0 - score1, score1)

    starts = range(0, X.shape[0], _QUERY_CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for s in starts:
            run_chunk(s)
    return out


def knn_predict_batch(model: KnnModel, X, workers: int = 1) -> np.ndarray:
    """Predicted class per query row; score ties resolve to class 0."""
    scores = knn_score_batch(model, X, workers=workers)
    return (scores[:, 1] > scores[:, 0]).astype(np.int64)

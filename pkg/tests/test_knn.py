"""K-nearest-neighbor module: distances, neighbor selection, vote weighting."""

import math

import numpy as np
import pytest

from helpers import random_table
from iotids.data import DataTable
from iotids.knn import (
    KnnConfig,
    KnnModel,
    distance,
    fit_knn,
    knn_predict_batch,
    knn_predict_score,
    knn_score_batch,
    neighbor_indices,
)


def _oracle_neighbors(train, query, k, metric, p):
    """Full sort by (distance, row index); first k rows win."""
    dists = np.array([distance(row, query, metric, p) for row in train])
    order = np.lexsort((np.arange(len(train)), dists))
    return list(order[:k]), dists


def _oracle_score(train_labels, dists, picked, weighting):
    picked_d = dists[picked]
    if weighting == "distance" and np.any(picked_d == 0.0):
        exact = [i for i in picked if dists[i] == 0.0]
        votes = np.array([0.0, 0.0])
        for i in exact:
            votes[train_labels[i]] += 1.0
        return tuple(votes / votes.sum())
    votes = np.array([0.0, 0.0])
    for i in picked:
        w = 1.0 if weighting == "uniform" else 1.0 / dists[i]
        votes[train_labels[i]] += w
    return tuple(votes / votes.sum())


# -------------------------------------------------------------- distance


def test_distance_examples():
    assert distance([0.0, 0.0], [3.0, 4.0], "manhattan") == 7.0
    assert distance([0.0, 0.0], [3.0, 4.0], "minkowski", p=2.0) == 5.0
    assert math.isclose(
        distance([0.0, 0.0], [1.0, 1.0], "minkowski", p=3.0), 2.0 ** (1.0 / 3.0), rel_tol=1e-12
    )
    # p=1 minkowski collapses to manhattan
    assert distance([1.0, 5.0], [2.0, 3.0], "minkowski", p=1.0) == distance(
        [1.0, 5.0], [2.0, 3.0], "manhattan"
    )


def test_distance_is_symmetric_and_zero_on_self():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        for metric, p in (("manhattan", 1.0), ("minkowski", 2.0), ("minkowski", 3.0)):
            assert distance(a, b, metric, p) == distance(b, a, metric, p)
            assert distance(a, a, metric, p) == 0.0


def test_distance_validation():
    with pytest.raises(ValueError, match="metric"):
        distance([0.0], [1.0], "cosine")
    with pytest.raises(ValueError, match="length"):
        distance([0.0, 1.0], [1.0], "manhattan")
    with pytest.raises(ValueError, match="p"):
        distance([0.0], [1.0], "minkowski", p=0.0)


# ------------------------------------------------------------- config/fit


def test_config_and_model_validation():
    with pytest.raises(ValueError):
        KnnConfig(k=0)
    with pytest.raises(ValueError):
        KnnConfig(weighting="kernel")
    with pytest.raises(ValueError):
        KnnConfig(metric="hamming")
    with pytest.raises(ValueError):
        KnnConfig(p=-1.0)

    table = DataTable(["f"], np.arange(3, dtype=np.float64).reshape(3, 1), np.array([0, 1, 0]))
    with pytest.raises(ValueError, match="k"):
        fit_knn(table, KnnConfig(k=4))
    empty = DataTable(["f"], np.empty((0, 1)), np.empty(0, dtype=np.int64))
    with pytest.raises(ValueError, match="empty"):
        fit_knn(empty, KnnConfig(k=1))


# ------------------------------------------------------------- prediction


def test_k1_returns_nearest_label():
    table = DataTable(
        ["a", "b"], np.array([[0.0, 0.0], [10.0, 10.0]]), np.array([0, 1])
    )
    model = fit_knn(table, KnnConfig(k=1))
    assert knn_predict_score(model, [1.0, 1.0]) == (1.0, 0.0)
    assert knn_predict_score(model, [9.0, 9.0]) == (0.0, 1.0)


def test_k_equals_n_uniform_gives_class_proportions():
    rng = np.random.default_rng(1)
    table = random_table(rng, 40, 3)
    model = fit_knn(table, KnnConfig(k=40, weighting="uniform"))
    counts = table.class_counts()
    expected = (counts[0] / 40, counts[1] / 40)
    score = knn_predict_score(model, rng.normal(size=3))
    assert math.isclose(score[0], expected[0], abs_tol=1e-12)
    assert math.isclose(score[1], expected[1], abs_tol=1e-12)


def test_distance_weighted_vote_example():
    # distances 0.5, 0.5, 9.5: class-0 mass 2/0.5 dwarfs class-1 mass 1/9.5
    features = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [6.0, 5.0]])
    labels = np.array([0, 0, 1, 1])
    model = fit_knn(
        DataTable(["a", "b"], features, labels),
        KnnConfig(k=3, weighting="distance", metric="manhattan", p=1.0),
    )
    score = knn_predict_score(model, [0.5, 0.0])
    assert score[0] > score[1]
    w0 = 1 / 0.5 + 1 / 0.5
    w1 = 1 / 9.5
    assert math.isclose(score[0], w0 / (w0 + w1), abs_tol=1e-12)
    assert knn_predict_batch(model, [[0.5, 0.0]]).tolist() == [0]


def test_exact_match_overrides_distance_votes():
    # three copies of the query with labels 1,1,0 plus a very close class-0 row:
    # only the zero-distance rows may vote
    features = np.array([[2.0], [2.0], [2.0], [2.000001]])
    labels = np.array([1, 1, 0, 0])
    model = fit_knn(DataTable(["f"], features, labels), KnnConfig(k=4, weighting="distance"))
    score = knn_predict_score(model, [2.0])
    assert math.isclose(score[0], 1.0 / 3.0, abs_tol=1e-12)
    assert math.isclose(score[1], 2.0 / 3.0, abs_tol=1e-12)


def test_kth_distance_tie_prefers_lowest_index():
    # rows 1 and 2 tie at distance 1; k=2 must keep row 1, drop row 2
    features = np.array([[0.0], [1.0], [-1.0], [5.0]])
    labels = np.array([0, 1, 0, 1])
    model = fit_knn(DataTable(["f"], features, labels), KnnConfig(k=2))
    assert neighbor_indices(model, [0.0]) == [0, 1]


def test_neighbor_indices_sorted_by_distance_then_index():
    rng = np.random.default_rng(2)
    table = random_table(rng, 30, 2, discrete=True)
    model = fit_knn(table, KnnConfig(k=7, metric="manhattan", p=1.0))
    for _ in range(10):
        query = rng.integers(0, 4, size=2).astype(float)
        picked = neighbor_indices(model, query)
        dists = np.array([distance(row, query, "manhattan") for row in table.features])
        keys = [(dists[i], i) for i in picked]
        assert keys == sorted(keys)


def test_matches_full_sort_oracle_on_random_tables():
    rng = np.random.default_rng(3)
    for trial in range(40):
        n = int(rng.integers(5, 60))
        d = int(rng.integers(1, 5))
        discrete = trial % 2 == 0  # discrete grids force distance ties
        table = random_table(rng, n, d, discrete=discrete)
        k = int(rng.integers(1, n + 1))
        metric, p = [("minkowski", 2.0), ("manhattan", 1.0), ("minkowski", 3.0)][trial % 3]
        weighting = ("uniform", "distance")[trial % 2]
        model = fit_knn(table, KnnConfig(k=k, weighting=weighting, metric=metric, p=p))
        for _ in range(5):
            if discrete:
                query = rng.integers(0, 4, size=d).astype(float)
            else:
                query = rng.normal(size=d)
            picked, dists = _oracle_neighbors(table.features, query, k, metric, p)
            assert neighbor_indices(model, query) == picked
            expected = _oracle_score(table.labels, dists, picked, weighting)
            got = knn_predict_score(model, query)
            assert math.isclose(got[0], expected[0], abs_tol=1e-9)
            assert math.isclose(got[1], expected[1], abs_tol=1e-9)


def test_batch_matches_single_queries_and_worker_counts():
    rng = np.random.default_rng(4)
    table = random_table(rng, 50, 3)
    model = fit_knn(table, KnnConfig(k=5, weighting="distance"))
    queries = rng.normal(size=(40, 3))  # spans more than one query chunk
    batch = knn_score_batch(model, queries)
    assert batch.shape == (40, 2)
    for row, query in zip(batch, queries):
        single = knn_predict_score(model, query)
        assert math.isclose(row[0], single[0], abs_tol=1e-12)
        assert math.isclose(row[1], single[1], abs_tol=1e-12)
    assert np.array_equal(batch, knn_score_batch(model, queries, workers=3))


def test_predict_batch_breaks_ties_toward_class_0():
    features = np.array([[0.0], [2.0]])
    labels = np.array([0, 1])
    model = fit_knn(DataTable(["f"], features, labels), KnnConfig(k=2, weighting="uniform"))
    assert knn_predict_batch(model, [[1.0]]).tolist() == [0]


def test_query_dimension_mismatch():
    table = DataTable(["a", "b"], np.zeros((3, 2)), np.array([0, 1, 0]))
    model = fit_knn(table, KnnConfig(k=1))
    with pytest.raises(ValueError, match="expects 2"):
        knn_predict_score(model, [0.0])

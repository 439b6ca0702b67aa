"""K-fold cross-validation and exhaustive grid search.

Folds come from a seeded shuffle followed by round-robin assignment
(per class when stratified), so sizes differ by at most one. Grid search
scores every combination by mean cross-validated accuracy (or F1), marks
failed fits instead of aborting, picks the earliest combination attaining
the best mean, and refits the winner on the full table.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import DataTable
from .evaluation import confusion, metrics
from .models import TrainedModel, fit_model, known_param_keys, predict_model
from .seeding import FOLD_STREAM, stream_rng

SELECTION_METRICS = ("accuracy", "f1")


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    seed: int
    stratified: bool
    assignments: np.ndarray  # (n_rows,) fold id per row, in [0, n_folds)

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        arr = np.asarray(self.assignments)
        if arr.size and (arr.min() < 0 or arr.max() >= self.n_folds):
            raise ValueError("fold assignments outside [0, n_folds)")


@dataclass(frozen=True)
class CvResult:
    fold_scores: tuple[float, ...]
    mean: float


@dataclass(frozen=True)
class ParamGrid:
    """Named axes of hyperparameter values for one model kind; iteration is
    lexicographic over the axes in declaration order."""

    kind: str
    axes: tuple[tuple[str, tuple], ...]

    def __post_init__(self):
        if not self.axes:
            raise ValueError("a grid needs at least one axis")
        allowed = known_param_keys(self.kind)
        for name, values in self.axes:
            if name not in allowed:
                raise ValueError(f"unknown {self.kind} parameter {name!r} in grid")
            if len(values) == 0:
                raise ValueError(f"grid axis {name!r} has no values")

    @classmethod
    def from_dict(cls, kind: str, axes: dict) -> "ParamGrid":
        return cls(kind=kind, axes=tuple((k, tuple(v)) for k, v in axes.items()))

    @property
    def n_combinations(self) -> int:
        out = 1
        for _, values in self.axes:
            out *= len(values)
        return out

    def combinations(self) -> list[dict]:
        names = [name for name, _ in self.axes]
        return [
            dict(zip(names, combo))
            for combo in itertools.product(*(values for _, values in self.axes))
        ]


@dataclass(frozen=True)
class GridEntry:
    params: dict
    fold_scores: Optional[tuple[float, ...]]
    mean: Optional[float]
    error: Optional[str]


@dataclass(frozen=True)
class GridSearchResult:
    entries: tuple[GridEntry, ...]
    best_params: dict
    best_mean: float
    best_model: TrainedModel


def make_folds(table: DataTable, n_folds: int, seed: int, stratified: bool = True) -> FoldPlan:
    """Assign each row a fold id by seeded shuffle + round-robin."""
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    rng = stream_rng(seed, FOLD_STREAM)
    assignments = np.empty(table.n_rows, dtype=np.int64)
    if stratified:
        for cls in (0, 1):
            cls_idx = np.flatnonzero(table.labels == cls)
            if cls_idx.size < n_folds:
                raise ValueError(
                    f"class {cls} has {cls_idx.size} rows, fewer than {n_folds} folds"
                )
            perm = cls_idx[rng.permutation(cls_idx.size)]
            assignments[perm] = np.arange(perm.size) % n_folds
    else:
        if table.n_rows < n_folds:
            raise ValueError(f"{table.n_rows} rows is fewer than {n_folds} folds")
        perm = rng.permutation(table.n_rows)
        assignments[perm] = np.arange(table.n_rows) % n_folds
    return FoldPlan(n_folds=n_folds, seed=seed, stratified=stratified, assignments=assignments)


def _fold_score(truth, predictions, metric: str) -> float:
    report = metrics(confusion(truth, predictions))
    return report.accuracy if metric == "accuracy" else report.f1


def cross_validate(
    table: DataTable,
    kind: str,
    params: Optional[dict],
    plan: FoldPlan,
    seed: int = 0,
    metric: str = "accuracy",
    workers: int = 1,
) -> CvResult:
    """Validation score per fold: fit on the other folds, score this one."""
    if metric not in SELECTION_METRICS:
        raise ValueError(f"metric must be one of {SELECTION_METRICS}")
    if plan.assignments.shape != (table.n_rows,):
        raise ValueError("fold plan does not match the table")

    def run_fold(f: int) -> float:
        train = table.subset(np.flatnonzero(plan.assignments != f))
        val = table.subset(np.flatnonzero(plan.assignments == f))
        model = fit_model(kind, train, params, seed=seed)
        return _fold_score(val.labels, predict_model(model, val.features), metric)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = tuple(pool.map(run_fold, range(plan.n_folds)))
    else:
        scores = tuple(run_fold(f) for f in range(plan.n_folds))
    return CvResult(fold_scores=scores, mean=float(np.mean(scores)))


def grid_search(
    table: DataTable,
    grid: ParamGrid,
    plan: FoldPlan,
    seed: int = 0,
    metric: str = "accuracy",
    workers: int = 1,
) -> GridSearchResult:
    """Cross-validate every combination; ties go to the earliest one.

    A combination whose fit raises is recorded with its error message and
    excluded from the argmax; a grid where every combination fails raises.
    The winner is refit on the whole table and returned fitted.
    """
    combos = grid.combinations()

    def evaluate(params: dict) -> GridEntry:
        try:
            result = cross_validate(table, grid.kind, params, plan, seed=seed, metric=metric)
        except ValueError as exc:
            return GridEntry(params=params, fold_scores=None, mean=None, error=str(exc))
        return GridEntry(
            params=params, fold_scores=result.fold_scores, mean=result.mean, error=None
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = tuple(pool.map(evaluate, combos))
    else:
        entries = tuple(evaluate(params) for params in combos)

    best: Optional[GridEntry] = None
    for entry in entries:
        if entry.error is None and (best is None or entry.mean > best.mean):
            best = entry
    if best is None:
        raise ValueError(f"every {grid.kind} grid combination failed to fit")
    return GridSearchResult(
        entries=entries,
        best_params=dict(best.params),
        best_mean=best.mean,
        best_model=fit_model(grid.kind, table, best.params, seed=seed),
    )

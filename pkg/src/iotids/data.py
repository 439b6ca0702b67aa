"""CSV ingestion, seeded train/test splitting and feature scaling.

Datasets are comma-separated, UTF-8, with a header row. One column holds the
binary label (0 = normal traffic, 1 = attack); every other column must parse
as a real number. Cells may be integer or decimal literals with optional
scientific notation; anything else (blanks, inf/nan spellings, underscores)
is rejected with the offending line and column named.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .seeding import SPLIT_STREAM, stream_rng


class DataError(ValueError):
    """Malformed dataset, unresolvable column, or invalid split request."""


SCALER_KINDS = ("none", "min_max", "z_score")

_NUMERIC_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True, eq=False)
class DataTable:
    """Named feature columns, a numeric row-major matrix, and 0/1 labels."""

    feature_names: list[str]
    features: np.ndarray  # (n_rows, n_features) float64
    labels: np.ndarray  # (n_rows,) int64, values in {0, 1}

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n_rows, n_cols = self.features.shape
        if self.labels.shape != (n_rows,):
            raise DataError(f"{self.labels.shape[0]} labels for {n_rows} feature rows")
        if len(self.feature_names) != n_cols:
            raise DataError(f"{len(self.feature_names)} names for {n_cols} feature columns")
        bad = (self.labels != 0) & (self.labels != 1)
        if bad.any():
            raise DataError(f"label at row {int(np.argmax(bad))} is not 0 or 1")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        ones = int(np.count_nonzero(self.labels))
        return self.n_rows - ones, ones

    def subset(self, indices) -> "DataTable":
        """New table holding the given rows (copies; the source is untouched)."""
        idx = np.asarray(indices)
        return DataTable(self.feature_names, self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of a seeded train/test split."""

    test_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")


@dataclass(frozen=True)
class ScalerParams:
    """Per-column (offset, scale) pairs; kind `none` carries no stats."""

    kind: str
    per_column_stats: np.ndarray  # (n_features, 2)

    def __post_init__(self):
        if self.kind not in SCALER_KINDS:
            raise DataError(f"unknown scaler kind {self.kind!r}")


def load_csv(path, label_column: str = "last") -> DataTable:
    """Read a dataset CSV into a DataTable.

    `label_column` names the label column, or "last" for the final column.
    Raises DataError for a missing file, duplicate headers, an unresolvable
    label column, unparseable cells (line and column reported), or labels
    outside {0, 1}.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
    except FileNotFoundError:
        raise DataError(f"dataset file not found: {path}") from None
    if not header:
        raise DataError(f"{path}: empty file, expected a header row")

    dupes = sorted(name for name, count in Counter(header).items() if count > 1)
    if dupes:
        raise DataError(f"{path}: duplicate header names {dupes}")

    if label_column == "last":
        label_name = header[-1]
    elif label_column in header:
        label_name = label_column
    else:
        raise DataError(f"{path}: label column {label_column!r} not in header")

    try:
        frame = pd.read_csv(path, header=0, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from None
    frame.columns = header  # pandas mangles duplicates; we already rejected them

    labels = _parse_label_column(frame[label_name], label_name, path)
    feature_names = [name for name in header if name != label_name]
    if feature_names:
        columns = [_parse_feature_column(frame[name], name, path) for name in feature_names]
        features = np.column_stack(columns)
    else:
        features = np.empty((len(frame), 0))
    return DataTable(feature_names, features, labels)


def _cell_error(path, name, data_row, value):
    # +2: one for the header line, one for 1-based numbering
    return DataError(f"{path}: unparseable value {value!r} at line {data_row + 2}, column {name!r}")


def _parse_feature_column(series: pd.Series, name: str, path) -> np.ndarray:
    if series.dtype == object or series.dtype == bool:
        out = np.empty(len(series), dtype=np.float64)
        for i, cell in enumerate(series.to_numpy()):
            if not (isinstance(cell, str) and _NUMERIC_RE.match(cell)):
                raise _cell_error(path, name, i, cell)
            out[i] = float(cell)
        return out
    values = series.to_numpy(dtype=np.float64)
    finite = np.isfinite(values)
    if not finite.all():
        i = int(np.argmin(finite))
        raise _cell_error(path, name, i, series.iloc[i])
    return values


def _parse_label_column(series: pd.Series, name: str, path) -> np.ndarray:
    values = _parse_feature_column(series, name, path)
    valid = (values == 0.0) | (values == 1.0)
    if not valid.all():
        i = int(np.argmin(valid))
        raise DataError(
            f"{path}: label value {series.iloc[i]!r} at line {i + 2}, "
            f"column {name!r} is outside {{0, 1}}"
        )
    return values.astype(np.int64)


def split_train_test(table: DataTable, spec: SplitSpec) -> tuple[DataTable, DataTable]:
    """Seeded shuffle-and-cut split into (train, test).

    Test size is floor(n * test_fraction); stratified mode cuts per class
    (floor per class, remainder rows stay in train). Both partitions keep the
    source row order. Equal (table, spec) always yields the identical split.
    """
    n = table.n_rows
    if n == 0:
        raise DataError("cannot split an empty table")
    rng = stream_rng(spec.seed, SPLIT_STREAM)
    if spec.stratified:
        zeros, ones = table.class_counts()
        if zeros == 0 or ones == 0:
            raise DataError("stratified split requires both classes present")
        test_parts = []
        train_parts = []
        for cls in (0, 1):
            cls_idx = np.flatnonzero(table.labels == cls)
            perm = cls_idx[rng.permutation(cls_idx.size)]
            cut = math.floor(cls_idx.size * spec.test_fraction)
            test_parts.append(perm[:cut])
            train_parts.append(perm[cut:])
        test_idx = np.sort(np.concatenate(test_parts))
        train_idx = np.sort(np.concatenate(train_parts))
    else:
        perm = rng.permutation(n)
        cut = math.floor(n * spec.test_fraction)
        test_idx = np.sort(perm[:cut])
        train_idx = np.sort(perm[cut:])
    return table.subset(train_idx), table.subset(test_idx)


def fit_scaler(table: DataTable, kind: str) -> ScalerParams:
    """Learn per-column scaling stats: min_max maps observed [min, max] to
    [0, 1]; z_score maps to zero mean, unit variance (population std).
    Constant columns get scale 1, so they map to 0 under either kind."""
    if kind not in SCALER_KINDS:
        raise DataError(f"unknown scaler kind {kind!r}")
    if kind == "none":
        return ScalerParams("none", np.empty((0, 2)))
    if table.n_rows == 0:
        raise DataError("cannot fit a scaler on an empty table")
    if kind == "min_max":
        offsets = table.features.min(axis=0)
        scales = table.features.max(axis=0) - offsets
    else:
        offsets = table.features.mean(axis=0)
        scales = table.features.std(axis=0)  # population (ddof=0)
    scales = np.where(scales > 0, scales, 1.0)
    return ScalerParams(kind, np.column_stack([offsets, scales]))


def apply_scaler(table: DataTable, params: ScalerParams) -> DataTable:
    """Apply fitted scaling; `none` is the identity."""
    if params.kind == "none":
        return table
    if params.per_column_stats.shape[0] != table.n_features:
        raise DataError(
            f"scaler has {params.per_column_stats.shape[0]} columns, "
            f"table has {table.n_features}"
        )
    offsets = params.per_column_stats[:, 0]
    scales = params.per_column_stats[:, 1]
    return DataTable(table.feature_names, (table.features - offsets) / scales, table.labels)

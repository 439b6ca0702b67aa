"""Test utilities: synthetic tables and CSV fixtures."""

import csv

import numpy as np

from iotids.data import DataTable


def make_blobs(n: int, seed: int, spread: float = 0.5) -> DataTable:
    """Two separable 2-D Gaussian blobs, half per class, centers (0,0)/(4,4)."""
    rng = np.random.default_rng(seed)
    half = n // 2
    features = np.vstack(
        [
            rng.normal(0.0, spread, size=(half, 2)),
            rng.normal(4.0, spread, size=(n - half, 2)),
        ]
    )
    labels = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(n - half, dtype=np.int64)])
    order = rng.permutation(n)
    return DataTable(["f0", "f1"], features[order], labels[order])


def random_table(rng: np.random.Generator, n: int, d: int, discrete: bool = False) -> DataTable:
    """Random table; discrete mode draws integer values so ties are common."""
    if discrete:
        features = rng.integers(0, 4, size=(n, d)).astype(np.float64)
    else:
        features = rng.normal(size=(n, d))
    labels = rng.integers(0, 2, size=n)
    return DataTable([f"f{i}" for i in range(d)], features, labels)


def write_table_csv(path, table: DataTable, label_name: str = "label"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table.feature_names) + [label_name])
        for row, label in zip(table.features, table.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)

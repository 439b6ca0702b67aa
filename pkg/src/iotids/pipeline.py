"""Experiment orchestration: load -> split once -> scale -> per model
(optional grid search on the training partition, fit, score the held-out
test partition) -> report artifacts.

Artifacts per run, under the output directory:
  report.json          machine-readable run report (schema_version 1)
  comparison.txt       accuracy-sorted model table
  confusion_<kind>.csv confusion matrix per model
  roc_<kind>.csv       ROC points per model
  roc_<kind>.svg       rendered ROC curve per model

Reports are byte-identical across reruns of the same config at any worker
count, except for the values inside "timings" objects.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .data import (
    SCALER_KINDS,
    DataTable,
    ScalerParams,
    SplitSpec,
    apply_scaler,
    fit_scaler,
    load_csv,
    split_train_test,
)
from .evaluation import RocCurve, confusion, metrics, roc_curve
from .models import (
    DEFAULT_GRIDS,
    MODEL_FILE_SCHEMA_VERSION,
    MODEL_KINDS,
    TrainedModel,
    decode_model,
    encode_model,
    fit_model,
    resolve_params,
    score_model,
)
from .plots import render_roc_svg, summarize_comparison
from .selection import (
    SELECTION_METRICS,
    ParamGrid,
    grid_search,
    make_folds,
)

REPORT_SCHEMA_VERSION = 1

DEFAULT_MODEL_KINDS = (
    "random_forest",
    "decision_tree",
    "knn",
    "gradient_boost",
    "adaboost",
)


class ConfigError(ValueError):
    """Invalid pipeline configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ModelEntry:
    kind: str
    params: Optional[dict] = None  # fixed fit with these overrides
    grid: Optional[dict] = None  # grid-search these axes instead


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str
    models: tuple[ModelEntry, ...]
    label_column: str = "last"
    test_fraction: float = 0.2
    stratified: bool = True
    scaling: str = "none"
    folds: int = 5
    seed: int = 0
    selection_metric: str = "accuracy"
    output: str = "out"


def default_model_entries() -> tuple[ModelEntry, ...]:
    return tuple(ModelEntry(kind=kind) for kind in DEFAULT_MODEL_KINDS)


_TOP_LEVEL_KEYS = {
    "schema_version",
    "dataset",
    "label_column",
    "split",
    "scaling",
    "folds",
    "seed",
    "selection_metric",
    "models",
    "output",
}


def _expect(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _parse_model_entry(raw: Any) -> ModelEntry:
    _expect(isinstance(raw, dict), f"each model entry must be an object, got {raw!r}")
    unknown = sorted(set(raw) - {"kind", "params", "grid"})
    _expect(not unknown, f"unknown model entry key(s): {', '.join(unknown)}")
    kind = raw.get("kind")
    _expect(kind in MODEL_KINDS, f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    params = raw.get("params")
    grid = raw.get("grid")
    _expect(params is None or grid is None, f"{kind}: give params or grid, not both")
    if params is not None:
        _expect(isinstance(params, dict), f"{kind}: params must be an object")
        try:
            resolve_params(kind, params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if grid is not None:
        _expect(isinstance(grid, dict) and grid, f"{kind}: grid must be a non-empty object")
        try:
            ParamGrid.from_dict(kind, {k: list(v) for k, v in grid.items()})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{kind}: {exc}") from None
    return ModelEntry(kind=kind, params=params, grid=grid)


def parse_config(document: Any) -> PipelineConfig:
    """Validate a JSON config document into a PipelineConfig."""
    _expect(isinstance(document, dict), "config root must be a JSON object")
    unknown = sorted(set(document) - _TOP_LEVEL_KEYS)
    _expect(not unknown, f"unknown config key(s): {', '.join(unknown)}")
    version = document.get("schema_version", REPORT_SCHEMA_VERSION)
    _expect(version == REPORT_SCHEMA_VERSION, f"unsupported config schema_version {version!r}")

    dataset = document.get("dataset")
    _expect(isinstance(dataset, str) and dataset, "config needs a 'dataset' path")

    label_column = document.get("label_column", "last")
    _expect(isinstance(label_column, str) and label_column, "label_column must be a name")

    split = document.get("split", {})
    _expect(isinstance(split, dict), "'split' must be an object")
    unknown = sorted(set(split) - {"test_fraction", "stratified"})
    _expect(not unknown, f"unknown split key(s): {', '.join(unknown)}")
    test_fraction = split.get("test_fraction", 0.2)
    _expect(
        isinstance(test_fraction, (int, float)) and 0.0 < test_fraction < 1.0,
        f"test_fraction must be in (0, 1), got {test_fraction!r}",
    )
    stratified = split.get("stratified", True)
    _expect(isinstance(stratified, bool), "split.stratified must be true or false")

    scaling = document.get("scaling", "none")
    _expect(scaling in SCALER_KINDS, f"scaling must be one of {SCALER_KINDS}")

    folds = document.get("folds", 5)
    _expect(isinstance(folds, int) and folds >= 2, "folds must be an integer >= 2")

    seed = document.get("seed", 0)
    _expect(isinstance(seed, int) and seed >= 0, "seed must be a non-negative integer")

    selection_metric = document.get("selection_metric", "accuracy")
    _expect(
        selection_metric in SELECTION_METRICS,
        f"selection_metric must be one of {SELECTION_METRICS}",
    )

    raw_models = document.get("models")
    if raw_models is None:
        entries = default_model_entries()
    else:
        _expect(isinstance(raw_models, list) and raw_models, "'models' must be a non-empty list")
        entries = tuple(_parse_model_entry(raw) for raw in raw_models)

    output = document.get("output", "out")
    _expect(isinstance(output, str) and output, "output must be a directory path")

    return PipelineConfig(
        dataset=dataset,
        models=entries,
        label_column=label_column,
        test_fraction=float(test_fraction),
        stratified=stratified,
        scaling=scaling,
        folds=folds,
        seed=seed,
        selection_metric=selection_metric,
        output=output,
    )


def config_echo(config: PipelineConfig, no_grid: bool) -> dict:
    """The config as recorded in reports (everything that shapes results)."""
    model_list = []
    for entry in config.models:
        record: dict[str, Any] = {"kind": entry.kind}
        if entry.params is not None:
            record["params"] = entry.params
        if entry.grid is not None:
            record["grid"] = entry.grid
        model_list.append(record)
    return {
        "dataset": config.dataset,
        "label_column": config.label_column,
        "split": {"test_fraction": config.test_fraction, "stratified": config.stratified},
        "scaling": config.scaling,
        "folds": config.folds,
        "seed": config.seed,
        "selection_metric": config.selection_metric,
        "models": model_list,
        "no_grid": no_grid,
    }


def filter_models(config: PipelineConfig, names: Optional[list[str]]) -> PipelineConfig:
    """Restrict the configured model entries to the named kinds."""
    if names is None:
        return config
    configured = {entry.kind for entry in config.models}
    for name in names:
        _expect(name in MODEL_KINDS, f"unknown model kind {name!r} in --models")
        _expect(name in configured, f"model {name!r} is not in the configured set")
    entries = tuple(entry for entry in config.models if entry.kind in set(names))
    return PipelineConfig(
        dataset=config.dataset,
        models=entries,
        label_column=config.label_column,
        test_fraction=config.test_fraction,
        stratified=config.stratified,
        scaling=config.scaling,
        folds=config.folds,
        seed=config.seed,
        selection_metric=config.selection_metric,
        output=config.output,
    )


def _load_and_split(config: PipelineConfig) -> tuple[DataTable, DataTable, DataTable, ScalerParams]:
    table = load_csv(config.dataset, config.label_column)
    spec = SplitSpec(config.test_fraction, config.seed, config.stratified)
    train, test = split_train_test(table, spec)
    scaler = fit_scaler(train, config.scaling)
    return table, apply_scaler(train, scaler), apply_scaler(test, scaler), scaler


def _roc_dict(curve) -> dict:
    return {"auc": curve.auc, "points": [[x, y] for x, y in curve.points]}


def _cv_dict(result, folds: int, metric: str) -> dict:
    return {
        "folds": folds,
        "metric": metric,
        "combinations": [
            {
                "params": entry.params,
                "fold_scores": list(entry.fold_scores) if entry.fold_scores else None,
                "mean": entry.mean,
                "error": entry.error,
            }
            for entry in result.entries
        ],
        "best_params": result.best_params,
        "best_mean": result.best_mean,
    }


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8")


def confusion_csv(cm_dict: dict) -> str:
    return (
        ",predicted_normal,predicted_attack\n"
        f"actual_normal,{cm_dict['tn']},{cm_dict['fp']}\n"
        f"actual_attack,{cm_dict['fn']},{cm_dict['tp']}\n"
    )


def roc_points_csv(roc: dict) -> str:
    lines = ["false_positive_rate,true_positive_rate"]
    lines.extend(f"{x!r},{y!r}" for x, y in roc["points"])
    return "\n".join(lines) + "\n"


def _write_model_artifacts(out_dir: Path, kind: str, record: dict):
    _write(out_dir / f"confusion_{kind}.csv", confusion_csv(record["confusion"]))
    _write(out_dir / f"roc_{kind}.csv", roc_points_csv(record["roc"]))
    curve = roc_curve_from_dict(record["roc"])
    _write(out_dir / f"roc_{kind}.svg", render_roc_svg(curve, f"ROC: {kind}"))


def roc_curve_from_dict(roc: dict) -> RocCurve:
    points = tuple((float(x), float(y)) for x, y in roc["points"])
    return RocCurve(points=points, auc=float(roc["auc"]))


def run_pipeline(
    config: PipelineConfig,
    out_dir: Optional[Path] = None,
    no_grid: bool = False,
    workers: int = 1,
) -> dict:
    """Execute the full workflow and write all artifacts. Returns the report
    dict; per-model failures are recorded in it rather than raised."""
    t_start = time.perf_counter()
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    table, train, test, _ = _load_and_split(config)
    load_seconds = time.perf_counter() - t0

    zeros, ones = table.class_counts()
    records = []
    for entry in config.models:
        record: dict[str, Any] = {
            "kind": entry.kind,
            "params": None,
            "cv": None,
            "confusion": None,
            "metrics": None,
            "roc": None,
            "timings": {"tune_seconds": 0.0, "fit_seconds": 0.0, "predict_seconds": 0.0},
            "error": None,
        }
        records.append(record)
        try:
            # a bare entry tunes over the default grid; --no-grid and explicit
            # params both mean a fixed fit
            axes = entry.grid
            if axes is None and entry.params is None:
                axes = DEFAULT_GRIDS.get(entry.kind)
            if axes is not None and not no_grid:
                grid = ParamGrid.from_dict(entry.kind, axes)
                plan = make_folds(train, config.folds, config.seed, stratified=config.stratified)
                t0 = time.perf_counter()
                result = grid_search(
                    train,
                    grid,
                    plan,
                    seed=config.seed,
                    metric=config.selection_metric,
                    workers=workers,
                )
                record["timings"]["tune_seconds"] = time.perf_counter() - t0
                record["cv"] = _cv_dict(result, config.folds, config.selection_metric)
                model = result.best_model
            else:
                t0 = time.perf_counter()
                model = fit_model(
                    entry.kind, train, entry.params, seed=config.seed, workers=workers
                )
                record["timings"]["fit_seconds"] = time.perf_counter() - t0
            record["params"] = dict(model.params)

            t0 = time.perf_counter()
            scores = score_model(model, test.features, workers=workers)
            record["timings"]["predict_seconds"] = time.perf_counter() - t0
            predictions = (scores[:, 1] > scores[:, 0]).astype(int)

            cm = confusion(test.labels, predictions)
            record["confusion"] = cm.as_dict()
            record["metrics"] = metrics(cm).as_dict()
            record["roc"] = _roc_dict(roc_curve(test.labels, scores[:, 1]))
            _write_model_artifacts(out, entry.kind, record)
        except ValueError as exc:
            record["error"] = str(exc)

    succeeded = [r for r in records if r["error"] is None]
    if succeeded:
        text_table, rows = summarize_comparison(succeeded)
        _write(out / "comparison.txt", text_table)
    else:
        text_table, rows = "", []

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config_echo(config, no_grid),
        "dataset": {
            "rows": table.n_rows,
            "n_features": table.n_features,
            "class_counts": [zeros, ones],
            "train_rows": train.n_rows,
            "test_rows": test.n_rows,
        },
        "models": records,
        "comparison": rows,
        "timings": {
            "load_seconds": load_seconds,
            "total_seconds": time.perf_counter() - t_start,
        },
    }
    _write(out / "report.json", json.dumps(report, indent=2) + "\n")
    return report


def run_grid_search(
    config: PipelineConfig,
    out_dir: Optional[Path] = None,
    workers: int = 1,
) -> dict:
    """Tuning only: grid-search each entry on the training partition and
    write grid_search.json (no test-set evaluation)."""
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    _, train, _, _ = _load_and_split(config)

    records = []
    for entry in config.models:
        axes = entry.grid if entry.grid is not None else DEFAULT_GRIDS.get(entry.kind)
        record: dict[str, Any] = {"kind": entry.kind, "grid": axes, "cv": None, "error": None}
        records.append(record)
        if axes is None:
            record["error"] = f"no default grid for model kind {entry.kind!r}"
            continue
        try:
            grid = ParamGrid.from_dict(entry.kind, axes)
            plan = make_folds(train, config.folds, config.seed, stratified=config.stratified)
            result = grid_search(
                train, grid, plan, seed=config.seed, metric=config.selection_metric, workers=workers
            )
            record["cv"] = _cv_dict(result, config.folds, config.selection_metric)
        except ValueError as exc:
            record["error"] = str(exc)

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config_echo(config, no_grid=False),
        "models": records,
    }
    _write(out / "grid_search.json", json.dumps(report, indent=2) + "\n")
    return report


def save_model_file(path: Path, model: TrainedModel, scaler: ScalerParams):
    document = encode_model(model)
    if scaler.kind == "none":
        document["scaler"] = None
    else:
        document["scaler"] = {
            "kind": scaler.kind,
            "per_column_stats": scaler.per_column_stats.tolist(),
        }
    _write(path, json.dumps(document, indent=2) + "\n")


def load_model_file(path: Path) -> tuple[TrainedModel, Optional[ScalerParams]]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    try:
        model = decode_model(document)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad model file ({exc})") from None
    raw_scaler = document.get("scaler")
    if raw_scaler is None:
        return model, None
    scaler = ScalerParams(
        kind=raw_scaler["kind"],
        per_column_stats=np.asarray(raw_scaler["per_column_stats"], dtype=float).reshape(-1, 2),
    )
    return model, scaler


def run_train(
    config: PipelineConfig,
    out_dir: Optional[Path] = None,
    workers: int = 1,
) -> dict:
    """Fit each configured model on the full dataset with fixed parameters
    (grid entries fall back to the tuned defaults) and save model files."""
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    table = load_csv(config.dataset, config.label_column)
    scaler = fit_scaler(table, config.scaling)
    scaled = apply_scaler(table, scaler)

    records = []
    for entry in config.models:
        record: dict[str, Any] = {"kind": entry.kind, "path": None, "params": None, "error": None}
        records.append(record)
        try:
            model = fit_model(entry.kind, scaled, entry.params, seed=config.seed, workers=workers)
        except ValueError as exc:
            record["error"] = str(exc)
            continue
        path = out / f"model_{entry.kind}.json"
        save_model_file(path, model, scaler)
        record["path"] = str(path)
        record["params"] = dict(model.params)
    return {
        "schema_version": MODEL_FILE_SCHEMA_VERSION,
        "config": config_echo(config, no_grid=True),
        "models": records,
    }


def run_evaluate(
    model_path: Path,
    data_path: str,
    label_column: str,
    out_dir: Path,
    workers: int = 1,
) -> dict:
    """Apply a saved model to a CSV and report its metrics."""
    model, scaler = load_model_file(model_path)
    table = load_csv(data_path, label_column)
    if scaler is not None:
        table = apply_scaler(table, scaler)
    scores = score_model(model, table.features, workers=workers)
    predictions = (scores[:, 1] > scores[:, 0]).astype(int)
    cm = confusion(table.labels, predictions)
    zeros, ones = table.class_counts()
    record = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": model.kind,
        "params": dict(model.params),
        "dataset": {"path": str(data_path), "rows": table.n_rows, "class_counts": [zeros, ones]},
        "confusion": cm.as_dict(),
        "metrics": metrics(cm).as_dict(),
        "roc": None,
    }
    if 0 < ones < table.n_rows:
        record["roc"] = _roc_dict(roc_curve(table.labels, scores[:, 1]))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"evaluation_{model.kind}.json"
    _write(path, json.dumps(record, indent=2) + "\n")
    return record


def rerender_report(report_path: Path, out_dir: Path) -> dict:
    """Re-render comparison table, confusion CSVs, and ROC artifacts from a
    saved report.json."""
    try:
        report = json.loads(Path(report_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"report file not found: {report_path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{report_path}: not valid JSON ({exc})") from None
    if report.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ConfigError(f"unsupported report schema_version {report.get('schema_version')!r}")
    models = report.get("models")
    if not isinstance(models, list):
        raise ConfigError("report has no 'models' list")
    out_dir.mkdir(parents=True, exist_ok=True)
    succeeded = [r for r in models if r.get("error") is None and r.get("metrics")]
    if succeeded:
        text_table, _ = summarize_comparison(succeeded)
        _write(out_dir / "comparison.txt", text_table)
    for record in succeeded:
        _write_model_artifacts(out_dir, record["kind"], record)
    return report

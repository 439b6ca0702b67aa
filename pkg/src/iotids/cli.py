"""Command-line entry point.

Subcommands:
  run          full workflow: split, optional grid search, fit, evaluate, report
  grid-search  tuning only; writes grid_search.json
  train        fit models on the whole CSV and save them as JSON files
  evaluate     apply a saved model file to a CSV and report metrics
  report       re-render tables and ROC plots from a saved report.json

Exit codes: 0 success; 2 bad configuration or arguments; 3 data errors;
4 every requested model failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .data import DataError
from .pipeline import (
    ConfigError,
    PipelineConfig,
    default_model_entries,
    filter_models,
    parse_config,
    rerender_report,
    run_evaluate,
    run_grid_search,
    run_pipeline,
    run_train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ALL_MODELS_FAILED = 4


def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--data", help="dataset CSV path (overrides the config)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--models", help="comma-separated model kinds to run")
    parser.add_argument(
        "--no-grid", action="store_true", help="skip grid search; use fixed parameters"
    )
    parser.add_argument(
        "--workers", type=int, default=1, help="worker threads (results are identical at any count)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iotids",
        description="Intrusion-detection model pipeline: train, tune, and evaluate "
        "five classifiers over a binary traffic CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, description in (
        ("run", "full pipeline: split, tune, fit, evaluate, write reports"),
        ("grid-search", "cross-validated grid search only"),
        ("train", "fit models on the full CSV and save model files"),
    ):
        cmd = sub.add_parser(name, help=description)
        _common_flags(cmd)

    cmd = sub.add_parser("evaluate", help="apply a saved model file to a CSV")
    cmd.add_argument("model", help="model JSON file written by `train`")
    cmd.add_argument("--data", required=True, help="dataset CSV path")
    cmd.add_argument("--label-column", default="last", help="label column name (default: last)")
    cmd.add_argument("--out", default="out", help="output directory")
    cmd.add_argument("--workers", type=int, default=1)

    cmd = sub.add_parser("report", help="re-render artifacts from a saved report.json")
    cmd.add_argument("report", help="report.json written by `run`")
    cmd.add_argument("--out", default="out", help="output directory")

    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        try:
            document = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: not valid JSON ({exc})") from None
        config = parse_config(document)
    else:
        if args.data is None:
            raise ConfigError("give --config and/or --data")
        config = PipelineConfig(dataset=args.data, models=default_model_entries())

    updates: dict = {}
    if args.data is not None:
        updates["dataset"] = args.data
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output"] = args.out
    if updates:
        config = PipelineConfig(**{**config.__dict__, **updates})

    names: Optional[list[str]] = None
    if args.models is not None:
        names = [name.strip() for name in args.models.split(",") if name.strip()]
        if not names:
            raise ConfigError("--models lists no model kinds")
    return filter_models(config, names)


def _exit_code_for(records: list[dict]) -> int:
    if any(record["error"] is None for record in records):
        return EXIT_OK
    return EXIT_ALL_MODELS_FAILED


def _print_failures(records: list[dict]):
    for record in records:
        if record["error"] is not None:
            print(f"{record['kind']}: FAILED: {record['error']}", file=sys.stderr)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _load_config(args)
            report = run_pipeline(config, no_grid=args.no_grid, workers=args.workers)
            _print_failures(report["models"])
            for record in report["models"]:
                if record["error"] is None:
                    m = record["metrics"]
                    print(
                        f"{record['kind']}: accuracy {m['accuracy']:.4f}, "
                        f"f1 {m['f1']:.3f}, auc {record['roc']['auc']:.3f}"
                    )
            print(f"report written to {Path(config.output) / 'report.json'}")
            return _exit_code_for(report["models"])

        if args.command == "grid-search":
            config = _load_config(args)
            report = run_grid_search(config, workers=args.workers)
            _print_failures(report["models"])
            for record in report["models"]:
                if record["error"] is None:
                    cv = record["cv"]
                    print(
                        f"{record['kind']}: best mean {cv['metric']} "
                        f"{cv['best_mean']:.4f} with {cv['best_params']}"
                    )
            return _exit_code_for(report["models"])

        if args.command == "train":
            config = _load_config(args)
            report = run_train(config, workers=args.workers)
            _print_failures(report["models"])
            for record in report["models"]:
                if record["error"] is None:
                    print(f"{record['kind']}: saved to {record['path']}")
            return _exit_code_for(report["models"])

        if args.command == "evaluate":
            record = run_evaluate(
                Path(args.model),
                args.data,
                args.label_column,
                Path(args.out),
                workers=args.workers,
            )
            m = record["metrics"]
            auc = record["roc"]["auc"] if record["roc"] else float("nan")
            print(
                f"{record['kind']}: accuracy {m['accuracy']:.4f}, precision "
                f"{m['precision']:.3f}, recall {m['recall']:.3f}, f1 {m['f1']:.3f}, auc {auc:.3f}"
            )
            return EXIT_OK

        rerender_report(Path(args.report), Path(args.out))
        print(f"artifacts re-rendered into {args.out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

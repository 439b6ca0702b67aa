"""Pipeline orchestration and CLI: config parsing, runs, artifacts, exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest

from helpers import make_blobs, write_csv, write_table_csv
from iotids.cli import main
from iotids.data import DataTable
from iotids.evaluation import ConfusionMatrix, metrics
from iotids.models import TUNED_PARAMS, resolve_params
from iotids.pipeline import (
    ConfigError,
    PipelineConfig,
    parse_config,
    run_pipeline,
)


def _blob_csv(tmp_path, n=200, seed=3) -> Path:
    path = tmp_path / "blobs.csv"
    write_table_csv(path, make_blobs(n, seed=seed))
    return path


def _scrub_timings(document):
    if isinstance(document, dict):
        return {k: _scrub_timings(v) for k, v in document.items() if k != "timings"}
    if isinstance(document, list):
        return [_scrub_timings(v) for v in document]
    return document


# ------------------------------------------------------------ parse_config


def test_parse_config_minimal_defaults():
    config = parse_config({"dataset": "traffic.csv"})
    assert config.dataset == "traffic.csv"
    assert [e.kind for e in config.models] == [
        "random_forest",
        "decision_tree",
        "knn",
        "gradient_boost",
        "adaboost",
    ]
    assert config.test_fraction == 0.2
    assert config.folds == 5
    assert config.scaling == "none"
    assert config.selection_metric == "accuracy"


def test_parse_config_rejections():
    cases = [
        ({}, "dataset"),
        ({"dataset": "x.csv", "typo": 1}, "unknown config key"),
        ({"dataset": "x.csv", "schema_version": 9}, "schema_version"),
        ({"dataset": "x.csv", "split": {"fraction": 0.5}}, "unknown split key"),
        ({"dataset": "x.csv", "split": {"test_fraction": 1.5}}, "test_fraction"),
        ({"dataset": "x.csv", "scaling": "robust"}, "scaling"),
        ({"dataset": "x.csv", "folds": 1}, "folds"),
        ({"dataset": "x.csv", "seed": -1}, "seed"),
        ({"dataset": "x.csv", "selection_metric": "auc"}, "selection_metric"),
        ({"dataset": "x.csv", "models": []}, "non-empty"),
        ({"dataset": "x.csv", "models": [{"kind": "svm"}]}, "unknown model kind"),
        ({"dataset": "x.csv", "models": [{"kind": "knn", "extra": 1}]}, "unknown model entry key"),
        (
            {"dataset": "x.csv", "models": [{"kind": "knn", "params": {"k": 3}, "grid": {"k": [3]}}]},
            "not both",
        ),
        ({"dataset": "x.csv", "models": [{"kind": "knn", "params": {"neighbors": 3}}]}, "unknown knn"),
        ({"dataset": "x.csv", "models": [{"kind": "knn", "grid": {"neighbors": [3]}}]}, "unknown knn"),
    ]
    for document, fragment in cases:
        with pytest.raises(ConfigError, match=fragment):
            parse_config(document)


# ---------------------------------------------------------------- run/CLI


def test_run_writes_report_and_artifacts(tmp_path, capsys):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "out"
    code = main(["run", "--data", str(csv), "--out", str(out), "--seed", "1", "--no-grid"])
    assert code == 0

    kinds = ["random_forest", "decision_tree", "knn", "gradient_boost", "adaboost"]
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == 1
    assert [m["kind"] for m in report["models"]] == kinds
    assert (out / "comparison.txt").exists()
    for kind in kinds:
        assert (out / f"confusion_{kind}.csv").exists()
        assert (out / f"roc_{kind}.csv").exists()
        assert (out / f"roc_{kind}.svg").exists()

    assert report["dataset"]["rows"] == 200
    assert report["dataset"]["train_rows"] + report["dataset"]["test_rows"] == 200
    for record in report["models"]:
        assert record["error"] is None
        assert record["cv"] is None  # --no-grid
        assert record["params"] == resolve_params(record["kind"], None)
        # every reported metric must recompute from the stored confusion matrix
        recomputed = metrics(ConfusionMatrix(**record["confusion"])).as_dict()
        assert record["metrics"] == recomputed
        assert 0.0 <= record["roc"]["auc"] <= 1.0

    stdout = capsys.readouterr().out
    for kind in kinds:
        assert kind in stdout


def test_run_uses_default_grids_without_no_grid(tmp_path):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "out"
    code = main(["run", "--data", str(csv), "--out", str(out), "--models", "decision_tree"])
    assert code == 0
    record = json.loads((out / "report.json").read_text())["models"][0]
    assert record["cv"] is not None
    assert record["cv"]["best_params"] == record["params"]
    means = [c["mean"] for c in record["cv"]["combinations"] if c["mean"] is not None]
    assert record["cv"]["best_mean"] == max(means)


def test_run_explicit_grid_and_fixed_params(tmp_path):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "out"
    config = {
        "dataset": str(csv),
        "models": [
            {"kind": "decision_tree", "grid": {"max_depth": [2, 8]}},
            {"kind": "knn", "params": {"k": 3}},
        ],
        "output": str(out),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert main(["run", "--config", str(config_path)]) == 0

    report = json.loads((out / "report.json").read_text())
    dt, knn = report["models"]
    assert dt["cv"] is not None
    assert [c["params"] for c in dt["cv"]["combinations"]] == [{"max_depth": 2}, {"max_depth": 8}]
    assert knn["cv"] is None  # fixed params are never searched
    assert knn["params"]["k"] == 3
    assert knn["params"]["weighting"] == "distance"  # tuned default fills the rest
    assert report["config"]["models"][0]["grid"] == {"max_depth": [2, 8]}
    assert "workers" not in report["config"]


def test_cli_flags_override_config(tmp_path):
    csv = _blob_csv(tmp_path)
    other_csv = tmp_path / "other.csv"
    write_table_csv(other_csv, make_blobs(100, seed=9))
    config = {
        "dataset": str(csv),
        "seed": 0,
        "output": str(tmp_path / "ignored"),
        "models": [{"kind": "decision_tree", "params": {}}],
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    out = tmp_path / "flagged"
    code = main(
        ["run", "--config", str(config_path), "--data", str(other_csv), "--out", str(out), "--seed", "7"]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["dataset"] == str(other_csv)
    assert report["config"]["seed"] == 7
    assert report["dataset"]["rows"] == 100
    assert not (tmp_path / "ignored").exists()


def test_exit_codes_for_bad_configs(tmp_path, capsys):
    csv = _blob_csv(tmp_path)
    bad_config = tmp_path / "bad.json"
    bad_config.write_text(json.dumps({"dataset": str(csv), "typo": 1}))
    assert main(["run", "--config", str(bad_config)]) == 2

    not_json = tmp_path / "broken.json"
    not_json.write_text("{nope")
    assert main(["run", "--config", str(not_json)]) == 2

    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2
    assert main(["run", "--data", str(csv), "--models", "svm"]) == 2
    assert main(["run", "--data", str(csv), "--seed", "-3"]) == 2
    assert main(["run"]) == 2  # neither --config nor --data

    err = capsys.readouterr().err
    assert "config error" in err


def test_exit_code_for_data_errors(tmp_path, capsys):
    assert main(["run", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "o")]) == 3

    mangled = tmp_path / "mangled.csv"
    write_csv(mangled, ["f0", "label"], [["1.0", "0"], ["oops", "1"]])
    assert main(["run", "--data", str(mangled), "--out", str(tmp_path / "o2")]) == 3
    assert "data error" in capsys.readouterr().err


def test_exit_code_when_every_model_fails(tmp_path, capsys):
    # single-class data: boosters cannot fit and tree/knn runs die at the ROC
    # stage, so every record carries an error
    csv = tmp_path / "oneclass.csv"
    rows = [[f"{v / 10:.2f}", "0"] for v in range(30)]
    write_csv(csv, ["f0", "label"], rows)
    config = {
        "dataset": str(csv),
        "split": {"stratified": False},
        "models": [{"kind": "decision_tree"}, {"kind": "gradient_boost"}],
        "output": str(tmp_path / "out"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    code = main(["run", "--config", str(config_path), "--no-grid"])
    assert code == 4
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert all(record["error"] is not None for record in report["models"])
    assert "FAILED" in capsys.readouterr().err


def test_partial_failure_still_succeeds(tmp_path):
    # knn k exceeds the training partition: that model fails, the other runs
    csv = _blob_csv(tmp_path, n=50)
    out = tmp_path / "out"
    config = {
        "dataset": str(csv),
        "models": [
            {"kind": "knn", "params": {"k": 45}},
            {"kind": "decision_tree", "params": {}},
        ],
        "output": str(out),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert main(["run", "--config", str(config_path)]) == 0
    report = json.loads((out / "report.json").read_text())
    knn, dt = report["models"]
    assert knn["error"] is not None and knn["metrics"] is None
    assert dt["error"] is None
    assert [row["model"] for row in report["comparison"]] == ["decision_tree"]
    assert not (out / "roc_knn.svg").exists()


def test_majority_dummy_scores_class_balance(tmp_path):
    rng = np.random.default_rng(4)
    features = rng.normal(size=(100, 2))
    labels = np.array([0] * 60 + [1] * 40)
    csv = tmp_path / "sixty_forty.csv"
    write_table_csv(csv, DataTable(["a", "b"], features, labels))
    config = PipelineConfig(dataset=str(csv), models=(), output=str(tmp_path / "out"))
    config = parse_config(
        {"dataset": str(csv), "models": [{"kind": "majority"}], "output": str(tmp_path / "out")}
    )
    report = run_pipeline(config)
    record = report["models"][0]
    assert record["error"] is None
    # stratified 80/20 split leaves a 12/8 test partition; majority predicts 0
    assert record["metrics"]["accuracy"] == pytest.approx(0.6)
    assert record["metrics"]["recall"] == 0.0


def test_reports_identical_across_reruns_and_worker_counts(tmp_path):
    csv = _blob_csv(tmp_path)
    config = {
        "dataset": str(csv),
        "models": [
            {"kind": "decision_tree", "grid": {"max_depth": [2, 8]}},
            {"kind": "random_forest", "params": {"n_estimators": 8}},
            {"kind": "knn", "params": {}},
        ],
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))

    outs = [tmp_path / name for name in ("a", "b", "c")]
    for out, workers in zip(outs, ("1", "1", "3")):
        code = main(["run", "--config", str(config_path), "--out", str(out), "--workers", workers])
        assert code == 0

    reports = [_scrub_timings(json.loads((out / "report.json").read_text())) for out in outs]
    assert reports[0] == reports[1] == reports[2]

    names = ["comparison.txt"]
    for kind in ("decision_tree", "random_forest", "knn"):
        names += [f"confusion_{kind}.csv", f"roc_{kind}.csv", f"roc_{kind}.svg"]
    for name in names:
        blobs = [(out / name).read_bytes() for out in outs]
        assert blobs[0] == blobs[1] == blobs[2], name


def test_test_partition_never_leaks_into_training(tmp_path):
    # row-id feature with random labels: a memorizing tree would score ~1.0
    # on any row it saw during training, so honest test accuracy stays ~0.5
    rng = np.random.default_rng(11)
    n = 200
    features = np.arange(n, dtype=np.float64).reshape(n, 1)
    labels = rng.integers(0, 2, size=n)
    labels[:2] = (0, 1)
    csv = tmp_path / "memorize.csv"
    write_table_csv(csv, DataTable(["row_id"], features, labels))
    config = parse_config(
        {
            "dataset": str(csv),
            "models": [
                {
                    "kind": "decision_tree",
                    "params": {
                        "max_depth": None,
                        "min_samples_leaf": 1,
                        "min_samples_split": 2,
                        "max_features": "all",
                    },
                }
            ],
            "output": str(tmp_path / "out"),
        }
    )
    report = run_pipeline(config)
    record = report["models"][0]
    assert record["error"] is None
    assert record["metrics"]["accuracy"] < 0.8


def test_confusion_csv_layout(tmp_path):
    csv = _blob_csv(tmp_path, n=100)
    out = tmp_path / "out"
    assert main(["run", "--data", str(csv), "--out", str(out), "--no-grid", "--models", "knn"]) == 0
    report = json.loads((out / "report.json").read_text())
    cm = report["models"][0]["confusion"]
    expected = (
        ",predicted_normal,predicted_attack\n"
        f"actual_normal,{cm['tn']},{cm['fp']}\n"
        f"actual_attack,{cm['fn']},{cm['tp']}\n"
    )
    assert (out / "confusion_knn.csv").read_text() == expected

    roc_lines = (out / "roc_knn.csv").read_text().splitlines()
    assert roc_lines[0] == "false_positive_rate,true_positive_rate"
    assert len(roc_lines) == 1 + len(report["models"][0]["roc"]["points"])


# ------------------------------------------------- other subcommands


def test_grid_search_subcommand(tmp_path, capsys):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "out"
    config = {
        "dataset": str(csv),
        "models": [{"kind": "knn", "grid": {"k": [3, 5]}}],
        "output": str(out),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert main(["grid-search", "--config", str(config_path)]) == 0
    document = json.loads((out / "grid_search.json").read_text())
    record = document["models"][0]
    assert record["error"] is None
    assert [c["params"] for c in record["cv"]["combinations"]] == [{"k": 3}, {"k": 5}]
    assert record["cv"]["best_params"]["k"] in (3, 5)
    assert "best mean" in capsys.readouterr().out


def test_train_and_evaluate_round_trip(tmp_path, capsys):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "models"
    code = main(
        ["train", "--data", str(csv), "--out", str(out), "--models", "decision_tree,knn", "--seed", "2"]
    )
    assert code == 0
    model_path = out / "model_decision_tree.json"
    assert model_path.exists()
    assert (out / "model_knn.json").exists()

    eval_out = tmp_path / "eval"
    code = main(["evaluate", str(model_path), "--data", str(csv), "--out", str(eval_out)])
    assert code == 0
    record = json.loads((eval_out / "evaluation_decision_tree.json").read_text())
    assert record["kind"] == "decision_tree"
    assert record["metrics"]["accuracy"] >= 0.99  # trained on this very CSV
    assert record["roc"] is not None
    assert "accuracy" in capsys.readouterr().out


def test_train_stores_scaler_and_evaluate_applies_it(tmp_path):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "models"
    config = {
        "dataset": str(csv),
        "scaling": "z_score",
        "models": [{"kind": "knn", "params": {}}],
        "output": str(out),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert main(["train", "--config", str(config_path)]) == 0
    document = json.loads((out / "model_knn.json").read_text())
    assert document["scaler"]["kind"] == "z_score"

    # evaluating the raw CSV must reapply the stored scaler to score well
    eval_out = tmp_path / "eval"
    assert main(["evaluate", str(out / "model_knn.json"), "--data", str(csv), "--out", str(eval_out)]) == 0
    record = json.loads((eval_out / "evaluation_knn.json").read_text())
    assert record["metrics"]["accuracy"] >= 0.99


def test_evaluate_handles_single_class_data(tmp_path):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "models"
    assert main(["train", "--data", str(csv), "--out", str(out), "--models", "decision_tree"]) == 0

    single = tmp_path / "single.csv"
    rows = [[f"{v / 7:.3f}", f"{v / 9:.3f}", "0"] for v in range(20)]
    write_csv(single, ["f0", "f1", "label"], rows)
    eval_out = tmp_path / "eval"
    code = main(
        ["evaluate", str(out / "model_decision_tree.json"), "--data", str(single), "--out", str(eval_out)]
    )
    assert code == 0
    record = json.loads((eval_out / "evaluation_decision_tree.json").read_text())
    assert record["roc"] is None  # one-class truth has no ROC


def test_evaluate_errors(tmp_path, capsys):
    csv = _blob_csv(tmp_path)
    assert main(["evaluate", str(tmp_path / "absent.json"), "--data", str(csv)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["evaluate", str(bad), "--data", str(csv)]) == 2
    capsys.readouterr()


def test_report_subcommand_rerenders_artifacts(tmp_path):
    csv = _blob_csv(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--data", str(csv), "--out", str(out), "--no-grid", "--models", "knn"]) == 0

    redo = tmp_path / "redo"
    assert main(["report", str(out / "report.json"), "--out", str(redo)]) == 0
    for name in ("comparison.txt", "confusion_knn.csv", "roc_knn.csv", "roc_knn.svg"):
        assert (redo / name).read_bytes() == (out / name).read_bytes()

    assert main(["report", str(tmp_path / "absent.json"), "--out", str(redo)]) == 2

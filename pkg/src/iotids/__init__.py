"""From-scratch intrusion-detection toolkit: five binary classifiers, seeded
data handling, cross-validated grid search, evaluation metrics, and a CLI
pipeline that writes machine-readable reports and ROC plots."""

from .data import (
    DataError,
    DataTable,
    ScalerParams,
    SplitSpec,
    apply_scaler,
    fit_scaler,
    load_csv,
    split_train_test,
)
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    RocCurve,
    confusion,
    metrics,
    roc_curve,
)
from .models import (
    MODEL_KINDS,
    TUNED_PARAMS,
    TrainedModel,
    fit_model,
    predict_model,
    score_model,
)
from .selection import FoldPlan, ParamGrid, cross_validate, grid_search, make_folds

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "DataError",
    "DataTable",
    "FoldPlan",
    "MetricsReport",
    "MODEL_KINDS",
    "ParamGrid",
    "RocCurve",
    "ScalerParams",
    "SplitSpec",
    "TrainedModel",
    "TUNED_PARAMS",
    "apply_scaler",
    "confusion",
    "cross_validate",
    "fit_model",
    "fit_scaler",
    "grid_search",
    "load_csv",
    "make_folds",
    "metrics",
    "predict_model",
    "roc_curve",
    "score_model",
    "split_train_test",
    "__version__",
]

from .gbdt import Hyperparameters, Tree, TreeEnsemble, train_gbdt, schema_hash
from .metrics import MetricsReport, compute_metrics, mean_metrics, roc_auc
from .baselines import BASELINE_KINDS, train_baseline
from .validation import (DEFAULT_SPACE, kfold_cv, stratified_folds, random_search, nested_cv,
                         gbdt_trainer, baseline_trainer)

__all__ = [
    "Hyperparameters", "Tree", "TreeEnsemble", "train_gbdt", "schema_hash",
    "MetricsReport", "compute_metrics", "mean_metrics", "roc_auc",
    "BASELINE_KINDS", "train_baseline",
    "DEFAULT_SPACE", "kfold_cv", "stratified_folds", "random_search", "nested_cv",
    "gbdt_trainer", "baseline_trainer",
]

"""Splitting, training loops, optimizers and metrics."""
from .loop import EarlyStopping, History, TrainConfig, dataset_loss, train_model
from .metrics import (
    Metrics,
    MetricWarning,
    aggregate,
    compute_metrics,
    confusion_matrix,
    evaluate,
    metrics_from_confusion,
)
from .optim import SGD, Adam, Optimizer, clip_grad_norm, global_norm, make_optimizer
from .splits import (
    SplitSpec,
    allocate_counts,
    fold_sizes,
    holdout_sizes,
    kfold_indices,
    kfold_split,
    split_dataset,
    split_indices,
)

__all__ = [
    "TrainConfig", "EarlyStopping", "History", "train_model", "dataset_loss",
    "Metrics", "MetricWarning", "compute_metrics", "confusion_matrix", "metrics_from_confusion",
    "evaluate", "aggregate",
    "Optimizer", "Adam", "SGD", "clip_grad_norm", "global_norm", "make_optimizer",
    "SplitSpec", "split_dataset", "split_indices", "kfold_split", "kfold_indices",
    "allocate_counts", "holdout_sizes", "fold_sizes",
]

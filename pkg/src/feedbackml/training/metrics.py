"""Classification metrics from an integer confusion matrix.

For single-label multiclass data every false positive of one class is a
false negative of another, so pooled (micro) precision, recall and F1 all
reduce to ``trace / N``: micro-F1 is accuracy. Macro scores average the
per-class values without weighting. A per-class ratio with a zero
denominator is reported as 0 and triggers a :class:`MetricWarning`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class MetricWarning(UserWarning):
    """A per-class precision or recall had a zero denominator."""


@dataclass
class Metrics:
    accuracy: float
    precision_micro: float
    recall_micro: float
    f1_micro: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    per_class: list[dict]
    confusion_matrix: np.ndarray = field(repr=False)

    @property
    def support(self) -> int:
        return int(self.confusion_matrix.sum())

    def to_dict(self, class_names=None) -> dict:
        out = {k: getattr(self, k) for k in ("accuracy", "precision_micro", "recall_micro", "f1_micro",
                                                "precision_macro", "recall_macro", "f1_macro")}
        rows = []
        for row in self.per_class:
            row = dict(row)
            if class_names is not None:
                row["name"] = class_names[row["class"]]
            rows.append(row)
        out["per_class"] = rows
        out["confusion_matrix"] = self.confusion_matrix.tolist()
        out["support"] = self.support
        return out


def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    """``C x C`` counts; rows are true classes, columns predictions."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(f"y_true and y_pred must be equal-length vectors, got {y_true.shape} and {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.min() < 0 or y.max() >= num_classes:
            raise ValueError(f"{name} has labels outside [0, {num_classes})")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _ratio(num: int, den: int, what: str, cls: int) -> float:
    if den == 0:
        warnings.warn(f"{what} undefined for class {cls} (zero denominator); reported as 0", MetricWarning,
                      stacklevel=3)
        return 0.0
    return num / den


def metrics_from_confusion(cm: np.ndarray) -> Metrics:
    cm = np.asarray(cm, dtype=np.int64)
    n = int(cm.sum())
    if n == 0:
        raise ValueError("cannot compute metrics on empty input")
    tp_total = int(np.trace(cm))
    per_class = []
    for c in range(cm.shape[0]):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum()) - tp
        fn = int(cm[c, :].sum()) - tp
        precision = _ratio(tp, tp + fp, "precision", c)
        recall = _ratio(tp, tp + fn, "recall", c)
        f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
        per_class.append({"class": c, "precision": precision, "recall": recall, "f1": f1,
                          "support": tp + fn})
    fp_total = fn_total = n - tp_total
    accuracy = tp_total / n
    return Metrics(
        accuracy=accuracy,
        precision_micro=tp_total / (tp_total + fp_total),
        recall_micro=tp_total / (tp_total + fn_total),
        f1_micro=2 * tp_total / (2 * tp_total + fp_total + fn_total),
        precision_macro=float(np.mean([r["precision"] for r in per_class])),
        recall_macro=float(np.mean([r["recall"] for r in per_class])),
        f1_macro=float(np.mean([r["f1"] for r in per_class])),
        per_class=per_class,
        confusion_matrix=cm,
    )


def compute_metrics(y_true, y_pred, num_classes: int) -> Metrics:
    return metrics_from_confusion(confusion_matrix(y_true, y_pred, num_classes))


def evaluate(model, dataset, batch_size: int = 256) -> Metrics:
    probs = model.predict_proba(dataset.ids, batch_size=batch_size)
    return compute_metrics(dataset.labels, probs.argmax(axis=1), model.config.num_classes)


def aggregate(metrics: list[Metrics]) -> dict:
    """Mean and (population) standard deviation of the scalar scores across folds."""
    keys = ("accuracy", "precision_micro", "recall_micro", "f1_micro",
            "precision_macro", "recall_macro", "f1_macro")
    out = {}
    for k in keys:
        vals = np.array([getattr(m, k) for m in metrics], dtype=np.float64)
        out[k] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out

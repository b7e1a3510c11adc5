"""Binary classification metrics computed from confusion counts."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import LengthMismatch

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "roc_auc")


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    tp: int
    fp: int
    tn: int
    fn: int
    flags: tuple = field(default=())

    def to_dict(self):
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def f1_from(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def roc_auc(y_true, scores):
    """Area under the ROC curve by the trapezoidal rule over every distinct threshold.

    Returns nan when only one class is present.
    """
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each run of tied scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tps = np.cumsum(y_sorted)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def compute_metrics(y_true, y_pred=None, scores=None, threshold=0.5):
    """Metrics for the positive class (label 1).

    ``y_pred`` defaults to ``scores >= threshold``.  Zero-denominator precision
    or recall is reported as 0 and flagged; a single-class ``y_true`` gives a
    flagged roc_auc of 0.5.
    """
    y_true = np.asarray(y_true).astype(np.int64)
    if y_pred is None and scores is None:
        raise ValueError("need y_pred or scores")
    if y_pred is None:
        scores = np.asarray(scores, dtype=np.float64)
        y_pred = (scores >= threshold).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    if y_pred.shape != y_true.shape or (scores is not None and np.shape(scores) != y_true.shape):
        raise LengthMismatch(f"lengths differ: {y_true.shape} vs {y_pred.shape}")
    flags = []
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    n = tp + fp + tn + fn
    accuracy = (tp + tn) / n if n else 0.0
    if tp + fp == 0:
        precision = 0.0
        flags.append("precision_undefined")
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 0.0
        flags.append("recall_undefined")
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0:
        flags.append("f1_undefined")
    f1 = f1_from(precision, recall)
    auc = roc_auc(y_true, scores if scores is not None else y_pred)
    if np.isnan(auc):
        auc = 0.5
        flags.append("roc_auc_undefined")
    return MetricsReport(accuracy, precision, recall, f1, auc, tp, fp, tn, fn, tuple(flags))


def mean_metrics(reports):
    """Unweighted mean of each metric over reports, in the given order."""
    out = {}
    for name in METRIC_NAMES:
        total = 0.0
        for r in reports:
            total += getattr(r, name)
        out[name] = total / len(reports) if reports else float("nan")
    return out

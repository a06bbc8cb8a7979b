"""Threshold metrics, ranking metrics, and per-category score statistics.

Scores are positive-class probabilities.  A score equal to the decision
threshold predicts positive.  ROC AUC groups tied scores into single
curve steps, which makes it equal to the pair-counting probability with
ties credited 1/2; PR AUC follows the average-precision (step)
formulation with ties resolved by stable input order.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, UndefinedMetricError

DEFAULT_THRESHOLD = 0.5
CATEGORIES = ("TN", "TP", "FN", "FP")


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion_at_threshold(scores, labels, threshold=DEFAULT_THRESHOLD):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pred = scores >= threshold  # ties predict positive
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def threshold_metrics(c):
    """ACC, BACC, Sn, Sp and MCC from confusion counts."""
    if c.total == 0:
        raise ContractError("threshold metrics need at least one sample")
    pos = c.tp + c.fn
    neg = c.tn + c.fp
    sn = c.tp / pos if pos else 0.0
    sp = c.tn / neg if neg else 0.0
    acc = (c.tp + c.tn) / c.total
    bacc = 0.5 * sn + 0.5 * sp
    denom = (c.tp + c.fn) * (c.tn + c.fp) * (c.tp + c.fp) * (c.tn + c.fn)
    if denom == 0:
        mcc = 0.0
    else:
        mcc = (c.tp * c.tn - c.fn * c.fp) / math.sqrt(denom)
    return {"acc": acc, "bacc": bacc, "sn": sn, "sp": sp, "mcc": mcc}


def _check_scored(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1 or scores.size == 0:
        raise ContractError("scores and labels must be equal-length, non-empty 1-D")
    return scores, labels


def roc_curve(scores, labels):
    """(fpr, tpr) points in descending-threshold order, tied scores grouped."""
    scores, labels = _check_scored(scores, labels)
    n_pos = int((labels == 1).sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC needs both a positive and a negative sample")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    distinct = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tps = np.cumsum(y == 1)[distinct]
    fps = np.cumsum(y == 0)[distinct]
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    return fpr, tpr


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def roc_auc(scores, labels):
    fpr, tpr = roc_curve(scores, labels)
    return float(_trapezoid(tpr, fpr))


def pr_curve(scores, labels):
    """(recall, precision) at each rank, ties by stable input order."""
    scores, labels = _check_scored(scores, labels)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise UndefinedMetricError("PR AUC needs at least one positive sample")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    tp = np.cumsum(y == 1)
    ranks = np.arange(1, y.size + 1)
    precision = tp / ranks
    recall = tp / n_pos
    return recall, precision


def pr_auc(scores, labels):
    """Average precision: sum of precision at each positive's rank / n_pos."""
    recall, precision = pr_curve(scores, labels)
    steps = np.diff(np.r_[0.0, recall])
    return float(np.sum(steps * precision))


def prediction_distribution(scores, labels, threshold=DEFAULT_THRESHOLD):
    """Per-category score statistics (the Fig-5c style summary).

    Categories partition the samples; an empty category reports count 0
    and no statistics.  Standard deviation is the population form.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pred = scores >= threshold
    pos = labels == 1
    members = {
        "TP": scores[pred & pos],
        "FP": scores[pred & ~pos],
        "TN": scores[~pred & ~pos],
        "FN": scores[~pred & pos],
    }
    out = {}
    for cat in CATEGORIES:
        vals = members[cat]
        if vals.size == 0:
            out[cat] = {"count": 0}
            continue
        out[cat] = {
            "count": int(vals.size),
            "mean": round(float(vals.mean()), 4),
            "median": round(float(np.median(vals)), 4),
            "stddev": round(float(vals.std()), 4),
            "q25": round(float(np.percentile(vals, 25)), 4),
            "q75": round(float(np.percentile(vals, 75)), 4),
        }
    return out


def full_report(scores, labels, threshold=DEFAULT_THRESHOLD):
    """All seven evaluation metrics plus counts; ranking metrics may be undefined."""
    c = confusion_at_threshold(scores, labels, threshold)
    report = dict(threshold_metrics(c))
    try:
        report["roc_auc"] = roc_auc(scores, labels)
    except UndefinedMetricError:
        report["roc_auc"] = None
    try:
        report["pr_auc"] = pr_auc(scores, labels)
    except UndefinedMetricError:
        report["pr_auc"] = None
    report.update({"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn})
    return report

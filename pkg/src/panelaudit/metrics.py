"""Evaluation metrics: AUC, confusion-derived rates, MSE, and the leakage ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError


@dataclass(frozen=True)
class ClassificationReport:
    auc: float
    sensitivity: float
    specificity: float
    threshold: float = 0.5


@dataclass(frozen=True)
class RegressionReport:
    mse: float


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.all((labels == 0) | (labels == 1)):
        raise ContractError("labels must be 0/1")
    if labels.min() == labels.max():
        raise ContractError("labels contain a single class")
    return labels


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with tie correction: ties count one half.

    Equals the fraction of concordant positive-negative pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)  # average ranks handle ties
    rank_sum_pos = float(np.sum(ranks[labels == 1]))
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def confusion_at_threshold(scores, labels, threshold: float = 0.5) -> tuple[float, float]:
    """(sensitivity, specificity) with predicted-positive iff score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    fp = int(np.sum(pred & ~pos))
    return tp / (tp + fn), tn / (tn + fp)


def classification_report(scores, labels, threshold: float = 0.5) -> ClassificationReport:
    sens, spec = confusion_at_threshold(scores, labels, threshold)
    return ClassificationReport(auc=auc(scores, labels), sensitivity=sens, specificity=spec, threshold=threshold)


def mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise ContractError("predictions and targets must be equally long and non-empty")
    return float(np.mean((predictions - targets) ** 2))


def leakage_ratio(metric_clean: float, metric_leaked: float, orientation: str) -> float:
    """Relative inflation of the leaked metric over the clean one.

    Signed so that positive always means the leaked configuration looks
    better: (clean - leaked)/clean when lower is better, and
    (leaked - clean)/clean when higher is better.
    """
    if metric_clean == 0:
        raise ContractError("clean metric is zero; ratio undefined")
    if orientation == "lower_is_better":
        return (metric_clean - metric_leaked) / metric_clean
    if orientation == "higher_is_better":
        return (metric_leaked - metric_clean) / metric_clean
    raise ContractError(f"unknown orientation {orientation!r}")

"""Binary-classification metrics and within-column dense ranking.

The ranking feeds the metrics-table cell shading: rank 1 is the best value in
a column, ties share a rank, and log loss ranks ascending while everything
else ranks descending.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_CLIP = 1e-15

# metric name -> higher_is_better
METRIC_DIRECTIONS = {
    "accuracy": True,
    "precision": True,
    "recall": True,
    "f1": True,
    "roc_auc": True,
    "log_loss": False,
}


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRow:
    model_id: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float | None  # None when labels are single-class (renders blank)
    log_loss: float
    tp: int
    fp: int
    tn: int
    fn: int

    def metric(self, name: str) -> float | None:
        return getattr(self, name)


@dataclass(frozen=True)
class RankedMetricsTable:
    rows: tuple[MetricsRow, ...]
    # ranks[i][metric] is the dense rank of rows[i] for that metric (1 = best);
    # None where the metric itself is undefined.
    ranks: tuple[dict[str, int | None], ...]


def _validate(labels, probs) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=float)
    if labels.ndim != 1 or probs.ndim != 1:
        raise MetricsError("labels and probs must be 1-d")
    if labels.shape != probs.shape:
        raise MetricsError(
            f"length mismatch: {labels.shape[0]} labels vs {probs.shape[0]} probs"
        )
    if labels.size == 0:
        raise MetricsError("empty input")
    if not np.isin(labels, (0, 1)).all():
        raise MetricsError("labels must be 0 or 1")
    if probs.min() < 0 or probs.max() > 1:
        raise MetricsError("probabilities must lie in [0, 1]")
    return labels, probs


def roc_auc(labels, probs) -> float:
    """Probability that a random positive outscores a random negative.

    Ties between a positive and a negative score count 1/2. Computed via
    average ranks, which equals the mean over all (positive, negative) pairs.
    """
    labels, probs = _validate(labels, probs)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("roc_auc undefined for single-class labels")
    order = np.argsort(probs, kind="mergesort")
    ranks = np.empty(labels.size, dtype=float)
    ranks[order] = np.arange(1, labels.size + 1)
    # Average the ranks of tied scores.
    sorted_probs = probs[order]
    i = 0
    while i < labels.size:
        j = i
        while j + 1 < labels.size and sorted_probs[j + 1] == sorted_probs[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(labels, probs, threshold: float = 0.5) -> MetricsRow:
    """Confusion counts plus the six contractual metrics for one model.

    A probability exactly at the threshold counts as a positive prediction.
    Precision/recall fall back to 0 on empty denominators; log loss clips
    probabilities away from 0 and 1.
    """
    labels, probs = _validate(labels, probs)
    hard = probs >= threshold
    actual = labels == 1
    tp = int(np.sum(hard & actual))
    fp = int(np.sum(hard & ~actual))
    tn = int(np.sum(~hard & ~actual))
    fn = int(np.sum(~hard & actual))
    n = labels.size

    accuracy = (tp + tn) / n
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    clipped = np.clip(probs, PROB_CLIP, 1 - PROB_CLIP)
    log_loss = float(
        -np.mean(labels * np.log(clipped) + (1 - labels) * np.log(1 - clipped))
    )
    try:
        auc: float | None = roc_auc(labels, probs)
    except MetricsError:
        auc = None
    return MetricsRow(
        model_id="",
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        roc_auc=auc,
        log_loss=log_loss,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def dense_ranks(values: list[float | None], higher_is_better: bool) -> list[int | None]:
    """Dense rank per value: best value gets 1, ties share, None stays None."""
    defined = sorted({v for v in values if v is not None}, reverse=higher_is_better)
    position = {v: i + 1 for i, v in enumerate(defined)}
    return [None if v is None else position[v] for v in values]


def rank_metric_columns(rows: list[MetricsRow]) -> RankedMetricsTable:
    """Dense-rank every metric column across models, honoring direction."""
    if not rows:
        raise MetricsError("need at least one metrics row")
    per_metric = {
        name: dense_ranks([row.metric(name) for row in rows], direction)
        for name, direction in METRIC_DIRECTIONS.items()
    }
    ranks = tuple(
        {name: per_metric[name][i] for name in METRIC_DIRECTIONS}
        for i in range(len(rows))
    )
    return RankedMetricsTable(rows=tuple(rows), ranks=ranks)

"""Classification metrics for bot detection: accuracy, F1, AUC, aggregation.

Bots are the positive class. AUC uses the rank statistic with half credit
for ties, which equals the probability a random bot outranks a random human.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    f1: float
    auc: float | None
    n: int


def _validate(y_true: Sequence[int], y_prob: Sequence[float]) -> None:
    if len(y_true) != len(y_prob):
        raise ValueError(f"length mismatch: {len(y_true)} labels vs {len(y_prob)} scores")
    if not y_true:
        raise ValueError("cannot compute metrics on an empty set")
    if any(y not in (0, 1) for y in y_true):
        raise ValueError("labels must be 0 (human) or 1 (bot)")
    if any(not 0.0 <= p <= 1.0 for p in y_prob):
        raise ValueError("scores must be probabilities in [0, 1]")


def roc_auc(y_true: Sequence[int], y_prob: Sequence[float]) -> float | None:
    """Rank-based AUC with tie half-credit; None when only one class present."""
    _validate(y_true, y_prob)
    n_pos = sum(y_true)
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(len(y_prob)), key=lambda i: y_prob[i])
    ranks = [0.0] * len(y_prob)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and y_prob[order[j + 1]] == y_prob[order[i]]:
            j += 1
        avg_rank = (i + j) / 2.0 + 1.0  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    pos_rank_sum = sum(r for r, y in zip(ranks, y_true) if y == 1)
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_metrics(y_true: Sequence[int], y_prob: Sequence[float],
                    threshold: float = 0.5) -> ClassificationMetrics:
    """Accuracy, bot-positive F1 and AUC at a decision threshold.

    A score at or above the threshold predicts bot. F1 is 0 when there are
    no predicted or actual bots; AUC is None when labels are single-class.
    """
    _validate(y_true, y_prob)
    y_pred = [1 if p >= threshold else 0 for p in y_prob]
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    tp = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 1)
    fp = sum(1 for t, p in zip(y_true, y_pred) if t == 0 and p == 1)
    fn = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 0)
    f1 = 2.0 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return ClassificationMetrics(
        accuracy=correct / len(y_true),
        f1=f1,
        auc=roc_auc(y_true, y_prob),
        n=len(y_true),
    )


@dataclass(frozen=True)
class MetricSummary:
    """Mean and population std over repeated runs, with the raw values."""

    mean: float | None
    std: float | None
    values: tuple

    @classmethod
    def of(cls, values: Sequence[float | None]) -> "MetricSummary":
        present = [v for v in values if v is not None]
        if not present:
            return cls(mean=None, std=None, values=tuple(values))
        return cls(mean=statistics.fmean(present),
                   std=statistics.pstdev(present),
                   values=tuple(values))


@dataclass(frozen=True)
class MetricsReport:
    """Seedwise aggregate of repeated evaluations."""

    accuracy: MetricSummary
    f1: MetricSummary
    auc: MetricSummary
    n_runs: int

    @classmethod
    def from_runs(cls, runs: Sequence[ClassificationMetrics]) -> "MetricsReport":
        if not runs:
            raise ValueError("cannot aggregate zero runs")
        return cls(
            accuracy=MetricSummary.of([r.accuracy for r in runs]),
            f1=MetricSummary.of([r.f1 for r in runs]),
            auc=MetricSummary.of([r.auc for r in runs]),
            n_runs=len(runs),
        )


@dataclass(frozen=True)
class BucketAccuracy:
    n: int
    accuracy: float


def neighbor_bucket(k: int) -> str:
    return str(k) if k < 10 else "10+"


def accuracy_by_neighbor_count(
        y_true: Sequence[int], y_pred: Sequence[int],
        neighbor_counts: Sequence[int]) -> Mapping[str, BucketAccuracy]:
    """Per-bucket accuracy grouped by neighbor count 0..9 and 10+.

    Buckets with no members are omitted.
    """
    if not len(y_true) == len(y_pred) == len(neighbor_counts):
        raise ValueError("labels, predictions and neighbor counts must align")
    totals: dict[str, list[int]] = {}
    for t, p, k in zip(y_true, y_pred, neighbor_counts):
        bucket = totals.setdefault(neighbor_bucket(k), [0, 0])
        bucket[0] += 1
        bucket[1] += int(t == p)
    return {key: BucketAccuracy(n=n, accuracy=c / n)
            for key, (n, c) in totals.items()}

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgb.metrics import (
    BucketAccuracy,
    ClassificationMetrics,
    MetricsReport,
    MetricSummary,
    accuracy_by_neighbor_count,
    compute_metrics,
    neighbor_bucket,
    roc_auc,
)


def pairwise_auc_oracle(y_true, y_prob):
    """Oracle: average over all (bot, human) pairs with ties worth 0.5."""
    pos = [p for y, p in zip(y_true, y_prob) if y == 1]
    neg = [p for y, p in zip(y_true, y_prob) if y == 0]
    if not pos or not neg:
        return None
    wins = sum(1.0 if pp > pn else 0.5 if pp == pn else 0.0
               for pp in pos for pn in neg)
    return wins / (len(pos) * len(neg))


def confusion_oracle(y_true, y_prob, threshold=0.5):
    y_pred = [1 if p >= threshold else 0 for p in y_prob]
    tp = sum(t == 1 and p == 1 for t, p in zip(y_true, y_pred))
    tn = sum(t == 0 and p == 0 for t, p in zip(y_true, y_pred))
    fp = sum(t == 0 and p == 1 for t, p in zip(y_true, y_pred))
    fn = sum(t == 1 and p == 0 for t, p in zip(y_true, y_pred))
    acc = (tp + tn) / len(y_true)
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return acc, f1


class TestAuc:
    def test_perfect_separation(self):
        assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_perfectly_wrong(self):
        assert roc_auc([1, 1, 0, 0], [0.1, 0.2, 0.8, 0.9]) == 0.0

    def test_all_tied_scores_give_half(self):
        assert roc_auc([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_single_class_is_none(self):
        assert roc_auc([1, 1, 1], [0.2, 0.5, 0.9]) is None
        assert roc_auc([0, 0], [0.2, 0.5]) is None

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_matches_pairwise_oracle(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 40)
        y = [rng.randint(0, 1) for _ in range(n)]
        # quantized scores force plenty of ties
        p = [rng.randint(0, 4) / 4.0 for _ in range(n)]
        assert roc_auc(y, p) == pytest.approx(pairwise_auc_oracle(y, p), abs=1e-12)


class TestComputeMetrics:
    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_matches_confusion_oracle(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 30)
        y = [rng.randint(0, 1) for _ in range(n)]
        p = [rng.random() for _ in range(n)]
        m = compute_metrics(y, p)
        acc, f1 = confusion_oracle(y, p)
        assert m.accuracy == pytest.approx(acc)
        assert m.f1 == pytest.approx(f1)
        assert m.n == n

    def test_threshold_is_inclusive_for_bots(self):
        m = compute_metrics([1], [0.5], threshold=0.5)
        assert m.accuracy == 1.0

    def test_no_predicted_or_actual_bots_gives_zero_f1(self):
        m = compute_metrics([0, 0], [0.1, 0.2])
        assert m.f1 == 0.0 and m.auc is None

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([0, 1], [0.5])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([], [])

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([0, 2], [0.5, 0.5])

    def test_bad_scores_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([0, 1], [0.5, 1.5])


class TestAggregation:
    def test_mean_and_population_std(self):
        runs = [ClassificationMetrics(accuracy=a, f1=a, auc=a, n=10)
                for a in (0.0, 1.0)]
        rep = MetricsReport.from_runs(runs)
        assert rep.accuracy.mean == 0.5
        assert rep.accuracy.std == 0.5  # ddof=0
        assert rep.accuracy.values == (0.0, 1.0)
        assert rep.n_runs == 2

    def test_none_aucs_are_skipped_in_mean(self):
        runs = [ClassificationMetrics(accuracy=1.0, f1=1.0, auc=None, n=5),
                ClassificationMetrics(accuracy=1.0, f1=1.0, auc=0.8, n=5)]
        rep = MetricsReport.from_runs(runs)
        assert rep.auc.mean == 0.8
        assert rep.auc.values == (None, 0.8)

    def test_all_none_auc_mean_is_none(self):
        assert MetricSummary.of([None, None]).mean is None

    def test_zero_runs_rejected(self):
        with pytest.raises(ValueError):
            MetricsReport.from_runs([])


class TestAccuracyByNeighborCount:
    def test_bucket_names(self):
        assert neighbor_bucket(0) == "0"
        assert neighbor_bucket(9) == "9"
        assert neighbor_bucket(10) == "10+"
        assert neighbor_bucket(123) == "10+"

    def test_hand_case(self):
        y_true = [0, 1, 1, 0, 1]
        y_pred = [0, 1, 0, 0, 1]
        ks = [0, 0, 3, 12, 15]
        out = accuracy_by_neighbor_count(y_true, y_pred, ks)
        assert out["0"] == BucketAccuracy(n=2, accuracy=1.0)
        assert out["3"] == BucketAccuracy(n=1, accuracy=0.0)
        assert out["10+"] == BucketAccuracy(n=2, accuracy=1.0)
        assert set(out) == {"0", "3", "10+"}

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_bucket_totals_partition_the_input(self, seed):
        rng = random.Random(seed)
        n = rng.randint(1, 50)
        y = [rng.randint(0, 1) for _ in range(n)]
        pred = [rng.randint(0, 1) for _ in range(n)]
        ks = [rng.randint(0, 14) for _ in range(n)]
        out = accuracy_by_neighbor_count(y, pred, ks)
        assert sum(b.n for b in out.values()) == n
        overall = sum(b.n * b.accuracy for b in out.values()) / n
        assert overall == pytest.approx(sum(t == p for t, p in zip(y, pred)) / n)

    def test_misaligned_inputs_rejected(self):
        with pytest.raises(ValueError):
            accuracy_by_neighbor_count([0], [0, 1], [1, 2])

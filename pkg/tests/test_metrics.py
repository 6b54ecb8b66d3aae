import numpy as np
import pytest

from mcis import metrics
from mcis.dataset import seven_class
from mcis.errors import ConventionMismatch, DegenerateValidation, LengthMismatch


def brute_force_acc7(preds, golds):
    hits = 0
    for p, g in zip(preds, golds):
        hits += seven_class(p) == seven_class(g)
    return hits / len(preds)


def brute_force_binary(preds, golds, convention):
    pairs = []
    for p, g in zip(preds, golds):
        if convention == "neg_vs_pos_excluding_zero":
            if g == 0:
                continue
            pairs.append((p > 0, g > 0))
        else:
            pairs.append((p >= 0, g >= 0))
    return pairs


def brute_force_weighted_f1(preds, golds, convention):
    pairs = brute_force_binary(preds, golds, convention)
    total, support_sum = 0.0, 0
    for cls in (True, False):
        tp = sum(1 for p, g in pairs if p == cls and g == cls)
        fp = sum(1 for p, g in pairs if p == cls and g != cls)
        fn = sum(1 for p, g in pairs if p != cls and g == cls)
        support = tp + fn
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += support * f1
        support_sum += support
    return total / support_sum if support_sum else 0.0


def test_acc7_perfect_and_binning():
    preds = [1.0, -2.0, 0.3]
    assert metrics.acc7(preds, preds) == 1.0
    assert metrics.acc7([2.6], [3.0]) == 1.0  # both bin to class 3


def test_acc7_matches_oracle():
    rng = np.random.default_rng(0)
    preds = rng.uniform(-4, 4, 20)
    golds = rng.uniform(-3, 3, 20)
    assert metrics.acc7(preds, golds) == pytest.approx(
        brute_force_acc7(preds, golds), abs=1e-12)


def test_acc2_sign_agreement():
    assert metrics.acc2([1.2, -0.5], [0.3, -0.1]) == 1.0


def test_acc2_zero_gold_dropped():
    # the zero-gold sample leaves the denominator under the excluding convention
    assert metrics.acc2([1.0, 1.0], [0.0, 2.0],
                        "neg_vs_pos_excluding_zero") == 1.0
    assert metrics.acc2([-1.0, 1.0], [0.0, 2.0],
                        "neg_vs_nonneg") == 0.5


def test_acc2_matches_counting_oracle():
    rng = np.random.default_rng(1)
    preds = rng.uniform(-2, 2, 30)
    golds = np.round(rng.uniform(-2, 2, 30), 0)
    for conv in metrics.CONVENTIONS:
        pairs = brute_force_binary(preds, golds, conv)
        oracle = sum(p == g for p, g in pairs) / len(pairs)
        assert metrics.acc2(preds, golds, conv) == pytest.approx(oracle, abs=1e-12)


def test_weighted_f1_perfect():
    preds = [1.0, -1.0, 2.0, -2.0]
    assert metrics.weighted_f1(preds, preds) == 1.0


def test_weighted_f1_hand_case_one_third():
    # All predicted positive, golds half positive: positive class has
    # precision 0.5, recall 1.0 (F1 = 2/3); negative class F1 = 0.
    preds = [1.0, 1.0, 1.0, 1.0]
    golds = [1.0, 1.0, -1.0, -1.0]
    assert metrics.weighted_f1(preds, golds) == pytest.approx(1 / 3, abs=1e-12)


def test_weighted_f1_matches_confusion_matrix_oracle():
    rng = np.random.default_rng(2)
    for trial in range(50):
        n = int(rng.integers(2, 51))
        preds = rng.uniform(-3, 3, n)
        golds = np.round(rng.uniform(-3, 3, n), 1)
        for conv in metrics.CONVENTIONS:
            if conv == "neg_vs_pos_excluding_zero" and not np.any(golds != 0):
                continue
            assert metrics.weighted_f1(preds, golds, conv) == pytest.approx(
                brute_force_weighted_f1(preds, golds, conv), abs=1e-12)


def test_weighted_f1_only_positive_golds_equals_positive_f1():
    preds = [1.0, -1.0, 2.0]
    golds = [1.0, 2.0, 0.5]
    pairs = brute_force_binary(preds, golds, "neg_vs_pos_excluding_zero")
    tp = sum(1 for p, g in pairs if p and g)
    fp = sum(1 for p, g in pairs if p and not g)
    fn = sum(1 for p, g in pairs if not p and g)
    prec, rec = tp / (tp + fp), tp / (tp + fn)
    assert metrics.weighted_f1(preds, golds) == pytest.approx(
        2 * prec * rec / (prec + rec), abs=1e-12)


def test_metrics_permutation_invariant():
    rng = np.random.default_rng(3)
    preds = rng.uniform(-3, 3, 25)
    golds = rng.uniform(-3, 3, 25)
    perm = rng.permutation(25)
    assert metrics.acc7(preds, golds) == metrics.acc7(preds[perm], golds[perm])
    assert metrics.weighted_f1(preds, golds) == \
        metrics.weighted_f1(preds[perm], golds[perm])
    assert metrics.mae(preds, golds) == pytest.approx(
        metrics.mae(preds[perm], golds[perm]), abs=1e-12)


def test_report_ranges_and_perfection():
    rng = np.random.default_rng(4)
    preds = rng.uniform(-3, 3, 40)
    golds = rng.uniform(-3, 3, 40)
    rep = metrics.compute_report(preds, golds)
    assert 0 <= rep.acc7 <= 1 and 0 <= rep.acc2 <= 1 and 0 <= rep.weighted_f1 <= 1
    assert rep.mae >= 0
    perfect = metrics.compute_report(golds, golds)
    assert perfect.acc7 == perfect.acc2 == perfect.weighted_f1 == 1.0
    assert perfect.mae == 0.0


def test_errors():
    with pytest.raises(LengthMismatch):
        metrics.acc7([1.0], [1.0, 2.0])
    with pytest.raises(DegenerateValidation):
        metrics.acc2([1.0], [0.0], "neg_vs_pos_excluding_zero")


def test_compare_reports():
    golds = [1.0, -1.0, 2.0, -2.0]
    a = metrics.compute_report([1.0, -1.0, 2.0, -2.0], golds)
    identical, _ = metrics.compare_reports(a, a)
    assert all(v == 0 for v in identical["deltas"].values())
    b = metrics.compute_report([1.0, -1.0, 2.0, 2.0], golds)
    report, table = metrics.compare_reports(b, a)
    assert report["deltas"]["acc2"] == pytest.approx(0.25, abs=1e-12)
    assert "weighted_f1" in table
    mismatched = metrics.MetricsReport(1, 1, 1, 0, 4, "neg_vs_nonneg")
    with pytest.raises(ConventionMismatch):
        metrics.compare_reports(a, mismatched)

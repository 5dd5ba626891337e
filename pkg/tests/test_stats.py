"""Statistics engine: worked examples frozen from hand computation plus
oracle cross-checks against the literal reference implementations."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import (
    bh_adjust_reference,
    delong_paired_reference,
    delong_unpaired_reference,
    delong_variance_reference,
    pair_count_auc,
    youden_sweep,
)
from radlabel.stats import (
    ConfidenceInterval,
    DegenerateData,
    LabelEvalRow,
    NoEligibleLabels,
    NoPositives,
    OutOfRange,
    SingleClass,
    auc,
    benjamini_hochberg,
    bootstrap_ci,
    confusion_metrics,
    delong_paired,
    delong_unpaired,
    delong_variance,
    macro_auc,
    pr_curve,
    roc_curve,
    youden_threshold,
)

PERFECT = (np.array([0.9, 0.8, 0.3, 0.2]), np.array([1, 1, 0, 0]))
CROSSED = (np.array([0.1, 0.4, 0.35, 0.8]), np.array([0, 0, 1, 1]))


class TestAuc:
    def test_perfect_separation(self):
        assert auc(*PERFECT) == 1.0

    def test_all_ties_is_chance(self):
        assert auc(np.full(10, 0.5), np.array([1, 0] * 5)) == 0.5

    def test_three_of_four_pairs(self):
        # pairs: (0.35 vs 0.1 ok), (0.35 vs 0.4 wrong), (0.8 vs 0.1 ok), (0.8 vs 0.4 ok)
        assert auc(*CROSSED) == pytest.approx(0.75, abs=1e-15)

    def test_single_class_raises(self):
        with pytest.raises(SingleClass):
            auc([0.1, 0.2], [1, 1])

    def test_matches_pair_counting_randomized(self):
        rng = np.random.default_rng(7)
        from conftest import random_instance

        for _ in range(200):
            s, y = random_instance(rng, max_n=80)
            assert auc(s, y) == pytest.approx(pair_count_auc(s, y), abs=1e-12)

    def test_rank_invariance(self):
        rng = np.random.default_rng(11)
        s = rng.random(50)
        y = (rng.random(50) < 0.4).astype(int)
        y[0], y[1] = 1, 0
        for transform in (np.exp, lambda x: 3 * x + 2, lambda x: x ** 3):
            assert auc(transform(s), y) == pytest.approx(auc(s, y), abs=1e-12)

    def test_roc_shape_rank_invariant(self):
        rng = np.random.default_rng(12)
        s = rng.integers(0, 12, 60) / 11.0
        y = (rng.random(60) < 0.5).astype(int)
        y[:2] = [1, 0]
        base = roc_curve(s, y)
        warped = roc_curve(np.exp(4 * s), y)
        assert np.array_equal(base.fpr, warped.fpr)
        assert np.array_equal(base.tpr, warped.tpr)

    def test_delong_z_rank_invariant(self):
        rng = np.random.default_rng(14)
        y = (rng.random(80) < 0.4).astype(int)
        y[:2] = [1, 0]
        a = rng.random(80)
        b = np.clip(a + rng.normal(0, 0.2, 80), 0, 2)
        base = delong_paired(a, b, y)
        warped = delong_paired(np.exp(a), b ** 3, y)
        assert warped.z == pytest.approx(base.z, abs=1e-12)
        assert warped.p_two_sided == pytest.approx(base.p_two_sided, abs=1e-12)


class TestRocCurve:
    def test_perfect_separation_points(self):
        curve = roc_curve(*PERFECT)
        assert curve.points == [(0, 0), (0, 0.5), (0, 1), (0.5, 1), (1, 1)]
        assert curve.thresholds[0] == np.inf

    def test_single_positive_at_max(self):
        curve = roc_curve([0.9, 0.1, 0.2, 0.3], [1, 0, 0, 0])
        assert curve.points[1] == (0.0, 1.0)

    def test_all_tied_scores_is_diagonal(self):
        curve = roc_curve(np.full(6, 0.4), [1, 0, 1, 0, 1, 0])
        assert curve.points == [(0, 0), (1, 1)]

    def test_monotone_and_endpoints(self):
        rng = np.random.default_rng(3)
        from conftest import random_instance

        for _ in range(50):
            s, y = random_instance(rng, max_n=60)
            curve = roc_curve(s, y)
            assert curve.points[0] == (0, 0) and curve.points[-1] == (1, 1)
            assert np.all(np.diff(curve.fpr) >= 0)
            assert np.all(np.diff(curve.tpr) >= 0)

    def test_trapezoid_equals_pair_count(self):
        rng = np.random.default_rng(5)
        from conftest import random_instance

        for _ in range(100):
            s, y = random_instance(rng, max_n=60)
            assert roc_curve(s, y).area() == pytest.approx(pair_count_auc(s, y), abs=1e-12)


class TestPrCurve:
    def test_perfect_separation_ap(self):
        assert pr_curve(*PERFECT).average_precision == 1.0

    def test_one_positive_ranked_last(self):
        curve = pr_curve([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1])
        assert curve.average_precision == pytest.approx(0.25, abs=1e-15)

    def test_all_ties_ap_is_prevalence(self):
        curve = pr_curve(np.full(8, 0.3), [1, 1, 0, 0, 0, 0, 0, 0])
        assert curve.average_precision == pytest.approx(0.25, abs=1e-15)
        assert curve.points == [(1.0, 0.25)]

    def test_recall_nondecreasing(self):
        rng = np.random.default_rng(9)
        from conftest import random_instance

        for _ in range(50):
            s, y = random_instance(rng, max_n=60)
            assert np.all(np.diff(pr_curve(s, y).recall) >= 0)

    def test_no_positives_raises(self):
        with pytest.raises(NoPositives):
            pr_curve([0.5, 0.6], [0, 0])


class TestYouden:
    def test_perfect_midpoint(self):
        threshold, j = youden_threshold(*PERFECT)
        assert threshold == pytest.approx(0.55, abs=1e-15)
        assert j == 1.0

    def test_all_tied_prefers_all_positive_rule(self):
        threshold, j = youden_threshold(np.full(6, 0.4), [1, 0, 1, 0, 1, 0])
        assert threshold == -np.inf
        assert j == 0.0

    def test_anticorrelated_scores_cap_at_zero(self):
        threshold, j = youden_threshold([0.2, 0.3, 0.8, 0.9], [1, 1, 0, 0])
        assert j == 0.0
        assert threshold == -np.inf  # all-positive rule wins the sensitivity tie-break

    def test_matches_exhaustive_sweep(self):
        rng = np.random.default_rng(13)
        from conftest import random_instance

        for _ in range(300):
            s, y = random_instance(rng, max_n=50)
            expect = youden_sweep(s, y)
            got = youden_threshold(s, y)
            assert got[0] == expect[0]
            assert got[1] == pytest.approx(expect[1], abs=1e-12)

    def test_rank_invariant_j(self):
        rng = np.random.default_rng(17)
        s = rng.random(40)
        y = (rng.random(40) < 0.5).astype(int)
        y[0], y[1] = 1, 0
        _, j0 = youden_threshold(s, y)
        _, j1 = youden_threshold(np.exp(s), y)
        assert j1 == pytest.approx(j0, abs=1e-12)


class TestConfusionMetrics:
    def test_perfect_at_youden(self):
        threshold, _ = youden_threshold(*PERFECT)
        assert confusion_metrics(*PERFECT, threshold) == (1.0, 1.0, 1.0)

    def test_plus_inf_is_all_negative(self):
        accuracy, sensitivity, specificity = confusion_metrics(*CROSSED, np.inf)
        assert sensitivity == 0.0
        assert specificity == 1.0

    def test_hand_table_at_0375(self):
        # preds at >= 0.375: 0.4 FP, 0.8 TP; 0.1 TN, 0.35 FN
        assert confusion_metrics(*CROSSED, 0.375) == (0.5, 0.5, 0.5)

    def test_single_class_raises(self):
        with pytest.raises(SingleClass):
            confusion_metrics([0.2, 0.4], [1, 1], 0.3)


class TestDelongPaired:
    def test_identical_scores_p_is_one(self):
        s = np.array([0.1, 0.9, 0.4, 0.6, 0.3, 0.8])
        y = np.array([0, 1, 0, 1, 0, 1])
        result = delong_paired(s, s, y)
        assert result.z == 0.0
        assert result.p_two_sided == 1.0
        assert result.variance_a == pytest.approx(result.covariance, abs=1e-15)

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(19)
        for _ in range(60):
            n = int(rng.integers(8, 40))
            y = np.r_[np.ones(max(2, int(rng.integers(2, n - 2))), dtype=int),
                      np.zeros(n, dtype=int)][:n]
            rng.shuffle(y)
            if y.sum() < 2 or (len(y) - y.sum()) < 2:
                continue
            a = rng.integers(0, 6, size=n) / 5.0  # coarse grid injects ties
            b = np.clip(a + rng.normal(0, 0.3, size=n), 0, 1)
            got = delong_paired(a, b, y)
            z_ref, p_ref = delong_paired_reference(a, b, y)
            assert got.z == pytest.approx(z_ref, abs=1e-8)
            assert got.p_two_sided == pytest.approx(p_ref, abs=1e-8)

    def test_variance_close_to_bootstrap(self):
        rng = np.random.default_rng(23)
        n = 300
        y = np.r_[np.ones(120, dtype=int), np.zeros(180, dtype=int)]
        s = np.where(y == 1, rng.normal(1.0, 1.0, n), rng.normal(0.0, 1.0, n))
        var_delong = delong_variance(s, y)
        replicates = []
        for _ in range(2000):
            idx = rng.integers(0, n, n)
            if 0 < y[idx].sum() < n:
                replicates.append(auc(s[idx], y[idx]))
        var_boot = np.var(replicates, ddof=1)
        assert var_delong == pytest.approx(var_boot, rel=0.2)


class TestDelongUnpaired:
    def test_identical_samples_p_is_one(self):
        s = np.array([0.2, 0.7, 0.4, 0.9, 0.1, 0.6])
        y = np.array([0, 1, 0, 1, 0, 1])
        result = delong_unpaired(s, y, s, y)
        assert result.z == 0.0 and result.p_two_sided == 1.0
        assert result.covariance == 0.0

    def test_order_preserving_shift_keeps_p_one(self):
        rng = np.random.default_rng(29)
        s = rng.random(40)
        y = (rng.random(40) < 0.5).astype(int)
        y[:2] = [1, 0]
        result = delong_unpaired(s, y, np.clip(s + 0.01, None, 1.5), y)
        assert result.auc_a == pytest.approx(result.auc_b, abs=1e-15)
        assert result.p_two_sided == 1.0

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(31)
        for _ in range(60):
            n1, n2 = int(rng.integers(8, 30)), int(rng.integers(8, 30))
            y1 = rng.permutation(np.r_[np.ones(max(2, n1 // 3), dtype=int),
                                       np.zeros(n1, dtype=int)][:n1])
            y2 = rng.permutation(np.r_[np.ones(max(2, n2 // 3), dtype=int),
                                       np.zeros(n2, dtype=int)][:n2])
            if min(y1.sum(), len(y1) - y1.sum(), y2.sum(), len(y2) - y2.sum()) < 2:
                continue
            s1 = rng.integers(0, 8, n1) / 7.0
            s2 = rng.integers(0, 8, n2) / 7.0
            got = delong_unpaired(s1, y1, s2, y2)
            z_ref, p_ref = delong_unpaired_reference(s1, y1, s2, y2)
            assert got.z == pytest.approx(z_ref, abs=1e-8)
            assert got.p_two_sided == pytest.approx(p_ref, abs=1e-8)


class TestBootstrap:
    def test_constant_statistic_degenerate_interval(self):
        s, y = PERFECT
        threshold, _ = youden_threshold(s, y)
        ci = bootstrap_ci(lambda a, b: confusion_metrics(a, b, threshold)[0], s, y,
                          replicates=200, seed=1)
        assert (ci.lower, ci.upper) == (1.0, 1.0)

    def test_seed_determinism(self):
        rng = np.random.default_rng(37)
        s = rng.random(60)
        y = (rng.random(60) < 0.5).astype(int)
        y[:2] = [1, 0]
        a = bootstrap_ci(auc, s, y, replicates=300, seed=42)
        b = bootstrap_ci(auc, s, y, replicates=300, seed=42)
        assert (a.lower, a.upper) == (b.lower, b.upper)

    def test_level_nesting(self):
        rng = np.random.default_rng(41)
        s = rng.random(80)
        y = (rng.random(80) < 0.5).astype(int)
        y[:2] = [1, 0]
        narrow = bootstrap_ci(auc, s, y, replicates=400, seed=5, level=0.90)
        wide = bootstrap_ci(auc, s, y, replicates=400, seed=5, level=0.95)
        assert wide.lower <= narrow.lower and narrow.upper <= wide.upper

    def test_degenerate_data_raises(self):
        with pytest.raises(DegenerateData):
            bootstrap_ci(auc, [0.4, 0.6], [1, 1], replicates=10, seed=0)

    def test_interval_orders(self):
        ci = ConfidenceInterval(lower=0.2, upper=0.4)
        assert ci.level == 0.95
        with pytest.raises(ValueError):
            ConfidenceInterval(lower=0.5, upper=0.4)


class TestBenjaminiHochberg:
    def test_single_p_identity(self):
        assert benjamini_hochberg([0.01]).tolist() == [0.01]

    def test_worked_vector_all_equal(self):
        out = benjamini_hochberg([0.01, 0.02, 0.03, 0.04])
        assert out == pytest.approx([0.04, 0.04, 0.04, 0.04], abs=1e-15)

    def test_worked_vector_monotone_pass(self):
        out = benjamini_hochberg([0.005, 0.05, 0.20])
        assert out == pytest.approx([0.015, 0.075, 0.20], abs=1e-15)

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            m = int(rng.integers(1, 25))
            p = np.round(rng.random(m), 3)  # rounded values inject ties
            assert benjamini_hochberg(p) == pytest.approx(bh_adjust_reference(p), abs=1e-12)

    def test_bounds_and_order(self):
        rng = np.random.default_rng(47)
        p = rng.random(30)
        q = benjamini_hochberg(p)
        assert np.all(q >= p - 1e-15)
        assert np.all(q <= np.minimum(p * len(p), 1.0) + 1e-15)
        assert np.all(np.diff(q[np.argsort(p, kind="mergesort")]) >= -1e-15)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            benjamini_hochberg([0.5, 1.2])


def _row(label, auc_value, positives):
    return LabelEvalRow(label=label, n_positive=positives, auc=auc_value)


class TestMacroAuc:
    def test_plain_mean(self):
        rows = [_row(f"l{i}", 0.8, {"test": 50}) for i in range(3)]
        mean, low, high, labels = macro_auc(rows)
        assert mean == pytest.approx(0.8, abs=1e-12)
        assert (low, high) == (0.8, 0.8)
        assert labels == ["l0", "l1", "l2"]

    def test_nine_positives_excluded_ten_included(self):
        rows = [_row("in", 0.9, {"internal": 10, "external": 10}),
                _row("out", 0.1, {"internal": 10, "external": 9})]
        mean, _, _, labels = macro_auc(rows)
        assert labels == ["in"]
        assert mean == 0.9

    def test_reported_shape_mean_and_range(self):
        # nine per-label values averaging 0.80 with range (0.62, 0.87)
        values = [0.87, 0.86, 0.86, 0.82, 0.81, 0.80, 0.78, 0.78, 0.62]
        rows = [_row(f"l{i}", v, {"internal": 12, "external": 12})
                for i, v in enumerate(values)]
        mean, low, high, labels = macro_auc(rows)
        assert mean == pytest.approx(0.80, abs=1e-12)
        assert (low, high) == (0.62, 0.87)
        assert len(labels) == 9

    def test_no_eligible_raises(self):
        with pytest.raises(NoEligibleLabels):
            macro_auc([_row("a", 0.7, {"test": 3})])

"""Score-matrix evaluation: threshold freezing, report shape, comparisons."""

from __future__ import annotations

import numpy as np
import pytest

from radlabel.core import BinaryLabelSheet, ScoreMatrix
from radlabel.evaluate import compare_paired, compare_unpaired, evaluate, truth_matrix
from radlabel.quality import IdMismatch


def _sheets(y: np.ndarray, labels, prefix="r") -> list[BinaryLabelSheet]:
    return [
        BinaryLabelSheet(report_id=f"{prefix}-{i:04d}", region="clavicle",
                         assignments={l: bool(v) for l, v in zip(labels, row)},
                         policy="ground_truth")
        for i, row in enumerate(y)
    ]


def _matrix(scores: np.ndarray, labels, prefix="r") -> ScoreMatrix:
    ids = tuple(f"{prefix}-{i:04d}" for i in range(len(scores)))
    return ScoreMatrix(labels=tuple(labels), report_ids=ids, scores=scores)


def synthetic_eval_inputs(seed=0, n_test=120, n_val=80, labels=("strong", "weak", "rare")):
    rng = np.random.default_rng(seed)

    def build(n):
        y = np.zeros((n, len(labels)), dtype=int)
        y[:, 0] = rng.random(n) < 0.4
        y[:, 1] = rng.random(n) < 0.3
        y[:, 2] = rng.random(n) < 0.06
        y[0, :] = 1  # both classes guaranteed
        y[1, :] = 0
        sep = {"strong": 2.2, "weak": 0.8, "rare": 1.5}
        logits = np.column_stack([
            sep[l] * (2 * y[:, j] - 1) + rng.normal(0, 1, n)
            for j, l in enumerate(labels)
        ])
        return y, 1 / (1 + np.exp(-logits))

    y_test, s_test = build(n_test)
    y_val, s_val = build(n_val)
    return (_matrix(s_test, labels, "t"), _sheets(y_test, labels, "t"),
            _matrix(s_val, labels, "v"), _sheets(y_val, labels, "v"))


class TestTruthMatrix:
    def test_alignment_and_values(self):
        labels = ("a", "b")
        sheets = _sheets(np.array([[1, 0], [0, 1]]), labels)
        out = truth_matrix(sheets, [s.report_id for s in sheets], labels)
        assert out.tolist() == [[1, 0], [0, 1]]

    def test_missing_sheet_raises(self):
        labels = ("a",)
        sheets = _sheets(np.array([[1]]), labels)
        with pytest.raises(IdMismatch):
            truth_matrix(sheets, ["r-0000", "r-9999"], labels)

    def test_uncertain_truth_rejected(self, clavicle_template):
        from conftest import make_sheet
        from radlabel.core import LabelState

        sheet = make_sheet(clavicle_template, {"Ossicles": LabelState.UNCERTAIN},
                           report_id="x", provenance="adjudicated")
        with pytest.raises(ValueError, match="test-grade"):
            truth_matrix([sheet], ["x"], clavicle_template.labels)


@pytest.fixture(scope="module")
def report():
    test_scores, test_truth, val_scores, val_truth = synthetic_eval_inputs()
    return evaluate(test_scores, test_truth, val_scores, val_truth,
                    min_positives=10, replicates=200, seed=33)


class TestEvaluate:
    def test_rows_cover_separable_labels(self, report):
        by_label = {r.label: r for r in report.rows}
        assert by_label["strong"].auc > by_label["weak"].auc > 0.5

    def test_thresholds_frozen_from_validation(self, report):
        test_scores, test_truth, val_scores, val_truth = synthetic_eval_inputs()
        from radlabel.stats import youden_threshold

        y_val = truth_matrix(val_truth, val_scores.report_ids, val_scores.labels)
        for row in report.rows:
            j = val_scores.labels.index(row.label)
            expected, _ = youden_threshold(val_scores.column(row.label), y_val[:, j])
            assert row.threshold == expected

    def test_cis_bracket_point_estimates(self, report):
        for row in report.rows:
            assert row.auc_ci.lower <= row.auc <= row.auc_ci.upper
            assert row.accuracy_ci.lower <= row.accuracy <= row.accuracy_ci.upper

    def test_macro_filter_by_positive_count(self, report):
        by_label = {r.label: r for r in report.rows}
        assert by_label["strong"].included_in_macro
        assert report.macro is not None
        assert "strong" in report.macro["labels"]

    def test_report_json_serializes(self, report):
        import json

        obj = report.to_json_obj()
        text = json.dumps(obj)
        assert "threshold_rule" in text
        assert obj["settings"]["threshold_source"] == "validation"

    def test_deterministic_given_seed(self):
        inputs = synthetic_eval_inputs()
        a = evaluate(*inputs, replicates=100, seed=5)
        b = evaluate(*synthetic_eval_inputs(), replicates=100, seed=5)
        assert a.to_json_obj() == b.to_json_obj()


class TestComparisons:
    def test_paired_same_scores_p_one(self):
        test_scores, test_truth, *_ = synthetic_eval_inputs()
        out = compare_paired(test_scores, test_scores, test_truth, min_positives=5)
        assert out["comparisons"], "no labels compared"
        for entry in out["comparisons"]:
            assert entry["p"] == 1.0
            assert entry["p_adjusted"] == 1.0
            assert not entry["significant"]

    def test_paired_requires_same_cases(self):
        test_scores, test_truth, val_scores, _ = synthetic_eval_inputs()
        with pytest.raises(IdMismatch):
            compare_paired(test_scores, val_scores, test_truth)

    def test_paired_detects_strong_vs_noise(self):
        rng = np.random.default_rng(44)
        labels = ("l",)
        n = 400
        y = (rng.random(n) < 0.5).astype(int)[:, None]
        strong = 1 / (1 + np.exp(-(3.0 * (2 * y[:, 0] - 1) + rng.normal(0, 1, n))))
        noise = rng.random(n)
        a = _matrix(strong[:, None], labels)
        b = _matrix(noise[:, None], labels)
        out = compare_paired(a, b, _sheets(y, labels), min_positives=5)
        assert out["comparisons"][0]["significant"]

    def test_unpaired_joint_min_positive_filter(self):
        labels = ("x",)
        rng = np.random.default_rng(3)
        y1 = np.zeros((100, 1), dtype=int)
        y1[:20, 0] = 1
        y2 = np.zeros((100, 1), dtype=int)
        y2[:9, 0] = 1  # below the joint filter
        s1 = _matrix(rng.random((100, 1)), labels, "a")
        s2 = _matrix(rng.random((100, 1)), labels, "b")
        out = compare_unpaired(s1, _sheets(y1, labels, "a"), s2, _sheets(y2, labels, "b"))
        assert out["comparisons"] == []
        assert out["skipped"][0]["label"] == "x"

    def test_unpaired_identical_datasets(self):
        test_scores, test_truth, *_ = synthetic_eval_inputs()
        out = compare_unpaired(test_scores, test_truth, test_scores, test_truth,
                               min_positives=5)
        for entry in out["comparisons"]:
            assert entry["p"] == 1.0

    def test_bh_applied_across_labels(self):
        test_scores, test_truth, val_scores, val_truth = synthetic_eval_inputs(seed=9)
        out = compare_paired(test_scores, val_scores.__class__(
            labels=test_scores.labels, report_ids=test_scores.report_ids,
            scores=np.clip(test_scores.scores + 0.001, 0, 1)),
            test_truth, min_positives=5)
        ps = [e["p"] for e in out["comparisons"]]
        qs = [e["p_adjusted"] for e in out["comparisons"]]
        from oracles import bh_adjust_reference

        assert qs == pytest.approx(bh_adjust_reference(ps), abs=1e-12)

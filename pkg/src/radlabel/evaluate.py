"""End-to-end scoring of a classifier's ScoreMatrix against ground truth.

Per-label operating thresholds always come from the validation split and are
then frozen for the test evaluation; the classification rule everywhere is
``score >= threshold  =>  positive``. Confidence intervals are percentile
bootstrap; comparisons use the DeLong test with Benjamini-Hochberg across
labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import BinaryLabelSheet, LabelSheet, LabelState, ScoreMatrix
from .quality import IdMismatch
from .stats import (
    ConfidenceInterval,
    LabelEvalRow,
    NoEligibleLabels,
    auc,
    benjamini_hochberg,
    bootstrap_ci,
    confusion_metrics,
    delong_paired,
    delong_unpaired,
    macro_auc,
    youden_threshold,
)

__all__ = ["EvalReport", "evaluate", "compare_paired", "compare_unpaired", "truth_matrix"]


def truth_matrix(sheets: Sequence[LabelSheet | BinaryLabelSheet],
                 report_ids: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    """0/1 truth aligned to (report_ids, labels); truth must be test-grade."""
    by_id: dict[str, Mapping] = {}
    for sheet in sheets:
        by_id[sheet.report_id] = sheet.assignments
    missing = [rid for rid in report_ids if rid not in by_id]
    if missing:
        raise IdMismatch(f"truth lacks sheets for {missing[:5]}")
    out = np.zeros((len(report_ids), len(labels)), dtype=int)
    for i, rid in enumerate(report_ids):
        assignments = by_id[rid]
        for j, label in enumerate(labels):
            if label not in assignments:
                raise IdMismatch(f"{rid}: truth lacks label {label!r}")
            value = assignments[label]
            if isinstance(value, LabelState):
                if value is LabelState.UNCERTAIN:
                    raise ValueError(f"{rid}: truth is not test-grade ({label!r} is Uncertain)")
                value = value is LabelState.TRUE
            out[i, j] = int(bool(value))
    return out


def _ci_json(ci: ConfidenceInterval | None) -> list[float] | None:
    return None if ci is None else [ci.lower, ci.upper]


@dataclass(frozen=True)
class EvalReport:
    rows: list[LabelEvalRow]
    skipped: list[dict]
    macro: dict | None
    settings: dict

    def to_json_obj(self) -> dict:
        return {
            "settings": self.settings,
            "labels": [
                {
                    "label": r.label,
                    "n_positive": dict(r.n_positive),
                    "auc": r.auc,
                    "auc_ci": _ci_json(r.auc_ci),
                    "threshold": r.threshold,
                    "youden_j": r.youden_j,
                    "accuracy": r.accuracy,
                    "accuracy_ci": _ci_json(r.accuracy_ci),
                    "sensitivity": r.sensitivity,
                    "sensitivity_ci": _ci_json(r.sensitivity_ci),
                    "specificity": r.specificity,
                    "specificity_ci": _ci_json(r.specificity_ci),
                    "included_in_macro": r.included_in_macro,
                }
                for r in self.rows
            ],
            "skipped": self.skipped,
            "macro": self.macro,
        }


def evaluate(test_scores: ScoreMatrix,
             test_truth: Sequence[LabelSheet | BinaryLabelSheet],
             val_scores: ScoreMatrix,
             val_truth: Sequence[LabelSheet | BinaryLabelSheet],
             min_positives: int = 10, replicates: int = 1000, seed: int = 0,
             level: float = 0.95) -> EvalReport:
    """Per-label AUC/threshold/confusion metrics with bootstrap intervals."""
    y_test_all = truth_matrix(test_truth, test_scores.report_ids, test_scores.labels)
    shared = [l for l in test_scores.labels if l in val_scores.labels]
    y_val_all = truth_matrix(val_truth, val_scores.report_ids, shared)

    rows: list[LabelEvalRow] = []
    skipped: list[dict] = []
    for j, label in enumerate(test_scores.labels):
        n_pos = {"test": int(y_test_all[:, j].sum()),
                 "validation": 0}
        if label not in val_scores.labels:
            skipped.append({"label": label, "reason": "missing from validation scores"})
            continue
        vj = shared.index(label)
        s_val = val_scores.column(label)
        y_val = y_val_all[:, vj]
        n_pos["validation"] = int(y_val.sum())
        s_test = test_scores.column(label)
        y_test = y_test_all[:, j]
        if n_pos["validation"] in (0, len(y_val)):
            skipped.append({"label": label, "reason": "single class in validation"})
            continue
        if n_pos["test"] in (0, len(y_test)):
            skipped.append({"label": label, "reason": "single class in test"})
            continue

        threshold, j_stat = youden_threshold(s_val, y_val)
        label_auc = auc(s_test, y_test)
        accuracy, sensitivity, specificity = confusion_metrics(s_test, y_test, threshold)

        def _seeded(slot: int) -> list[int]:
            return [seed, j, slot]

        auc_ci = bootstrap_ci(auc, s_test, y_test, replicates=replicates,
                              seed=_seeded(0), level=level)
        metric_cis = []
        for slot, picker in ((1, 0), (2, 1), (3, 2)):
            metric_cis.append(bootstrap_ci(
                lambda s, y, _k=picker: confusion_metrics(s, y, threshold)[_k],
                s_test, y_test, replicates=replicates, seed=_seeded(slot), level=level,
            ))
        rows.append(LabelEvalRow(
            label=label, n_positive=n_pos, auc=label_auc, auc_ci=auc_ci,
            threshold=threshold, youden_j=j_stat,
            accuracy=accuracy, accuracy_ci=metric_cis[0],
            sensitivity=sensitivity, sensitivity_ci=metric_cis[1],
            specificity=specificity, specificity_ci=metric_cis[2],
            included_in_macro=n_pos["test"] >= min_positives,
        ))

    macro: dict | None
    included = [
        LabelEvalRow(label=r.label, n_positive={"test": r.n_positive["test"]},
                     auc=r.auc, included_in_macro=r.included_in_macro)
        for r in rows
    ]
    try:
        mean, low, high, names = macro_auc(included, min_positives=min_positives)
        macro = {"mean_auc": mean, "min_auc": low, "max_auc": high, "labels": names}
    except NoEligibleLabels:
        macro = None

    settings = {
        "min_positives": min_positives,
        "replicates": replicates,
        "seed": seed,
        "level": level,
        "threshold_rule": "score >= threshold",
        "threshold_source": "validation",
    }
    return EvalReport(rows=rows, skipped=skipped, macro=macro, settings=settings)


def _comparison_table(entries: list[dict], alpha: float) -> list[dict]:
    if entries:
        adjusted = benjamini_hochberg([e["p"] for e in entries])
        for entry, q in zip(entries, adjusted):
            entry["p_adjusted"] = float(q)
            entry["significant"] = bool(q < alpha)
    return entries


def compare_paired(scores_a: ScoreMatrix, scores_b: ScoreMatrix,
                   truth: Sequence[LabelSheet | BinaryLabelSheet],
                   min_positives: int = 10, alpha: float = 0.05) -> dict:
    """DeLong tests of two models on the same cases, BH-adjusted across labels."""
    if set(scores_a.report_ids) != set(scores_b.report_ids):
        raise IdMismatch("paired comparison needs identical case sets")
    order = list(scores_a.report_ids)
    labels = [l for l in scores_a.labels if l in scores_b.labels]
    y_all = truth_matrix(truth, order, labels)
    reorder = [list(scores_b.report_ids).index(rid) for rid in order]

    entries: list[dict] = []
    skipped: list[dict] = []
    for j, label in enumerate(labels):
        y = y_all[:, j]
        n_pos = int(y.sum())
        if n_pos < min_positives or n_pos == len(y):
            skipped.append({"label": label, "reason": f"positives={n_pos}"})
            continue
        a = scores_a.column(label)
        b = scores_b.column(label)[reorder]
        result = delong_paired(a, b, y)
        entries.append({"label": label, "n_positive": n_pos, "auc_a": result.auc_a,
                        "auc_b": result.auc_b, "z": result.z, "p": result.p_two_sided})
    return {"mode": "paired", "alpha": alpha,
            "comparisons": _comparison_table(entries, alpha), "skipped": skipped}


def compare_unpaired(scores_1: ScoreMatrix, truth_1: Sequence[LabelSheet | BinaryLabelSheet],
                     scores_2: ScoreMatrix, truth_2: Sequence[LabelSheet | BinaryLabelSheet],
                     min_positives: int = 10, alpha: float = 0.05) -> dict:
    """DeLong tests of one model on two independent test sets.

    A label enters only with at least ``min_positives`` positives in both
    sets, mirroring the joint eligibility filter of the macro average.
    """
    labels = [l for l in scores_1.labels if l in scores_2.labels]
    y1_all = truth_matrix(truth_1, scores_1.report_ids, labels)
    y2_all = truth_matrix(truth_2, scores_2.report_ids, labels)

    entries: list[dict] = []
    skipped: list[dict] = []
    for j, label in enumerate(labels):
        y1, y2 = y1_all[:, j], y2_all[:, j]
        n1, n2 = int(y1.sum()), int(y2.sum())
        if n1 < min_positives or n2 < min_positives or n1 == len(y1) or n2 == len(y2):
            skipped.append({"label": label, "reason": f"positives={n1}/{n2}"})
            continue
        result = delong_unpaired(scores_1.column(label), y1, scores_2.column(label), y2)
        entries.append({"label": label, "n_positive": [n1, n2], "auc_a": result.auc_a,
                        "auc_b": result.auc_b, "z": result.z, "p": result.p_two_sided})
    return {"mode": "unpaired", "alpha": alpha,
            "comparisons": _comparison_table(entries, alpha), "skipped": skipped}

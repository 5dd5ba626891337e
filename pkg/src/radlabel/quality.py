"""Extraction quality against adjudicated ground truth.

Cells are compared by exact three-state match. That single rule covers the
strict scoring against test-grade (binary) truth too: an extracted Uncertain
can never equal a definitive truth cell, so it counts as incorrect there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import LabelSheet, RadlabelError

__all__ = [
    "IdMismatch",
    "ExtractionQuality",
    "UncertaintyDetection",
    "label_accuracy",
    "report_accuracy",
    "uncertainty_detection",
    "extraction_quality",
]


class IdMismatch(RadlabelError):
    code = "id_mismatch"


def _paired(extracted: Sequence[LabelSheet],
            truth: Sequence[LabelSheet]) -> list[tuple[LabelSheet, LabelSheet]]:
    ext = {sheet.report_id: sheet for sheet in extracted}
    tru = {sheet.report_id: sheet for sheet in truth}
    if set(ext) != set(tru):
        only_ext = sorted(set(ext) - set(tru))[:5]
        only_tru = sorted(set(tru) - set(ext))[:5]
        raise IdMismatch(f"report id sets differ (extra: {only_ext}, missing: {only_tru})")
    pairs = []
    for rid in sorted(ext):
        a, b = ext[rid], tru[rid]
        if a.region != b.region:
            raise IdMismatch(f"{rid}: region {a.region!r} vs {b.region!r}")
        if set(a.assignments) != set(b.assignments):
            raise IdMismatch(f"{rid}: label domains differ")
        pairs.append((a, b))
    return pairs


def _cell_errors(pairs: Sequence[tuple[LabelSheet, LabelSheet]]) -> tuple[int, int, int]:
    cells = 0
    wrong = 0
    reports_clean = 0
    for extracted, truth in pairs:
        mistakes = sum(
            extracted.assignments[label] is not state
            for label, state in truth.assignments.items()
        )
        cells += len(truth.assignments)
        wrong += mistakes
        reports_clean += mistakes == 0
    return cells, wrong, reports_clean


def label_accuracy(extracted: Sequence[LabelSheet], truth: Sequence[LabelSheet]) -> float:
    """Fraction of (report, label) cells whose extracted state matches truth."""
    pairs = _paired(extracted, truth)
    cells, wrong, _ = _cell_errors(pairs)
    if cells == 0:
        raise IdMismatch("empty corpus")
    return (cells - wrong) / cells


def report_accuracy(extracted: Sequence[LabelSheet], truth: Sequence[LabelSheet]) -> float:
    """Fraction of reports with every cell extracted correctly."""
    pairs = _paired(extracted, truth)
    if not pairs:
        raise IdMismatch("empty corpus")
    _, _, clean = _cell_errors(pairs)
    return clean / len(pairs)


@dataclass(frozen=True)
class UncertaintyDetection:
    """Report-level uncertainty bookkeeping against three-state truth."""

    present: int   # reports whose truth holds >= 1 Uncertain
    detected: int  # reports whose extraction holds >= 1 Uncertain
    overlap: int   # reports counted in both

    def to_json_obj(self) -> dict:
        return {"present": self.present, "detected": self.detected, "overlap": self.overlap}


def uncertainty_detection(extracted: Sequence[LabelSheet],
                          truth_three_state: Sequence[LabelSheet]) -> UncertaintyDetection:
    """How much manually identifiable uncertainty the extraction caught."""
    pairs = _paired(extracted, truth_three_state)
    present = detected = overlap = 0
    for ext, tru in pairs:
        t = tru.has_uncertain()
        e = ext.has_uncertain()
        present += t
        detected += e
        overlap += t and e
    return UncertaintyDetection(present=present, detected=detected, overlap=overlap)


@dataclass(frozen=True)
class ExtractionQuality:
    labels_total: int
    labels_correct: int
    reports_total: int
    reports_all_correct: int
    uncertainty_present_reports: int = 0
    uncertainty_detected_reports: int = 0

    @property
    def label_accuracy(self) -> float:
        return self.labels_correct / self.labels_total

    @property
    def report_accuracy(self) -> float:
        return self.reports_all_correct / self.reports_total

    def to_json_obj(self) -> dict:
        return {
            "labels_total": self.labels_total,
            "labels_correct": self.labels_correct,
            "label_accuracy": self.label_accuracy,
            "reports_total": self.reports_total,
            "reports_all_correct": self.reports_all_correct,
            "report_accuracy": self.report_accuracy,
            "uncertainty_present_reports": self.uncertainty_present_reports,
            "uncertainty_detected_reports": self.uncertainty_detected_reports,
        }


def extraction_quality(extracted: Sequence[LabelSheet], truth: Sequence[LabelSheet],
                       three_state: bool = True) -> ExtractionQuality:
    """Bundle of label/report accuracy plus uncertainty detection counts.

    With three_state=False the truth must be test-grade (no Uncertain cell);
    uncertainty counts then report zero present by construction.
    """
    pairs = _paired(extracted, truth)
    if not pairs:
        raise IdMismatch("empty corpus")
    if not three_state:
        offenders = [t.report_id for _, t in pairs if t.has_uncertain()]
        if offenders:
            raise ValueError(f"truth is not test-grade; Uncertain in {offenders[:5]}")
    cells, wrong, clean = _cell_errors(pairs)
    detection = uncertainty_detection(extracted, truth)
    return ExtractionQuality(
        labels_total=cells,
        labels_correct=cells - wrong,
        reports_total=len(pairs),
        reports_all_correct=clean,
        uncertainty_present_reports=detection.present,
        uncertainty_detected_reports=detection.detected,
    )

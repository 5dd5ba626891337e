"""Uncertainty reassignment: three-state sheets to binary training labels.

The inclusive policy treats hedged findings as present, the exclusive policy
as absent. Both are pure corpus transforms over one extraction run; original
sheets are never mutated.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import BinaryLabelSheet, LabelSheet, LabelState, MixedRegions

__all__ = ["StateCensus", "reassign_uncertain", "census", "census_by_label", "POLICIES"]

POLICIES = ("inclusive", "exclusive")


@dataclass(frozen=True)
class StateCensus:
    """Cell counts over a corpus; sums to #reports x #labels."""

    true_count: int
    false_count: int
    uncertain_count: int

    @property
    def total(self) -> int:
        return self.true_count + self.false_count + self.uncertain_count

    def to_json_obj(self) -> dict:
        return {"true": self.true_count, "false": self.false_count,
                "uncertain": self.uncertain_count, "total": self.total}


def reassign_uncertain(sheet: LabelSheet, policy: str) -> BinaryLabelSheet:
    """Map Uncertain per policy; True/False pass through unchanged."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    uncertain_to = policy == "inclusive"
    assignments = {
        label: (uncertain_to if state is LabelState.UNCERTAIN else state is LabelState.TRUE)
        for label, state in sheet.assignments.items()
    }
    return BinaryLabelSheet(report_id=sheet.report_id, region=sheet.region,
                            assignments=assignments, policy=policy)


def _single_region(corpus: Sequence[LabelSheet]) -> None:
    regions = {sheet.region for sheet in corpus}
    if len(regions) > 1:
        raise MixedRegions(regions)


def census(corpus: Sequence[LabelSheet]) -> StateCensus:
    """Exact state counts over every assignment cell of a one-region corpus."""
    _single_region(corpus)
    counts = Counter()
    for sheet in corpus:
        counts.update(sheet.assignments.values())
    return StateCensus(
        true_count=counts[LabelState.TRUE],
        false_count=counts[LabelState.FALSE],
        uncertain_count=counts[LabelState.UNCERTAIN],
    )


def census_by_label(corpus: Sequence[LabelSheet]) -> dict[str, StateCensus]:
    """Per-label state counts; keys follow the first sheet's label order."""
    _single_region(corpus)
    if not corpus:
        return {}
    per_label: dict[str, Counter] = {label: Counter() for label in corpus[0].assignments}
    for sheet in corpus:
        for label, state in sheet.assignments.items():
            per_label[label][state] += 1
    return {
        label: StateCensus(
            true_count=c[LabelState.TRUE],
            false_count=c[LabelState.FALSE],
            uncertain_count=c[LabelState.UNCERTAIN],
        )
        for label, c in per_label.items()
    }

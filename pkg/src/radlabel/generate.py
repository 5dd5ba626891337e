"""Synthetic German-flavored report corpora with known three-state truth.

Construction guarantees, given a feasible profile:

- per-label True/Uncertain cell counts land exactly on the requested values;
- truth sheets are hierarchy-consistent (no child outranks a parent);
- identical (profile, seed) reproduce the corpus byte for byte.

Labels connected through hierarchy edges share one seeded report permutation
per connected family; a label's True cells are that permutation's first
``true_count`` slots and its Uncertain cells the next ``uncertain_count``.
Prefix nesting is what makes exactness and consistency compatible.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import LabelSheet, LabelState, LabelTemplate, RadlabelError, ReportDocument, get_template

__all__ = [
    "ProfileInfeasible",
    "CorpusProfile",
    "generate_corpus",
    "default_prevalence",
    "HEDGE_SENTENCES",
    "FINDING_SENTENCE",
]


class ProfileInfeasible(RadlabelError):
    code = "profile_infeasible"


# One sentence shape per state; hedge wording rotates deterministically.
FINDING_SENTENCE = "Nachweis: {label}."
HEDGE_SENTENCES = (
    "Verdacht auf {label}.",
    "{label} nicht sicher abgrenzbar.",
    "Möglicherweise {label}.",
    "{label} nicht ausgeschlossen.",
    "Am ehesten {label}.",
)
_NORMAL_LINE = "Regelrechter Befund ohne Nachweis einer frischen ossären Läsion."
_FOOTER = "Beurteilung elektronisch erstellt."
_REGION_DE = {"clavicle": "Klavikula", "elbow": "Ellenbogen", "thumb": "Daumen"}

# disjoint pools so a patient and the reading physician never share a surname
_SURNAMES = ("Müller", "Schmidt", "Schneider", "Fischer", "Weber")
_PHYSICIANS = ("Meyer", "Wagner", "Becker", "Schulz", "Hoffmann")


@dataclass(frozen=True)
class CorpusProfile:
    """Per-label True/Uncertain cell targets for an n-report corpus."""

    region: str
    n_reports: int
    true_counts: Mapping[str, int]
    uncertain_counts: Mapping[str, int]

    @classmethod
    def from_rates(cls, region: str, n_reports: int,
                   prevalence: Mapping[str, float] | float,
                   uncertainty_rate: float = 0.0) -> "CorpusProfile":
        """Counts from per-label prevalences; hedges take a share of positives.

        raw = round(prevalence * n); uncertain = round(rate * raw);
        true = raw - uncertain, so inclusive positives equal raw exactly.
        """
        template = get_template(region)
        if not isinstance(prevalence, Mapping):
            prevalence = {label: float(prevalence) for label in template.labels}
        true_counts: dict[str, int] = {}
        uncertain_counts: dict[str, int] = {}
        for label in template.labels:
            raw = round(float(prevalence.get(label, 0.0)) * n_reports)
            unc = round(uncertainty_rate * raw)
            true_counts[label] = raw - unc
            uncertain_counts[label] = unc
        return cls(region=region, n_reports=n_reports,
                   true_counts=true_counts, uncertain_counts=uncertain_counts)

    def validate(self, template: LabelTemplate | None = None) -> None:
        """Raise ProfileInfeasible unless prefix construction can satisfy this."""
        template = template or get_template(self.region)
        problems: list[str] = []
        for label in template.labels:
            t = self.true_counts.get(label, 0)
            u = self.uncertain_counts.get(label, 0)
            if t < 0 or u < 0 or t + u > self.n_reports:
                problems.append(f"{label}: counts ({t}, {u}) out of range for n={self.n_reports}")
        for child, parent in template.hierarchy:
            tc = self.true_counts.get(child, 0)
            tp = self.true_counts.get(parent, 0)
            uc = self.uncertain_counts.get(child, 0)
            up = self.uncertain_counts.get(parent, 0)
            if tc > tp:
                problems.append(f"{child} true={tc} exceeds parent {parent} true={tp}")
            if tc + uc > tp + up:
                problems.append(f"{child} true+unc={tc + uc} exceeds parent {parent} {tp + up}")
        if problems:
            raise ProfileInfeasible("; ".join(problems))

    def relaxed(self, template: LabelTemplate | None = None) -> "CorpusProfile":
        """Minimal parent-count bumps that make the profile feasible."""
        template = template or get_template(self.region)
        t = {label: int(self.true_counts.get(label, 0)) for label in template.labels}
        u = {label: int(self.uncertain_counts.get(label, 0)) for label in template.labels}
        for label in template.topological_order():
            for parent in template.parents_of(label):
                t[parent] = max(t[parent], t[label])
                if t[label] + u[label] > t[parent] + u[parent]:
                    u[parent] = t[label] + u[label] - t[parent]
        relaxed = CorpusProfile(region=self.region, n_reports=self.n_reports,
                                true_counts=t, uncertain_counts=u)
        relaxed.validate(template)
        return relaxed


def default_prevalence(region: str) -> dict[str, float]:
    """A hierarchy-feasible, vaguely realistic prevalence profile per region."""
    profiles: dict[str, dict[str, float]] = {
        "clavicle": {
            "Fracture (All Locations)": 0.32,
            "Medial Third Fracture": 0.03,
            "Middle Third Fracture": 0.18,
            "Lateral Third Fracture": 0.12,
            "Comminuted or Fragmented Fracture (All Locations)": 0.12,
            "Displacement": 0.28,
            "Sclerotic Lesion": 0.01,
            "Lytic Lesion": 0.008,
            "Joint Dislocation (All Locations)": 0.03,
            "Joint Subluxation (All Locations)": 0.02,
            "Joint Degeneration (All Locations)": 0.08,
            "Acromioclavicular Joint - Joint Space widened": 0.035,
            "Acromioclavicular Joint - Joint Space narrowed": 0.01,
            "Acromioclavicular Joint - Subluxation": 0.016,
            "Acromioclavicular Joint - Dislocation": 0.025,
            "Acromioclavicular Joint Degeneration": 0.05,
            "Sternoclavicular Joint - Joint Space widened": 0.004,
            "Sternoclavicular Joint - Joint Space narrowed": 0.004,
            "Sternoclavicular Joint - Subluxation": 0.003,
            "Sternoclavicular Joint - Dislocation": 0.004,
            "Sternoclavicular Joint Degeneration": 0.006,
            "Swelling or Hematoma": 0.03,
            "Soft Tissue Calcifications": 0.035,
            "Soft Tissues Masses or Mass-like lesions": 0.006,
            "Foreign Bodies": 0.014,
            "Ossicles": 0.008,
        },
        "elbow": {
            "Fracture (All Locations)": 0.35,
            "Lytic Lesion": 0.008,
            "Sclerotic Lesion": 0.015,
            "Distal Humerus - Fracture": 0.05,
            "Distal Humerus - Comminuted or Fragmented Fracture": 0.015,
            "Distal Humerus - Displacement": 0.02,
            "Distal Humerus Fracture - Extension into Joint": 0.01,
            "Olecranon Fracture": 0.06,
            "Olecranon - Displaced Fracture": 0.03,
            "Olecranon - Comminuted or Fragmented Fracture": 0.012,
            "Coronoid Process Fracture": 0.02,
            "Coronoid Process - Avulsion of the tip": 0.008,
            "Ulna Fracture": 0.04,
            "Radial Head Fracture": 0.22,
            "Radial Head - Displaced": 0.04,
            "Radial Head - Comminuted or Fragmented Fracture": 0.012,
            "Radial Neck Fracture": 0.03,
            "Radial Neck - Displaced": 0.004,
            "Radial Neck - Comminuted or Fragmented Fracture": 0.004,
            "Radius Fracture": 0.26,
            "Joint Subluxation (All Locations)": 0.006,
            "Joint Dislocation (All Locations)": 0.02,
            "Joint Degeneration (All Locations)": 0.12,
            "Soft Tissue Calcifications": 0.12,
            "Soft Tissue Masses or Mass-like lesions": 0.005,
            "Fat Pad Sign": 0.18,
            "Foreign Bodies": 0.03,
            "Ossicles": 0.045,
            "Exostosis": 0.045,
        },
        "thumb": {
            "Fracture (All Locations)": 0.30,
            "Comminuted or Fragmented Fracture (All Locations)": 0.05,
            "First Metacarpal Bone Fracture": 0.05,
            "First Metacarpal Bone - Comminuted or Fragmented Fracture": 0.012,
            "Proximal Phalanx Fracture": 0.09,
            "Proximal Phalanx - Comminuted or Fragmented Fracture": 0.012,
            "Distal Phalanx Fracture": 0.18,
            "Distal Phalanx - Comminuted or Fragmented Fracture": 0.035,
            "Joint Subluxation (All Locations)": 0.05,
            "Joint Dislocation (All Locations)": 0.02,
            "Joint Degeneration (All Locations)": 0.18,
            "Carpometacarpal Joint - Subluxation": 0.012,
            "Carpometacarpal Joint - Dislocation": 0.008,
            "Carpometacarpal Joint Degeneration": 0.11,
            "Metacarpophalangeal Joint - Subluxation": 0.025,
            "Metacarpophalangeal Joint - Dislocation": 0.006,
            "Metacarpophalangeal Joint Degeneration": 0.045,
            "Interphalangeal Joint - Subluxation": 0.02,
            "Interphalangeal Joint - Dislocation": 0.015,
            "Interphalangeal Joint Degeneration": 0.085,
            "Swelling/Dactylitis": 0.09,
            "Soft Tissue Calcifications": 0.04,
            "Soft Tissues Masses or Mass-like lesions": 0.005,
            "Foreign Bodies": 0.04,
            "Ossicles": 0.11,
        },
    }
    if region not in profiles:
        raise KeyError(f"no default prevalence for region {region!r}")
    return dict(profiles[region])


def _families(template: LabelTemplate) -> list[list[str]]:
    """Weakly-connected hierarchy components, in template order."""
    parent_of: dict[str, str] = {label: label for label in template.labels}

    def find(x: str) -> str:
        while parent_of[x] != x:
            parent_of[x] = parent_of[parent_of[x]]
            x = parent_of[x]
        return x

    for child, parent in template.hierarchy:
        root_c, root_p = find(child), find(parent)
        if root_c != root_p:
            parent_of[root_c] = root_p
    groups: dict[str, list[str]] = {}
    for label in template.labels:
        groups.setdefault(find(label), []).append(label)
    return [groups[root] for root in sorted(groups, key=template.labels.index)]


def _hedge_sentence(report_id: str, label: str) -> str:
    idx = zlib.crc32(f"{report_id}:{label}".encode("utf-8")) % len(HEDGE_SENTENCES)
    return HEDGE_SENTENCES[idx].format(label=label)


def _report_text(report_id: str, region: str, sheet: LabelSheet,
                 pii: dict[str, str] | None) -> str:
    lines = [f"Röntgen {_REGION_DE.get(region, region)} in zwei Ebenen."]
    if pii:
        lines.append(
            f"Patient: {pii['salutation']} {pii['patient_name']}, geboren am {pii['date']}, "
            f"Fallnummer {pii['patient_id']}."
        )
        lines.append(f"Befundung durch Dr. {pii['physician']}.")
    findings = 0
    for label, state in sheet.assignments.items():
        if state is LabelState.TRUE:
            lines.append(FINDING_SENTENCE.format(label=label))
            findings += 1
        elif state is LabelState.UNCERTAIN:
            lines.append(_hedge_sentence(report_id, label))
            findings += 1
    if findings == 0:
        lines.append(_NORMAL_LINE)
    lines.append(_FOOTER)
    return "\n".join(lines)


def generate_corpus(region: str, n: int,
                    prevalence: Mapping[str, float] | float | None = None,
                    uncertainty_rate: float = 0.0, seed: int = 0,
                    with_pii: bool = False,
                    profile: CorpusProfile | None = None,
                    ) -> tuple[list[ReportDocument], list[LabelSheet]]:
    """Reports plus their three-state truth sheets.

    Sentences encode states bidirectionally: a "Nachweis:" line appears for
    exactly the True cells and a hedge line for exactly the Uncertain cells.
    """
    template = get_template(region)
    if profile is None:
        if prevalence is None:
            prevalence = default_prevalence(region)
        profile = CorpusProfile.from_rates(region, n, prevalence, uncertainty_rate)
    elif profile.n_reports != n:
        raise ValueError(f"profile covers {profile.n_reports} reports, asked for {n}")
    profile.validate(template)

    rng = np.random.default_rng(seed)
    width = max(5, len(str(n)))
    report_ids = [f"{region[:2]}-{i:0{width}d}" for i in range(n)]

    # slot_of[label][report index] = position in the family permutation
    slot_of: dict[str, np.ndarray] = {}
    for family in _families(template):
        perm = rng.permutation(n)
        slots = np.empty(n, dtype=int)
        slots[perm] = np.arange(n)
        for label in family:
            slot_of[label] = slots

    truth: list[LabelSheet] = []
    reports: list[ReportDocument] = []
    for i, report_id in enumerate(report_ids):
        assignments: dict[str, LabelState] = {}
        for label in template.labels:
            slot = slot_of[label][i]
            t = profile.true_counts.get(label, 0)
            u = profile.uncertain_counts.get(label, 0)
            if slot < t:
                assignments[label] = LabelState.TRUE
            elif slot < t + u:
                assignments[label] = LabelState.UNCERTAIN
            else:
                assignments[label] = LabelState.FALSE
        sheet = LabelSheet(report_id=report_id, region=region,
                           assignments=assignments, provenance="adjudicated")
        truth.append(sheet)

        pii = None
        metadata: dict[str, str] = {}
        if with_pii:
            pii = {
                "salutation": "Herr" if rng.random() < 0.5 else "Frau",
                "patient_name": _SURNAMES[int(rng.integers(0, len(_SURNAMES)))],
                "physician": _PHYSICIANS[int(rng.integers(0, len(_PHYSICIANS)))],
                "patient_id": f"{int(rng.integers(10_000_000, 100_000_000))}",
                "date": (f"{int(rng.integers(1, 29)):02d}."
                         f"{int(rng.integers(1, 13)):02d}."
                         f"{int(rng.integers(1950, 2010))}"),
            }
            metadata = {k: pii[k] for k in ("patient_name", "physician", "patient_id", "date")}
        reports.append(ReportDocument(
            report_id=report_id, region=region,
            text=_report_text(report_id, region, sheet, pii),
            metadata=metadata,
        ))
    return reports, truth

"""Shared domain vocabulary: three-state labels, regions, templates, and sheets.

Every other module builds on the types defined here. All types are immutable
values and safe to share across threads; "mutation" always means constructing
a new instance.
"""

from __future__ import annotations

import enum
import json
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "RadlabelError",
    "MissingLabel",
    "ExtraLabel",
    "MixedRegions",
    "LabelState",
    "severity",
    "LabelTemplate",
    "ReportDocument",
    "LabelSheet",
    "BinaryLabelSheet",
    "ScoreMatrix",
    "normalize_label",
    "get_template",
    "register_template",
    "available_regions",
    "BUILTIN_REGIONS",
]


class RadlabelError(Exception):
    """Base class for all typed errors raised by this package."""

    code = "error"


class MissingLabel(RadlabelError):
    code = "missing_label"

    def __init__(self, label: str):
        super().__init__(f"assignment is missing template label {label!r}")
        self.label = label


class ExtraLabel(RadlabelError):
    code = "extra_label"

    def __init__(self, label: str):
        super().__init__(f"assignment contains label {label!r} not in the template")
        self.label = label


class MixedRegions(RadlabelError):
    code = "mixed_regions"

    def __init__(self, regions: Iterable[str]):
        super().__init__(f"corpus mixes regions: {sorted(set(regions))}")


class LabelState(enum.Enum):
    """Finding state: present, absent, or hedged in the report."""

    TRUE = "true"
    FALSE = "false"
    UNCERTAIN = "uncertain"

    def to_json(self) -> object:
        """JSON value used in sheet files and template fills (bool or "uncertain")."""
        if self is LabelState.TRUE:
            return True
        if self is LabelState.FALSE:
            return False
        return "uncertain"

    @classmethod
    def from_json(cls, value: object) -> "LabelState":
        """Inverse of :meth:`to_json`; also normalizes "true"/"false" strings.

        Raises ValueError for anything else.
        """
        if value is True:
            return cls.TRUE
        if value is False:
            return cls.FALSE
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered == "true":
                return cls.TRUE
            if lowered == "false":
                return cls.FALSE
            if lowered == "uncertain":
                return cls.UNCERTAIN
        raise ValueError(f"not a label state: {value!r}")


_SEVERITY = {LabelState.TRUE: 2, LabelState.UNCERTAIN: 1, LabelState.FALSE: 0}


def severity(state: LabelState) -> int:
    """Total severity order used by hierarchy propagation: True(2) > Uncertain(1) > False(0)."""
    return _SEVERITY[state]


def normalize_label(name: str) -> str:
    """Canonical label-name form: Unicode NFC plus surrounding-whitespace trim.

    Matching is byte-exact after this; there is deliberately no fuzzy matching.
    """
    return unicodedata.normalize("NFC", name).strip()


@dataclass(frozen=True)
class LabelTemplate:
    """A region's ordered label set plus child→parent hierarchy edges."""

    region: str
    labels: tuple[str, ...]
    hierarchy: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.region} template")
        known = set(self.labels)
        for child, parent in self.hierarchy:
            if child not in known or parent not in known:
                raise ValueError(f"hierarchy edge ({child!r}, {parent!r}) references unknown label")
            if child == parent:
                raise ValueError(f"self-edge on {child!r}")
        self.topological_order()  # raises on cycles

    @property
    def label_set(self) -> frozenset[str]:
        return frozenset(self.labels)

    def parents_of(self, label: str) -> tuple[str, ...]:
        return tuple(p for c, p in self.hierarchy if c == label)

    def children_of(self, label: str) -> tuple[str, ...]:
        return tuple(c for c, p in self.hierarchy if p == label)

    def topological_order(self) -> tuple[str, ...]:
        """Labels ordered children-before-parents (template order among peers)."""
        indegree = {name: 0 for name in self.labels}
        for _, parent in self.hierarchy:
            indegree[parent] += 1
        order: list[str] = []
        ready = [name for name in self.labels if indegree[name] == 0]
        while ready:
            node = ready.pop(0)
            order.append(node)
            for child, parent in self.hierarchy:
                if child == node:
                    indegree[parent] -= 1
                    if indegree[parent] == 0:
                        ready.append(parent)
        if len(order) != len(self.labels):
            raise ValueError(f"hierarchy of {self.region} template contains a cycle")
        return tuple(order)

    def template_json(self) -> str:
        """The fill-in template as JSON text, every finding defaulted to false."""
        body = ",\n".join(f'  "{name}": {{"finding": false}}' for name in self.labels)
        return "{\n" + body + "\n}"

    @classmethod
    def from_files(cls, template_path: str | Path, hierarchy_path: str | Path | None = None,
                   region: str | None = None) -> "LabelTemplate":
        """Load from a template JSON file plus an optional sibling hierarchy file.

        The template file maps label names to objects with a single "finding"
        member; the hierarchy file is a JSON array of [child, parent] pairs.
        """
        template_path = Path(template_path)
        raw = json.loads(template_path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{template_path}: template must be a JSON object")
        labels = tuple(normalize_label(name) for name in raw)
        if hierarchy_path is None:
            sibling = template_path.with_name(template_path.stem + ".hierarchy.json")
            hierarchy_path = sibling if sibling.exists() else None
        edges: tuple[tuple[str, str], ...] = ()
        if hierarchy_path is not None:
            pairs = json.loads(Path(hierarchy_path).read_text(encoding="utf-8"))
            edges = tuple((normalize_label(c), normalize_label(p)) for c, p in pairs)
        return cls(region=region or template_path.stem, labels=labels, hierarchy=edges)


@dataclass(frozen=True)
class ReportDocument:
    """One free-text report; metadata feeds only the anonymizer."""

    report_id: str
    region: str
    text: str
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.report_id:
            raise ValueError("report_id must be non-empty")


PROVENANCES = ("auto", "repaired", "adjudicated")


@dataclass(frozen=True)
class LabelSheet:
    """One report's three-state assignment of every template label."""

    report_id: str
    region: str
    assignments: Mapping[str, LabelState]
    provenance: str = "auto"

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def state(self, label: str) -> LabelState:
        return self.assignments[label]

    def with_assignments(self, assignments: Mapping[str, LabelState],
                         provenance: str | None = None) -> "LabelSheet":
        return LabelSheet(
            report_id=self.report_id,
            region=self.region,
            assignments=dict(assignments),
            provenance=provenance or self.provenance,
        )

    def has_uncertain(self) -> bool:
        return any(s is LabelState.UNCERTAIN for s in self.assignments.values())

    def uncertain_labels(self) -> list[str]:
        return [l for l, s in self.assignments.items() if s is LabelState.UNCERTAIN]

    def to_json_obj(self) -> dict:
        return {
            "report_id": self.report_id,
            "region": self.region,
            "provenance": self.provenance,
            "assignments": {l: s.to_json() for l, s in self.assignments.items()},
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "LabelSheet":
        return cls(
            report_id=obj["report_id"],
            region=obj["region"],
            provenance=obj.get("provenance", "auto"),
            assignments={
                normalize_label(l): LabelState.from_json(v)
                for l, v in obj["assignments"].items()
            },
        )


def validate_sheet(sheet: LabelSheet, template: LabelTemplate) -> None:
    """Enforce exact domain equality between a sheet and its template.

    Raises MissingLabel for the first template label absent from the sheet
    (template order), then ExtraLabel for any surplus key.
    """
    have = set(sheet.assignments)
    for name in template.labels:
        if name not in have:
            raise MissingLabel(name)
    for name in sheet.assignments:
        if name not in template.label_set:
            raise ExtraLabel(name)


@dataclass(frozen=True)
class BinaryLabelSheet:
    """A sheet after uncertainty reassignment; only True/False representable."""

    report_id: str
    region: str
    assignments: Mapping[str, bool]
    policy: str

    def __post_init__(self) -> None:
        if self.policy not in ("inclusive", "exclusive", "ground_truth"):
            raise ValueError(f"unknown policy {self.policy!r}")
        for label, value in self.assignments.items():
            if not isinstance(value, bool):
                raise ValueError(f"non-binary assignment for {label!r}: {value!r}")

    def to_json_obj(self) -> dict:
        return {
            "report_id": self.report_id,
            "region": self.region,
            "policy": self.policy,
            "assignments": dict(self.assignments),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "BinaryLabelSheet":
        return cls(
            report_id=obj["report_id"],
            region=obj["region"],
            policy=obj.get("policy", "ground_truth"),
            assignments={normalize_label(l): bool(v) for l, v in obj["assignments"].items()},
        )


@dataclass(frozen=True)
class ScoreMatrix:
    """Per-report, per-label classifier probabilities in [0, 1].

    The interchange format between any trainer and the evaluator.
    """

    labels: tuple[str, ...]
    report_ids: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "scores", scores)
        if scores.ndim != 2 or scores.shape != (len(self.report_ids), len(self.labels)):
            raise ValueError(
                f"score array shape {scores.shape} does not match "
                f"{len(self.report_ids)} reports x {len(self.labels)} labels"
            )
        if len(set(self.report_ids)) != len(self.report_ids):
            raise ValueError("report_ids must be unique")
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("scores must lie in [0, 1]")

    def column(self, label: str) -> np.ndarray:
        return self.scores[:, self.labels.index(label)]

    def to_csv(self, path: str | Path) -> None:
        lines = ["report_id," + ",".join(self.labels)]
        for rid, row in zip(self.report_ids, self.scores):
            lines.append(rid + "," + ",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreMatrix":
        text = Path(path).read_text(encoding="utf-8").strip().splitlines()
        if not text:
            raise ValueError(f"{path}: empty score matrix")
        header = text[0].split(",")
        if header[0] != "report_id":
            raise ValueError(f"{path}: first column must be report_id")
        labels = tuple(normalize_label(h) for h in header[1:])
        ids: list[str] = []
        rows: list[list[float]] = []
        for line in text[1:]:
            cells = line.split(",")
            if len(cells) != len(labels) + 1:
                raise ValueError(f"{path}: row width mismatch on {cells[0]!r}")
            ids.append(cells[0])
            rows.append([float(c) for c in cells[1:]])
        return cls(labels=labels, report_ids=tuple(ids),
                   scores=np.asarray(rows, dtype=float).reshape(len(ids), len(labels)))


# --- region registry -------------------------------------------------------

BUILTIN_REGIONS = ("clavicle", "elbow", "thumb")
_REGISTRY: dict[str, LabelTemplate] = {}


def _load_builtin(region: str) -> LabelTemplate:
    pkg = resources.files("radlabel.templates")
    raw = json.loads((pkg / f"{region}.json").read_text(encoding="utf-8"))
    labels = tuple(normalize_label(name) for name in raw)
    pairs = json.loads((pkg / f"{region}.hierarchy.json").read_text(encoding="utf-8"))
    edges = tuple((normalize_label(c), normalize_label(p)) for c, p in pairs)
    return LabelTemplate(region=region, labels=labels, hierarchy=edges)


def get_template(region: str) -> LabelTemplate:
    """Template registered for a region; the three shipped regions load lazily."""
    if region not in _REGISTRY:
        if region in BUILTIN_REGIONS:
            _REGISTRY[region] = _load_builtin(region)
        else:
            raise KeyError(f"no template registered for region {region!r}")
    return _REGISTRY[region]


def register_template(template: LabelTemplate) -> None:
    """Register (or replace) the template for a region."""
    _REGISTRY[template.region] = template


def available_regions() -> tuple[str, ...]:
    return tuple(sorted(set(BUILTIN_REGIONS) | set(_REGISTRY)))

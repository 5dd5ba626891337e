"""Rule-based removal of personal identifiers from report text.

Runs before any LLM call. Every replacement is logged with its original span
so a reviewer can verify the scrub against a retained original; the scrubbed
corpus itself never carries the original values.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .core import RadlabelError, ReportDocument

__all__ = [
    "OverlappingRules",
    "RedactionRule",
    "RedactionEntry",
    "RedactionLog",
    "default_rules",
    "scrub",
    "restore",
    "load_rules",
]

PLACEHOLDERS = ("[PATIENT]", "[PHYSICIAN]", "[DATE]", "[ID]", "[REDACTED]")
CATEGORIES = ("patient_name", "physician", "date", "patient_id", "custom")


class OverlappingRules(RadlabelError):
    code = "overlapping_rules"


@dataclass(frozen=True)
class RedactionRule:
    """One scrubbing rule: a regex pattern or a metadata-key lookup.

    Pattern rules redact group 1 when the pattern defines one (so honorifics
    survive while the name goes), otherwise the whole match. Metadata rules
    redact verbatim occurrences of the report's metadata value; a key absent
    from a report's metadata makes the rule inert for that report.
    """

    category: str
    replacement: str
    pattern: str | None = None
    metadata_key: str | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.replacement not in PLACEHOLDERS:
            raise ValueError(f"replacement {self.replacement!r} not in {PLACEHOLDERS}")
        if (self.pattern is None) == (self.metadata_key is None):
            raise ValueError("exactly one of pattern / metadata_key required")

    def to_json_obj(self) -> dict:
        obj = {"category": self.category, "replacement": self.replacement}
        if self.pattern is not None:
            obj["pattern"] = self.pattern
        if self.metadata_key is not None:
            obj["metadata_key"] = self.metadata_key
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "RedactionRule":
        return cls(category=obj["category"], replacement=obj["replacement"],
                   pattern=obj.get("pattern"), metadata_key=obj.get("metadata_key"))


@dataclass(frozen=True)
class RedactionEntry:
    category: str
    start: int
    end: int
    original: str
    replacement: str


@dataclass(frozen=True)
class RedactionLog:
    report_id: str
    entries: tuple[RedactionEntry, ...] = ()

    def to_json_objs(self) -> list[dict]:
        return [
            {"report_id": self.report_id, "category": e.category, "start": e.start,
             "end": e.end, "original": e.original, "replacement": e.replacement}
            for e in self.entries
        ]


# German/ISO date forms, long numeric IDs, and honorific-prefixed surnames.
_DATE_PATTERN = r"\b\d{2}\.\d{2}\.(?:\d{4}|\d{2})\b|\b\d{4}-\d{2}-\d{2}\b"
_ID_PATTERN = r"\b\d{6,}\b"
# two+ lowercase letters so honorific fragments ("Dr") never look like names
_NAME = r"[A-ZÄÖÜ][a-zäöüß]{2,}(?:-[A-ZÄÖÜ][a-zäöüß]{2,})?"
_PATIENT_PATTERN = rf"(?:Herr|Frau)\s+({_NAME})"
_PHYSICIAN_PATTERN = rf"(?:Prof\.\s*)?Dr\.(?:\s*med\.)?\s+({_NAME})|Prof\.\s+({_NAME})"


def default_rules() -> list[RedactionRule]:
    """The shipped rule set; metadata rules apply when the key is present."""
    return [
        RedactionRule(category="date", replacement="[DATE]", pattern=_DATE_PATTERN),
        RedactionRule(category="patient_id", replacement="[ID]", pattern=_ID_PATTERN),
        RedactionRule(category="patient_name", replacement="[PATIENT]", pattern=_PATIENT_PATTERN),
        RedactionRule(category="physician", replacement="[PHYSICIAN]", pattern=_PHYSICIAN_PATTERN),
        RedactionRule(category="patient_name", replacement="[PATIENT]", metadata_key="patient_name"),
        RedactionRule(category="physician", replacement="[PHYSICIAN]", metadata_key="physician"),
        RedactionRule(category="patient_id", replacement="[ID]", metadata_key="patient_id"),
        RedactionRule(category="date", replacement="[DATE]", metadata_key="date"),
    ]


def load_rules(path: str | Path) -> list[RedactionRule]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return [RedactionRule.from_json_obj(obj) for obj in raw]


def _matches(rule: RedactionRule, report: ReportDocument) -> list[tuple[int, int, str]]:
    spans: list[tuple[int, int, str]] = []
    if rule.pattern is not None:
        for m in re.finditer(rule.pattern, report.text):
            group = next((g for g in range(1, (m.lastindex or 0) + 1) if m.group(g)), 0)
            spans.append((m.start(group), m.end(group), rule.category))
    else:
        value = report.metadata.get(rule.metadata_key or "")
        if value:
            for m in re.finditer(rf"(?<!\w){re.escape(value)}(?!\w)", report.text):
                spans.append((m.start(), m.end(), rule.category))
    return spans


def scrub(report: ReportDocument,
          rules: Sequence[RedactionRule] | None = None) -> tuple[ReportDocument, RedactionLog]:
    """Replace every rule match with its placeholder token.

    Overlapping matches with the same replacement merge into one span;
    overlaps demanding different replacements raise OverlappingRules.
    """
    rules = list(default_rules() if rules is None else rules)
    if not rules:
        raise ValueError("rules must be non-empty")
    text = report.text

    hits: list[tuple[int, int, str, str]] = []  # (start, end, replacement, category)
    for rule in rules:
        for start, end, category in _matches(rule, report):
            hits.append((start, end, rule.replacement, category))
    hits.sort(key=lambda h: (h[0], -(h[1] - h[0])))

    merged: list[list] = []
    for start, end, replacement, category in hits:
        if merged and start < merged[-1][1]:
            prev = merged[-1]
            if prev[2] != replacement:
                raise OverlappingRules(
                    f"{report.report_id}: spans ({prev[0]},{prev[1]}) and ({start},{end}) "
                    f"want {prev[2]} vs {replacement}"
                )
            prev[1] = max(prev[1], end)
            continue
        merged.append([start, end, replacement, category])

    entries: list[RedactionEntry] = []
    pieces: list[str] = []
    cursor = 0
    for start, end, replacement, category in merged:
        pieces.append(text[cursor:start])
        pieces.append(replacement)
        entries.append(RedactionEntry(category=category, start=start, end=end,
                                      original=text[start:end], replacement=replacement))
        cursor = end
    pieces.append(text[cursor:])

    scrubbed = ReportDocument(report_id=report.report_id, region=report.region,
                              text="".join(pieces), metadata={})
    return scrubbed, RedactionLog(report_id=report.report_id, entries=tuple(entries))


def restore(scrubbed_text: str, log: RedactionLog) -> str:
    """Rebuild the original text by undoing the log entries in order."""
    out = scrubbed_text
    cursor = 0
    for entry in log.entries:
        idx = out.index(entry.replacement, cursor)
        out = out[:idx] + entry.original + out[idx + len(entry.replacement):]
        cursor = idx + len(entry.original)
    return out

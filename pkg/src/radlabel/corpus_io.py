"""Corpus directory formats: reports, sheets, and helpers shared by the CLI.

One JSON file per report or sheet, named ``<report_id>.json``. Writers are
deterministic (fixed key order, trailing newline) so reruns produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
from pathlib import Path
from .core import BinaryLabelSheet, LabelSheet, ReportDocument

__all__ = [
    "dumps_canonical",
    "write_json",
    "write_report",
    "read_report",
    "load_reports",
    "write_sheet",
    "read_sheet",
    "load_sheets",
    "write_binary_sheet",
    "read_binary_sheet",
    "load_binary_sheets",
]


def dumps_canonical(obj: object) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def write_json(path: str | Path, obj: object) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_canonical(obj), encoding="utf-8")
    return path


def write_report(directory: str | Path, report: ReportDocument) -> Path:
    obj = {"report_id": report.report_id, "region": report.region, "text": report.text}
    if report.metadata:
        obj["metadata"] = dict(report.metadata)
    return write_json(Path(directory) / f"{report.report_id}.json", obj)


def read_report(path: str | Path) -> ReportDocument:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return ReportDocument(report_id=obj["report_id"], region=obj["region"],
                          text=obj["text"], metadata=obj.get("metadata", {}))


def load_reports(directory: str | Path) -> list[ReportDocument]:
    return [read_report(p) for p in sorted(Path(directory).glob("*.json"))]


def write_sheet(directory: str | Path, sheet: LabelSheet) -> Path:
    return write_json(Path(directory) / f"{sheet.report_id}.json", sheet.to_json_obj())


def read_sheet(path: str | Path) -> LabelSheet:
    return LabelSheet.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def load_sheets(directory: str | Path) -> list[LabelSheet]:
    return [read_sheet(p) for p in sorted(Path(directory).glob("*.json"))]


def write_binary_sheet(directory: str | Path, sheet: BinaryLabelSheet) -> Path:
    return write_json(Path(directory) / f"{sheet.report_id}.json", sheet.to_json_obj())


def read_binary_sheet(path: str | Path) -> BinaryLabelSheet:
    return BinaryLabelSheet.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def load_binary_sheets(directory: str | Path) -> list[BinaryLabelSheet]:
    return [read_binary_sheet(p) for p in sorted(Path(directory).glob("*.json"))]

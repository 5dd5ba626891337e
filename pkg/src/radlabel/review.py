"""HTTP service backing human adjudication of extracted label sheets.

State lives in memory, guarded by an append-only JSON-lines audit log:
replaying the log over the original auto sheets reproduces the current state
exactly. Mutations are serialized per process and protected by optimistic
versioning; reads touch immutable snapshots and never block.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import LabelSheet, LabelState, RadlabelError, ReportDocument, get_template
from .corpus_io import write_sheet
from .extract import check_hierarchy

__all__ = [
    "NotFound",
    "VersionConflict",
    "StaleState",
    "HierarchyViolation",
    "UnresolvedUncertain",
    "TasksPending",
    "ReviewTask",
    "ReviewStore",
    "create_app",
]


class NotFound(RadlabelError):
    code = "not_found"


class VersionConflict(RadlabelError):
    code = "version_conflict"


class StaleState(RadlabelError):
    code = "stale_state"

    def __init__(self, label: str, expected: str, actual: str):
        super().__init__(f"label {label!r}: expected previous {expected}, sheet holds {actual}")
        self.label = label


class HierarchyViolation(RadlabelError):
    code = "hierarchy_violation"

    def __init__(self, violations: Sequence[tuple[str, str]]):
        super().__init__(f"correction leaves hierarchy violations: {list(violations)}")
        self.violations = list(violations)


class UnresolvedUncertain(RadlabelError):
    code = "unresolved_uncertain"

    def __init__(self, cells: Sequence[tuple[str, str]]):
        super().__init__(f"{len(cells)} Uncertain cells block a test-grade export")
        self.cells = list(cells)


class TasksPending(RadlabelError):
    code = "tasks_pending"


@dataclass(frozen=True)
class ReviewTask:
    report_id: str
    status: str  # pending | in_review | done
    version: int


class ReviewStore:
    """Corpus, tasks, and audit trail behind the adjudication endpoints."""

    def __init__(self, reports: Mapping[str, ReportDocument],
                 sheets: Mapping[str, LabelSheet],
                 audit_path: str | Path,
                 export_dir: str | Path):
        if set(reports) != set(sheets):
            raise ValueError("reports and sheets must cover the same report ids")
        self._reports = dict(reports)
        self._sheets = dict(sheets)
        self._original_sheets = dict(sheets)
        self._tasks: dict[str, ReviewTask] = {
            rid: ReviewTask(report_id=rid, status="pending", version=1) for rid in sheets
        }
        self._history: dict[str, list[dict]] = {rid: [] for rid in sheets}
        self._lock = threading.Lock()
        self._audit_path = Path(audit_path)
        self._export_dir = Path(export_dir)
        if self._audit_path.exists():
            self._replay(self._audit_path)

    # -- audit log ---------------------------------------------------------

    def _append_audit(self, event: dict) -> None:
        self._audit_path.parent.mkdir(parents=True, exist_ok=True)
        with self._audit_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self, path: Path) -> None:
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            if event["kind"] == "view":
                self._apply_view(event["report_id"])
            elif event["kind"] == "submit":
                self._apply_submit(event["report_id"], event["records"],
                                   event["version"], event["reviewer_id"])
            else:
                raise ValueError(f"unknown audit event kind {event['kind']!r}")

    # -- pure state transitions (shared by live calls and replay) ----------

    def _apply_view(self, report_id: str) -> None:
        task = self._tasks[report_id]
        if task.status == "pending":
            self._tasks[report_id] = replace(task, status="in_review")

    def _apply_submit(self, report_id: str, records: list[dict], new_version: int,
                      reviewer_id: str) -> None:
        sheet = self._sheets[report_id]
        assignments = dict(sheet.assignments)
        for record in records:
            assignments[record["label"]] = LabelState.from_json(record["corrected"])
        self._sheets[report_id] = sheet.with_assignments(assignments,
                                                         provenance="adjudicated")
        self._tasks[report_id] = ReviewTask(report_id=report_id, status="done",
                                            version=new_version)
        self._history[report_id].extend(records)

    # -- queries -----------------------------------------------------------

    def list_tasks(self, status: str | None = None, region: str | None = None,
                   cursor: str | None = None, limit: int = 50) -> tuple[list[ReviewTask], str | None]:
        tasks = [self._tasks[rid] for rid in sorted(self._tasks)]
        if region is not None:
            tasks = [t for t in tasks if self._reports[t.report_id].region == region]
        if status is not None:
            tasks = [t for t in tasks if t.status == status]
        if cursor is not None:
            tasks = [t for t in tasks if t.report_id > cursor]
        page = tasks[:limit]
        next_cursor = page[-1].report_id if len(tasks) > limit else None
        return page, next_cursor

    def get_task(self, report_id: str) -> dict:
        if report_id not in self._sheets:
            raise NotFound(f"no task {report_id!r}")
        with self._lock:
            if self._tasks[report_id].status == "pending":
                self._append_audit({"kind": "view", "report_id": report_id,
                                    "ts": int(time.time())})
                self._apply_view(report_id)
        sheet = self._sheets[report_id]
        task = self._tasks[report_id]
        template = get_template(sheet.region)
        return {
            "report_id": report_id,
            "region": sheet.region,
            "status": task.status,
            "version": task.version,
            "text": self._reports[report_id].text,
            "sheet": sheet.to_json_obj(),
            "template": {"labels": list(template.labels),
                         "hierarchy": [list(edge) for edge in template.hierarchy]},
            "history": list(self._history[report_id]),
        }

    # -- mutations -----------------------------------------------------------

    def submit_adjudication(self, report_id: str, records: Sequence[Mapping],
                            expected_version: int, reviewer_id: str) -> int:
        if report_id not in self._sheets:
            raise NotFound(f"no task {report_id!r}")
        with self._lock:
            task = self._tasks[report_id]
            if task.version != expected_version:
                raise VersionConflict(
                    f"{report_id}: expected version {expected_version}, at {task.version}"
                )
            sheet = self._sheets[report_id]
            now = int(time.time())
            normalized: list[dict] = []
            assignments = dict(sheet.assignments)
            for record in records:
                label = record["label"]
                if label not in assignments:
                    raise NotFound(f"{report_id}: no label {label!r}")
                previous = LabelState.from_json(record["previous"])
                corrected = LabelState.from_json(record["corrected"])
                if assignments[label] is not previous:
                    raise StaleState(label, previous.value, assignments[label].value)
                assignments[label] = corrected
                normalized.append({
                    "label": label,
                    "previous": previous.to_json(),
                    "corrected": corrected.to_json(),
                    "reviewer_id": reviewer_id,
                    "ts": now,
                    "note": record.get("note"),
                })
            candidate = sheet.with_assignments(assignments, provenance="adjudicated")
            violations = check_hierarchy(candidate)
            if violations:
                raise HierarchyViolation(violations)
            new_version = task.version + 1
            self._append_audit({"kind": "submit", "report_id": report_id,
                                "version": new_version, "reviewer_id": reviewer_id,
                                "ts": now, "records": normalized})
            self._apply_submit(report_id, normalized, new_version, reviewer_id)
            return new_version

    def export_ground_truth(self, region: str, grade: str) -> list[str]:
        if grade not in ("test", "three_state"):
            raise ValueError(f"grade must be test or three_state, got {grade!r}")
        with self._lock:
            sheets = [s for s in self._sheets.values()
                      if self._reports[s.report_id].region == region]
            if grade == "test":
                pending = [s.report_id for s in sheets
                           if self._tasks[s.report_id].status != "done"]
                if pending:
                    raise TasksPending(f"{len(pending)} tasks not done: {sorted(pending)[:5]}")
                offending = [(s.report_id, label) for s in sheets
                             for label in s.uncertain_labels()]
                if offending:
                    raise UnresolvedUncertain(sorted(offending))
            out_dir = self._export_dir / region / grade
            written = [write_sheet(out_dir, s) for s in sorted(sheets, key=lambda s: s.report_id)]
            return [str(p) for p in written]

    def sheets_snapshot(self) -> dict[str, LabelSheet]:
        return dict(self._sheets)


# -- HTTP layer ----------------------------------------------------------------


class AdjudicationRecordBody(BaseModel):
    label: str
    previous: bool | str
    corrected: bool | str
    note: str | None = None


class AdjudicateBody(BaseModel):
    expected_version: int
    records: list[AdjudicationRecordBody] = Field(default_factory=list)


class ExportBody(BaseModel):
    region: str
    grade: str


_STATUS = {
    "not_found": 404,
    "version_conflict": 409,
    "stale_state": 409,
    "hierarchy_violation": 409,
    "unresolved_uncertain": 409,
    "tasks_pending": 409,
}


def create_app(store: ReviewStore, tokens: Mapping[str, str] | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    """Wire a store into the HTTP+JSON adjudication API.

    ``tokens`` maps bearer strings to reviewer ids; without it, mutations run
    as reviewer "anonymous". Pass ``static_dir`` to serve the browser UI.
    """
    app = FastAPI(title="radlabel review service")

    def reviewer(authorization: str | None = Header(default=None)) -> str:
        if tokens is None:
            return "anonymous"
        if authorization and authorization.startswith("Bearer "):
            token = authorization.removeprefix("Bearer ")
            if token in tokens:
                return tokens[token]
        raise HTTPException(status_code=401, detail={"code": "auth_failure",
                                                     "message": "unknown bearer token",
                                                     "details": None})

    @app.exception_handler(RadlabelError)
    async def _radlabel_error(_request: Request, exc: RadlabelError) -> JSONResponse:
        details = None
        if isinstance(exc, UnresolvedUncertain):
            details = {"cells": [list(c) for c in exc.cells]}
        elif isinstance(exc, HierarchyViolation):
            details = {"violations": [list(v) for v in exc.violations]}
        elif isinstance(exc, StaleState):
            details = {"label": exc.label}
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 400),
            content={"code": exc.code, "message": str(exc), "details": details},
        )

    @app.get("/tasks")
    def list_tasks(status: str | None = None, region: str | None = None,
                   cursor: str | None = None, limit: int = Query(default=50, ge=1, le=500)):
        tasks, next_cursor = store.list_tasks(status=status, region=region,
                                              cursor=cursor, limit=limit)
        return {"tasks": [t.__dict__ for t in tasks], "next_cursor": next_cursor}

    @app.get("/tasks/{report_id}")
    def get_task(report_id: str):
        return store.get_task(report_id)

    @app.post("/tasks/{report_id}/adjudicate")
    def adjudicate(report_id: str, body: AdjudicateBody,
                   reviewer_id: str = Depends(reviewer)):
        version = store.submit_adjudication(
            report_id,
            [r.model_dump() for r in body.records],
            expected_version=body.expected_version,
            reviewer_id=reviewer_id,
        )
        return {"report_id": report_id, "version": version}

    @app.post("/export")
    def export(body: ExportBody, reviewer_id: str = Depends(reviewer)):
        files = store.export_ground_truth(body.region, body.grade)
        return {"files": files, "count": len(files)}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app

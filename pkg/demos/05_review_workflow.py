"""Drive the adjudication service end to end, in process.

A reviewer works the queue, resolves every Uncertain cell, and exports
test-grade ground truth; the export gate blocks until nothing hedged is left.
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from radlabel.generate import generate_corpus
from radlabel.review import ReviewStore, create_app

workdir = Path(tempfile.mkdtemp(prefix="review-demo-"))
reports, truth = generate_corpus("clavicle", n=5, uncertainty_rate=0.3, seed=3)

store = ReviewStore(
    reports={r.report_id: r for r in reports},
    sheets={s.report_id: s for s in truth},
    audit_path=workdir / "audit.jsonl",
    export_dir=workdir / "export",
)
client = TestClient(create_app(store, tokens={"demo-token": "demo-reviewer"}))
auth = {"Authorization": "Bearer demo-token"}

queue = client.get("/tasks").json()["tasks"]
print(f"queue: {len(queue)} pending tasks")

blocked = client.post("/export", json={"region": "clavicle", "grade": "test"}, headers=auth)
print(f"export before review -> HTTP {blocked.status_code} ({blocked.json()['code']})")

for task in queue:
    body = client.get(f"/tasks/{task['report_id']}").json()
    records = [
        {"label": label, "previous": "uncertain", "corrected": True,
         "note": "resolved against follow-up imaging"}
        for label, value in body["sheet"]["assignments"].items()
        if value == "uncertain"
    ]
    ack = client.post(f"/tasks/{task['report_id']}/adjudicate", headers=auth,
                      json={"expected_version": body["version"], "records": records})
    print(f"  {task['report_id']}: {len(records)} corrections -> version "
          f"{ack.json()['version']}")

exported = client.post("/export", json={"region": "clavicle", "grade": "test"},
                       headers=auth)
print(f"export after review -> HTTP {exported.status_code}, "
      f"{exported.json()['count']} test-grade sheets")
print(f"audit trail at {workdir / 'audit.jsonl'}")

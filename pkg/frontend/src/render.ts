/**
 * Pure HTML builders; main.ts swaps them into the document. Keeping these as
 * string functions makes the view testable without a DOM.
 */

import type { ConflictDialog, TaskEditor } from "./editor.js";
import type { TaskSummary } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderQueue(tasks: TaskSummary[], activeId: string | null): string {
  const items = tasks
    .map((task) => {
      const active = task.report_id === activeId ? " active" : "";
      return `<li class="queue-item ${task.status}${active}" data-report-id="${
        escapeHtml(task.report_id)}">` +
        `<span class="rid">${escapeHtml(task.report_id)}</span>` +
        `<span class="status">${task.status}</span></li>`;
    })
    .join("");
  return `<ul class="queue">${items}</ul>`;
}

export function renderTask(editor: TaskEditor, reportText: string): string {
  const childrenOf = new Set(editor.hierarchy.map(([child]) => child));
  const violations = new Set(
    editor.hierarchyViolations().flatMap(([c, p]) => [c, p]),
  );
  const rows = editor.labels
    .map((label, index) => {
      const state = editor.cells[label]!;
      const classes = ["label-row", `state-${state}`];
      if (index === editor.cursor) classes.push("focused");
      if (state === "uncertain") classes.push("flagged");
      if (violations.has(label)) classes.push("violation");
      const edited = editor.cells[label] !== editor.base[label] ? " *" : "";
      const nested = childrenOf.has(label) ? `<span class="nested">&#8627;</span>` : "";
      return `<tr class="${classes.join(" ")}" data-label="${escapeHtml(label)}">` +
        `<td class="name">${nested}${escapeHtml(label)}${edited}</td>` +
        `<td class="value">${state}</td></tr>`;
    })
    .join("");

  const unresolved = editor.unresolvedUncertain();
  const banner = editor.testGradeMode && unresolved.length > 0
    ? `<div class="banner blocking">test-grade export blocked: ` +
      `${unresolved.length} uncertain label(s) to resolve</div>`
    : "";
  const violationNote = editor.hierarchyViolations().length > 0
    ? `<div class="banner violation">hierarchy violation: fix before submitting</div>`
    : "";
  return (
    `${banner}${violationNote}` +
    `<section class="report"><pre>${escapeHtml(reportText)}</pre></section>` +
    `<section class="sheet"><table>${rows}</table></section>` +
    `<footer class="hints">t/f/u set state &middot; arrows move &middot; ` +
    `Enter submits &middot; n next</footer>`
  );
}

export function renderHistory(history: { label: string; corrected: unknown;
                                         reviewer_id?: string; ts?: number }[]): string {
  if (history.length === 0) return "";
  const rows = history
    .map((record) =>
      `<li>${escapeHtml(record.label)} &rarr; ${String(record.corrected)}` +
      `${record.reviewer_id ? ` by ${escapeHtml(record.reviewer_id)}` : ""}</li>`)
    .join("");
  return `<details class="audit"><summary>history (${history.length})</summary>` +
    `<ol>${rows}</ol></details>`;
}

export function renderConflict(dialog: ConflictDialog): string {
  const changed = Object.keys(dialog.mine).filter(
    (label) => dialog.mine[label] !== dialog.theirs[label],
  );
  const rows = changed
    .map((label) =>
      `<tr data-label="${escapeHtml(label)}"><td>${escapeHtml(label)}</td>` +
      `<td class="base">${dialog.base[label]}</td>` +
      `<td class="mine">${dialog.mine[label]}</td>` +
      `<td class="theirs">${dialog.theirs[label]}</td></tr>`)
    .join("");
  return (
    `<div class="conflict-dialog" data-report-id="${escapeHtml(dialog.reportId)}">` +
    `<h2>concurrent edit on ${escapeHtml(dialog.reportId)}</h2>` +
    `<table><thead><tr><th>label</th><th>base</th><th>mine</th><th>theirs</th></tr>` +
    `</thead><tbody>${rows}</tbody></table>` +
    `<button data-choice="mine">keep mine</button>` +
    `<button data-choice="theirs">take theirs</button></div>`
  );
}

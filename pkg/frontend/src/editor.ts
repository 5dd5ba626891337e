/**
 * Pure editing state for one task: current cell values, cursor, and the diff
 * against the server's sheet. Keyboard-first because the workload is hundreds
 * of reports times ~26 labels.
 *
 * Keys: t/f/u set the focused label's state, ArrowUp/ArrowDown move focus,
 * Enter/s requests submit, n requests next task.
 */

import { findViolations } from "./hierarchy.js";
import type { AdjudicationRecord, CellState, TaskPayload } from "./types.js";
import { toCellState, toCellValue } from "./types.js";

export type KeyAction =
  | { kind: "noop" }
  | { kind: "edited"; label: string; state: CellState }
  | { kind: "moved"; cursor: number }
  | { kind: "submit" }
  | { kind: "next" };

export class TaskEditor {
  readonly reportId: string;
  readonly labels: string[];
  readonly hierarchy: [string, string][];
  readonly base: Record<string, CellState>;
  serverVersion: number;
  cells: Record<string, CellState>;
  cursor = 0;

  constructor(payload: TaskPayload, readonly testGradeMode: boolean = true) {
    this.reportId = payload.report_id;
    this.labels = [...payload.template.labels];
    this.hierarchy = payload.template.hierarchy.map(([c, p]) => [c, p]);
    this.serverVersion = payload.version;
    this.base = {};
    for (const label of this.labels) {
      this.base[label] = toCellState(payload.sheet.assignments[label] ?? false);
    }
    this.cells = { ...this.base };
  }

  focusedLabel(): string {
    return this.labels[this.cursor] ?? this.labels[0] ?? "";
  }

  setState(label: string, state: CellState): void {
    if (!(label in this.cells)) throw new Error(`unknown label ${label}`);
    this.cells[label] = state;
  }

  moveCursor(delta: number): number {
    const span = this.labels.length;
    this.cursor = (this.cursor + delta + span) % span;
    return this.cursor;
  }

  applyKey(key: string): KeyAction {
    switch (key) {
      case "t":
      case "f":
      case "u": {
        const state: CellState = key === "t" ? "true" : key === "f" ? "false" : "uncertain";
        const label = this.focusedLabel();
        this.setState(label, state);
        return { kind: "edited", label, state };
      }
      case "ArrowDown":
        return { kind: "moved", cursor: this.moveCursor(1) };
      case "ArrowUp":
        return { kind: "moved", cursor: this.moveCursor(-1) };
      case "Enter":
      case "s":
        return { kind: "submit" };
      case "n":
      case "ArrowRight":
        return { kind: "next" };
      default:
        return { kind: "noop" };
    }
  }

  edits(): AdjudicationRecord[] {
    return this.labels
      .filter((label) => this.cells[label] !== this.base[label])
      .map((label) => ({
        label,
        previous: toCellValue(this.base[label]!),
        corrected: toCellValue(this.cells[label]!),
      }));
  }

  hasUnsavedEdits(): boolean {
    return this.edits().length > 0;
  }

  hierarchyViolations(): [string, string][] {
    return findViolations(this.cells, this.hierarchy);
  }

  unresolvedUncertain(): string[] {
    return this.labels.filter((label) => this.cells[label] === "uncertain");
  }

  /** Navigation away is blocked while test-grade mode sees hedged cells. */
  canNavigateAway(): boolean {
    if (this.hasUnsavedEdits()) return false;
    if (this.testGradeMode && this.unresolvedUncertain().length > 0) return false;
    return true;
  }

  /** Reasons the UI refuses to even send a submit. */
  submitBlockers(): string[] {
    const blockers: string[] = [];
    for (const [child, parent] of this.hierarchyViolations()) {
      blockers.push(`hierarchy: "${child}" outranks "${parent}"`);
    }
    if (this.testGradeMode) {
      for (const label of this.unresolvedUncertain()) {
        blockers.push(`unresolved uncertain: "${label}"`);
      }
    }
    return blockers;
  }

  /** Full state after a successful submit. */
  markSubmitted(newVersion: number): void {
    this.serverVersion = newVersion;
    for (const label of this.labels) {
      this.base[label] = this.cells[label]!;
    }
  }
}

/** Three-way material for the conflict dialog after a version conflict. */
export interface ConflictDialog {
  reportId: string;
  base: Record<string, CellState>;
  mine: Record<string, CellState>;
  theirs: Record<string, CellState>;
  theirsVersion: number;
}

export function buildConflict(editor: TaskEditor, theirs: TaskPayload): ConflictDialog {
  const theirCells: Record<string, CellState> = {};
  for (const label of editor.labels) {
    theirCells[label] = toCellState(theirs.sheet.assignments[label] ?? false);
  }
  return {
    reportId: editor.reportId,
    base: { ...editor.base },
    mine: { ...editor.cells },
    theirs: theirCells,
    theirsVersion: theirs.version,
  };
}

/**
 * Resolve a conflict: "theirs" drops local edits; "mine" rebases them onto
 * the server's current sheet (the record's `previous` must match it).
 */
export function resolveConflict(
  editor: TaskEditor,
  dialog: ConflictDialog,
  choice: "mine" | "theirs",
): void {
  editor.serverVersion = dialog.theirsVersion;
  for (const label of editor.labels) {
    editor.base[label] = dialog.theirs[label]!;
  }
  if (choice === "theirs") {
    editor.cells = { ...dialog.theirs };
  } else {
    for (const label of editor.labels) {
      if (dialog.mine[label] === dialog.base[label]) {
        editor.cells[label] = dialog.theirs[label]!; // untouched: follow server
      } else {
        editor.cells[label] = dialog.mine[label]!; // kept: my explicit edit
      }
    }
  }
}

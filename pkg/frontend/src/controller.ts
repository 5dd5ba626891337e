/**
 * Queue orchestration: the single mutation path between the editor state and
 * the service. The controller owns no authoritative data; every change goes
 * through the HTTP API and is re-read from it.
 */

import { ApiError, ReviewApi } from "./api.js";
import { buildConflict, ConflictDialog, resolveConflict, TaskEditor } from "./editor.js";
import type { TaskSummary } from "./types.js";

export type SubmitOutcome =
  | { kind: "ok"; version: number }
  | { kind: "blocked"; reasons: string[] }
  | { kind: "conflict"; dialog: ConflictDialog }
  | { kind: "rejected"; code: string; message: string };

export interface QueueViewState {
  tasks: TaskSummary[];
  current: TaskEditor | null;
  conflict: ConflictDialog | null;
  statusFilter: string | null;
  lastError: string | null;
}

export class AppController {
  readonly state: QueueViewState = {
    tasks: [],
    current: null,
    conflict: null,
    statusFilter: null,
    lastError: null,
  };

  constructor(
    private readonly api: ReviewApi,
    private readonly testGradeMode: boolean = true,
  ) {}

  async refreshQueue(): Promise<TaskSummary[]> {
    const page = await this.api.listTasks({
      status: this.state.statusFilter ?? undefined,
      limit: 500,
    });
    this.state.tasks = page.tasks;
    return page.tasks;
  }

  async openTask(reportId: string): Promise<TaskEditor> {
    if (this.state.current && !this.state.current.canNavigateAway()
        && this.state.current.reportId !== reportId) {
      throw new Error(
        `navigation blocked: task ${this.state.current.reportId} has unsaved edits ` +
        `or unresolved uncertain cells`,
      );
    }
    const payload = await this.api.getTask(reportId);
    const editor = new TaskEditor(payload, this.testGradeMode);
    this.state.current = editor;
    this.state.conflict = null;
    return editor;
  }

  async openNextPending(): Promise<TaskEditor | null> {
    await this.refreshQueue();
    const currentId = this.state.current?.reportId;
    const next = this.state.tasks.find(
      (t) => t.status !== "done" && t.report_id !== currentId,
    );
    return next ? this.openTask(next.report_id) : null;
  }

  /** Client-side gates run first; only a clean sheet reaches the network. */
  async submitCurrent(): Promise<SubmitOutcome> {
    const editor = this.state.current;
    if (!editor) return { kind: "rejected", code: "no_task", message: "no open task" };
    const blockers = editor.submitBlockers();
    if (blockers.length > 0) {
      this.state.lastError = blockers.join("; ");
      return { kind: "blocked", reasons: blockers };
    }
    try {
      const ack = await this.api.adjudicate(editor.reportId, editor.serverVersion,
                                            editor.edits());
      editor.markSubmitted(ack.version);
      this.state.lastError = null;
      return { kind: "ok", version: ack.version };
    } catch (error) {
      if (error instanceof ApiError && error.code === "version_conflict") {
        const theirs = await this.api.getTask(editor.reportId);
        const dialog = buildConflict(editor, theirs);
        this.state.conflict = dialog;
        return { kind: "conflict", dialog };
      }
      if (error instanceof ApiError) {
        this.state.lastError = `${error.code}: ${error.message}`;
        return { kind: "rejected", code: error.code, message: error.message };
      }
      throw error;
    }
  }

  /** The conflict dialog demands an explicit choice; nothing is implicit. */
  async resolveConflict(choice: "mine" | "theirs"): Promise<SubmitOutcome | null> {
    const editor = this.state.current;
    const dialog = this.state.conflict;
    if (!editor || !dialog) return null;
    resolveConflict(editor, dialog, choice);
    this.state.conflict = null;
    if (choice === "theirs") return { kind: "ok", version: editor.serverVersion };
    return this.submitCurrent();
  }

  async exportTestGrade(region: string): Promise<{ files: string[]; count: number }> {
    if (this.state.current && this.testGradeMode
        && this.state.current.unresolvedUncertain().length > 0) {
      throw new Error("export blocked: the open task still holds uncertain cells");
    }
    return this.api.exportGroundTruth(region, "test");
  }
}

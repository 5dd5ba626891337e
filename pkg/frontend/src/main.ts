/** Browser bootstrap: wires the controller to the DOM. */

import { ReviewApi } from "./api.js";
import { AppController } from "./controller.js";
import { renderConflict, renderHistory, renderQueue, renderTask } from "./render.js";

const params = new URLSearchParams(window.location.search);
const token = params.get("token");
const region = params.get("region") ?? "clavicle";
const api = new ReviewApi("", token);
const controller = new AppController(api, true);

const queueEl = document.getElementById("queue")!;
const taskEl = document.getElementById("task")!;
const asideEl = document.getElementById("aside")!;
const statusEl = document.getElementById("statusline")!;

let currentText = "";
let currentHistory: never[] = [];

function paint(): void {
  queueEl.innerHTML = renderQueue(controller.state.tasks,
                                  controller.state.current?.reportId ?? null);
  if (controller.state.conflict) {
    taskEl.innerHTML = renderConflict(controller.state.conflict);
  } else if (controller.state.current) {
    taskEl.innerHTML = renderTask(controller.state.current, currentText);
    asideEl.innerHTML = renderHistory(currentHistory);
  }
  statusEl.textContent = controller.state.lastError ?? "";
}

async function open(reportId: string): Promise<void> {
  try {
    const editor = await controller.openTask(reportId);
    const payload = await api.getTask(reportId);
    currentText = payload.text;
    currentHistory = payload.history as never[];
    void editor;
  } catch (error) {
    controller.state.lastError = String(error);
  }
  await controller.refreshQueue();
  paint();
}

async function submitAndAdvance(): Promise<void> {
  const outcome = await controller.submitCurrent();
  if (outcome.kind === "ok") {
    const next = await controller.openNextPending();
    if (next) await open(next.reportId);
  }
  await controller.refreshQueue();
  paint();
}

document.addEventListener("keydown", (event) => {
  const editor = controller.state.current;
  if (!editor || controller.state.conflict) return;
  const action = editor.applyKey(event.key);
  if (action.kind === "submit") void submitAndAdvance();
  else if (action.kind === "next") {
    void controller.openNextPending().then((next) => next && open(next.reportId));
  } else if (action.kind !== "noop") paint();
});

queueEl.addEventListener("click", (event) => {
  const item = (event.target as HTMLElement).closest<HTMLElement>("[data-report-id]");
  if (item?.dataset.reportId) void open(item.dataset.reportId);
});

taskEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const choice = target.closest<HTMLElement>("[data-choice]")?.dataset.choice;
  if (choice === "mine" || choice === "theirs") {
    void controller.resolveConflict(choice).then(() => paint());
    return;
  }
  const row = target.closest<HTMLElement>("tr[data-label]");
  const editor = controller.state.current;
  if (row?.dataset.label && editor) {
    editor.cursor = editor.labels.indexOf(row.dataset.label);
    paint();
  }
});

document.getElementById("export")!.addEventListener("click", () => {
  controller
    .exportTestGrade(region)
    .then((result) => {
      statusEl.textContent = `exported ${result.count} test-grade sheets`;
    })
    .catch((error) => {
      statusEl.textContent = String(error);
    });
});

void controller.refreshQueue().then(async () => {
  const first = controller.state.tasks.find((t) => t.status !== "done");
  if (first) await open(first.report_id);
  paint();
});

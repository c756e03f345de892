/**
 * Console wiring: context management on the left, a chat-style request box,
 * the stage diagram, and a detail pane for whichever node is selected.
 */

import { ApiError, createApi } from "./api.js";
import {
  renderContextOptions,
  renderDiagram,
  renderError,
  renderFinal,
  renderNodeDetail,
} from "./render.js";
import { buildDiagram, focusStage, type DiagramView } from "./viewmodel.js";
import type { Backend } from "./types.js";

const api = createApi("");

const contextSelect = document.getElementById("context-select") as HTMLSelectElement;
const contextDoc = document.getElementById("context-doc") as HTMLTextAreaElement;
const contextAddBtn = document.getElementById("context-add") as HTMLButtonElement;
const contextStatus = document.getElementById("context-status")!;
const queryInput = document.getElementById("query-input") as HTMLInputElement;
const backendSelect = document.getElementById("backend-select") as HTMLSelectElement;
const runBtn = document.getElementById("run-btn") as HTMLButtonElement;
const historyEl = document.getElementById("history")!;
const diagramEl = document.getElementById("diagram")!;
const detailEl = document.getElementById("detail")!;
const finalEl = document.getElementById("final")!;
const healthEl = document.getElementById("health")!;

let pending = false;
let view: DiagramView | null = null;
let selectedStage: string | null = null;

function syncRunButton(): void {
  runBtn.disabled = pending || queryInput.value.trim() === "" || contextSelect.value === "";
}

function setPending(value: boolean): void {
  pending = value;
  runBtn.textContent = value ? "Running…" : "Run";
  syncRunButton();
}

function showDiagram(): void {
  if (!view) return;
  diagramEl.innerHTML = renderDiagram(view, selectedStage);
  const node = view.nodes.find((n) => n.stage === selectedStage);
  detailEl.innerHTML = node ? renderNodeDetail(node) : "";
  finalEl.innerHTML = renderFinal(view);
}

function selectStage(stage: string): void {
  selectedStage = stage;
  showDiagram();
}

function pushHistory(query: string, outcome: string): void {
  const entry = document.createElement("div");
  entry.className = `history-entry history-${outcome}`;
  const q = document.createElement("span");
  q.className = "history-query";
  q.textContent = query;
  const o = document.createElement("span");
  o.className = "history-outcome";
  o.textContent = outcome;
  entry.append(q, o);
  historyEl.prepend(entry);
}

async function refreshContexts(select?: string): Promise<void> {
  try {
    const contexts = await api.listContexts();
    const keep = select ?? contextSelect.value;
    contextSelect.innerHTML = renderContextOptions(
      contexts,
      contexts.some((c) => c.id === keep) ? keep : contexts[0]?.id ?? null,
    );
  } catch (err) {
    contextStatus.innerHTML = renderError(errorText(err));
  }
  syncRunButton();
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return String(err);
}

async function onAddContext(): Promise<void> {
  contextStatus.textContent = "";
  let doc: unknown;
  try {
    doc = JSON.parse(contextDoc.value);
  } catch (err) {
    contextStatus.innerHTML = renderError(`not valid JSON: ${String(err)}`);
    return;
  }
  contextAddBtn.disabled = true;
  try {
    const id = await api.addContext(doc);
    contextStatus.textContent = `stored context ${id}`;
    contextDoc.value = "";
    await refreshContexts(id);
  } catch (err) {
    contextStatus.innerHTML = renderError(errorText(err));
  } finally {
    contextAddBtn.disabled = false;
  }
}

async function onRun(): Promise<void> {
  const query = queryInput.value.trim();
  const contextId = contextSelect.value;
  if (pending || query === "" || contextId === "") return;
  setPending(true);
  diagramEl.innerHTML = "";
  detailEl.innerHTML = "";
  finalEl.innerHTML = "";
  try {
    const backend = (backendSelect.value || undefined) as Backend | undefined;
    const trace = await api.run(contextId, query, backend);
    view = buildDiagram(trace);
    selectedStage = focusStage(view);
    showDiagram();
    pushHistory(query, view.outcome);
  } catch (err) {
    view = null;
    diagramEl.innerHTML = renderError(errorText(err));
  } finally {
    setPending(false);
  }
}

diagramEl.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-stage]");
  if (target) selectStage(target.getAttribute("data-stage")!);
});

diagramEl.addEventListener("keydown", (event) => {
  if (event.key !== "Enter" && event.key !== " ") return;
  const target = (event.target as HTMLElement).closest("[data-stage]");
  if (target) {
    event.preventDefault();
    selectStage(target.getAttribute("data-stage")!);
  }
});

runBtn.addEventListener("click", () => void onRun());
queryInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void onRun();
});
queryInput.addEventListener("input", syncRunButton);
contextSelect.addEventListener("change", syncRunButton);
contextAddBtn.addEventListener("click", () => void onAddContext());

void (async () => {
  const up = await api.health();
  healthEl.textContent = up ? "service up" : "service unreachable";
  healthEl.className = up ? "health health-up" : "health health-down";
  await refreshContexts();
  syncRunButton();
})();

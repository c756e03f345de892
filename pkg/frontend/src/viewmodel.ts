/**
 * Trace document -> diagram view model.
 *
 * Pure functions only: the renderer and the tests both consume these, the
 * DOM layer in app.ts never computes anything itself.
 */

import type {
  FindingDoc,
  Outcome,
  StageDoc,
  StageStatus,
  TraceDoc,
} from "./types.js";

export const STAGE_LABELS: Record<string, string> = {
  resolver: "Resolver",
  ir_builder: "IR Builder",
  lint_general: "General Lint",
  lint_panos: "PAN-OS Lint",
  safety_gate: "Safety Gate",
  compiler: "Compiler",
  verifier: "Verifier",
};

export interface NodeView {
  stage: string;
  label: string;
  status: StageStatus;
  /** CSS hook, e.g. "node-warned". */
  statusClass: string;
  findings: FindingDoc[];
  warningCount: number;
  errorCount: number;
  durationMs: number;
  input: unknown;
  inputDigest: string | null;
  output: unknown;
}

export interface DiagramView {
  nodes: NodeView[];
  outcome: Outcome;
  blocked: boolean;
  /** Compiled config text, null when the pipeline never produced one. */
  finalText: string | null;
}

export function buildNode(doc: StageDoc): NodeView {
  const warnings = doc.findings.filter((f) => f.severity === "warning");
  const errors = doc.findings.filter((f) => f.severity === "error");
  return {
    stage: doc.stage,
    label: STAGE_LABELS[doc.stage] ?? doc.stage,
    status: doc.status,
    statusClass: `node-${doc.status}`,
    findings: doc.findings,
    warningCount: warnings.length,
    errorCount: errors.length,
    durationMs: doc.duration_ms,
    input: doc.input,
    inputDigest: doc.input_digest,
    output: doc.output,
  };
}

/** Worst stage status wins, same precedence the service applies. */
export function traceOutcome(stages: StageDoc[]): Outcome {
  const statuses = new Set(stages.map((s) => s.status));
  if (statuses.has("failed")) return "failed";
  if (statuses.has("blocked")) return "blocked";
  if (statuses.has("warned")) return "warned";
  return "ok";
}

export function buildDiagram(trace: TraceDoc): DiagramView {
  const nodes = trace.stages.map(buildNode);
  const outcome = traceOutcome(trace.stages);
  return {
    nodes,
    outcome,
    blocked: outcome === "blocked",
    finalText: trace.final ? trace.final.text : null,
  };
}

/**
 * The config text a stage produced, when its output looks like a device
 * config document. Compiler and verifier inputs/outputs carry one; other
 * stages return null.
 */
export function cliText(output: unknown): string | null {
  if (output && typeof output === "object" && !Array.isArray(output)) {
    const text = (output as Record<string, unknown>)["text"];
    if (typeof text === "string") return text;
  }
  return null;
}

/**
 * The stage whose detail pane should open first: the stage that stopped
 * the run if one did, otherwise the compiler.
 */
export function focusStage(view: DiagramView): string {
  const stopped = view.nodes.find((n) => n.status === "blocked" || n.status === "failed");
  if (stopped) return stopped.stage;
  const compiler = view.nodes.find((n) => n.stage === "compiler");
  return compiler ? compiler.stage : view.nodes[view.nodes.length - 1]?.stage ?? "";
}

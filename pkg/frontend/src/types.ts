/**
 * Wire types for the pipeline service API.
 *
 * These mirror the JSON documents returned by /api/pipeline/run and the
 * context endpoints. Everything here is a plain shape; no behavior.
 */

export type StageStatus = "ok" | "warned" | "blocked" | "skipped" | "failed";

export type Outcome = "ok" | "warned" | "blocked" | "failed";

export type Severity = "warning" | "error";

export interface FindingDoc {
  code: string;
  severity: Severity;
  layer: string;
  message: string;
  rule_id?: string | null;
}

export interface StageDoc {
  stage: string;
  status: StageStatus;
  /** Verbatim stage input, or null when it was oversized and digested. */
  input: unknown;
  input_digest: string | null;
  output: unknown;
  findings: FindingDoc[];
  duration_ms: number;
}

export interface FinalConfigDoc {
  lines: string[];
  text: string;
  emitted_objects: Record<string, unknown>;
  rule_order: string[];
}

export interface TraceDoc {
  request_id: string;
  context_id: string;
  query: string;
  stages: StageDoc[];
  /** Compiled device config; null when the run never reached the compiler. */
  final: FinalConfigDoc | null;
}

export interface ContextSummary {
  id: string;
  title: string;
  zones: number;
  objects: number;
  services: number;
  schedules: number;
}

export type Backend = "grammar" | "agent" | "ir";

export interface RunRequestBody {
  context_id: string;
  query: string;
  backend?: Backend;
}

/**
 * Thin client for the pipeline service. fetch is injectable so unit tests
 * can run without a server and the contract test can point at a live one.
 */

import type { Backend, ContextSummary, RunRequestBody, TraceDoc } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, message: string, detail: unknown = null) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface ConsoleApi {
  health(): Promise<boolean>;
  listContexts(): Promise<ContextSummary[]>;
  getContext(id: string): Promise<unknown>;
  /** Returns the stored context id. */
  addContext(document: unknown): Promise<string>;
  run(contextId: string, query: string, backend?: Backend): Promise<TraceDoc>;
}

const defaultFetch: FetchLike = (input, init) => globalThis.fetch(input, init);

export function createApi(baseUrl = "", fetchImpl: FetchLike = defaultFetch): ConsoleApi {
  async function request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetchImpl(baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON body; leave null
    }
    if (!response.ok) {
      const detail = body && typeof body === "object" ? (body as Record<string, unknown>)["detail"] : null;
      throw new ApiError(response.status, apiErrorMessage(response.status, detail), detail ?? body);
    }
    return body as T;
  }

  return {
    async health() {
      try {
        const doc = await request<{ status: string }>("/api/health");
        return doc.status === "ok";
      } catch {
        return false;
      }
    },

    async listContexts() {
      const doc = await request<{ contexts: ContextSummary[] }>("/api/contexts");
      return doc.contexts;
    },

    getContext(id: string) {
      return request<unknown>(`/api/contexts/${encodeURIComponent(id)}`);
    },

    async addContext(document: unknown) {
      const doc = await request<{ id: string }>("/api/contexts", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(document),
      });
      return doc.id;
    },

    run(contextId: string, query: string, backend?: Backend) {
      const body: RunRequestBody = { context_id: contextId, query };
      if (backend) body.backend = backend;
      return request<TraceDoc>("/api/pipeline/run", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    },
  };
}

function apiErrorMessage(status: number, detail: unknown): string {
  if (typeof detail === "string") return detail;
  if (detail && typeof detail === "object") {
    const findings = (detail as Record<string, unknown>)["findings"];
    if (Array.isArray(findings) && findings.length > 0) {
      const first = findings[0] as Record<string, unknown>;
      const rest = findings.length > 1 ? ` (+${findings.length - 1} more)` : "";
      return `${String(first["code"] ?? "finding")}: ${String(first["message"] ?? "")}${rest}`;
    }
    const code = (detail as Record<string, unknown>)["code"];
    if (typeof code === "string") return code;
  }
  return `request failed with status ${status}`;
}

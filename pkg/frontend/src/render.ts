/**
 * Pure HTML string renderers. No DOM access here so the whole layer can be
 * unit-tested in a plain node environment; app.ts owns insertion and events.
 */

import type { ContextSummary, FindingDoc } from "./types.js";
import { cliText, type DiagramView, type NodeView } from "./viewmodel.js";

export function escapeHtml(value: unknown): string {
  if (value === null || value === undefined) return "";
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function findingBadge(node: NodeView): string {
  if (node.errorCount > 0) {
    return `<span class="badge badge-error">${node.errorCount}</span>`;
  }
  if (node.warningCount > 0) {
    return `<span class="badge badge-warning">${node.warningCount}</span>`;
  }
  return "";
}

/** One box per pipeline stage, joined left to right by CSS connectors. */
export function renderDiagram(view: DiagramView, selectedStage: string | null = null): string {
  const parts: string[] = [];
  view.nodes.forEach((node, index) => {
    if (index > 0) parts.push('<span class="edge" aria-hidden="true"></span>');
    const selected = node.stage === selectedStage ? " node-selected" : "";
    parts.push(
      `<div class="node ${node.statusClass}${selected}" data-stage="${escapeHtml(node.stage)}" role="button" tabindex="0">` +
        `<span class="node-label">${escapeHtml(node.label)}</span>` +
        `<span class="node-status">${escapeHtml(node.status)}</span>` +
        findingBadge(node) +
        `</div>`,
    );
  });
  return `<div class="diagram" data-outcome="${escapeHtml(view.outcome)}">${parts.join("")}</div>`;
}

export function renderFindings(findings: FindingDoc[]): string {
  if (findings.length === 0) {
    return '<p class="findings-empty">No findings.</p>';
  }
  const rows = findings
    .map(
      (f) =>
        `<tr class="finding-${escapeHtml(f.severity)}">` +
        `<td class="finding-code">${escapeHtml(f.code)}</td>` +
        `<td>${escapeHtml(f.severity)}</td>` +
        `<td>${escapeHtml(f.message)}</td>` +
        `<td>${escapeHtml(f.rule_id ?? "")}</td>` +
        `</tr>`,
    )
    .join("");
  return (
    '<table class="findings"><thead><tr>' +
    "<th>code</th><th>severity</th><th>message</th><th>rule</th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

function renderPayload(label: string, value: unknown, digest: string | null = null): string {
  if (value === null || value === undefined) {
    if (digest) {
      return (
        `<h4>${escapeHtml(label)}</h4>` +
        `<p class="payload-digest">oversized payload, sha256 ${escapeHtml(digest)}</p>`
      );
    }
    return "";
  }
  const text = cliText(value);
  if (text !== null) {
    return `<h4>${escapeHtml(label)}</h4><pre class="cli">${escapeHtml(text)}</pre>`;
  }
  return `<h4>${escapeHtml(label)}</h4><pre class="payload">${escapeHtml(
    JSON.stringify(value, null, 2),
  )}</pre>`;
}

export function renderNodeDetail(node: NodeView): string {
  return (
    `<div class="detail" data-stage="${escapeHtml(node.stage)}">` +
    `<h3>${escapeHtml(node.label)} <span class="detail-status ${node.statusClass}">${escapeHtml(node.status)}</span></h3>` +
    `<p class="detail-meta">${node.durationMs.toFixed(2)} ms</p>` +
    renderFindings(node.findings) +
    renderPayload("input", node.input, node.inputDigest) +
    renderPayload("output", node.output) +
    `</div>`
  );
}

export function renderFinal(view: DiagramView): string {
  if (view.finalText !== null) {
    return (
      '<div class="final final-ok"><h3>Compiled configuration</h3>' +
      `<pre class="cli">${escapeHtml(view.finalText)}</pre></div>`
    );
  }
  if (view.blocked) {
    return (
      '<div class="final final-blocked"><h3>Blocked</h3>' +
      "<p>The safety gate rejected this request; nothing was compiled.</p></div>"
    );
  }
  return (
    '<div class="final final-failed"><h3>No configuration</h3>' +
    "<p>The pipeline stopped before the compiler produced output.</p></div>"
  );
}

export function renderContextOptions(contexts: ContextSummary[], selected: string | null): string {
  if (contexts.length === 0) {
    return '<option value="" disabled selected>no contexts stored</option>';
  }
  return contexts
    .map((c) => {
      const sel = c.id === selected ? " selected" : "";
      const label = `${c.id} (${c.objects} objects, ${c.zones} zones)`;
      return `<option value="${escapeHtml(c.id)}"${sel}>${escapeHtml(label)}</option>`;
    })
    .join("");
}

export function renderError(message: string): string {
  return `<div class="error-banner">${escapeHtml(message)}</div>`;
}

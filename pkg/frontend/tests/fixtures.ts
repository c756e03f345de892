/**
 * Canned trace documents shaped exactly like /api/pipeline/run responses.
 * The contract test checks a live service; these keep the unit tests fast.
 */

import type { StageDoc, TraceDoc } from "../src/types.js";

function stage(partial: Partial<StageDoc> & { stage: string }): StageDoc {
  return {
    status: "ok",
    input: {},
    input_digest: null,
    output: {},
    findings: [],
    duration_ms: 0.2,
    ...partial,
  };
}

export const CLI_TEXT = [
  "set service svc-tcp-5432 protocol tcp port 5432",
  "set rulebase security rules R1 from dmz",
  "set rulebase security rules R1 to trust",
  "set rulebase security rules R1 action allow",
].join("\n") + "\n";

export function warnedTrace(): TraceDoc {
  const config = {
    lines: CLI_TEXT.trimEnd().split("\n"),
    text: CLI_TEXT,
    emitted_objects: { services: [{ name: "svc-tcp-5432", reused: false }] },
    rule_order: ["R1"],
  };
  return {
    request_id: "req-0001",
    context_id: "ecommerce",
    query: "Allow WebServer to reach DB over tcp 5432",
    stages: [
      stage({ stage: "resolver", input: { query: "..." }, output: { rules: 1 } }),
      stage({ stage: "ir_builder" }),
      stage({ stage: "lint_general" }),
      stage({
        stage: "lint_panos",
        status: "warned",
        findings: [
          {
            code: "W-PAN-05",
            severity: "warning",
            layer: "vendor_linter",
            message: "no built-in application covers tcp/5432; a custom service object is required",
            rule_id: "R1",
          },
          {
            code: "W-PAN-06",
            severity: "warning",
            layer: "vendor_linter",
            message: "inbound rule originates from a trust-level zone",
            rule_id: "R1",
          },
        ],
      }),
      stage({ stage: "safety_gate", output: { safe: true } }),
      stage({ stage: "compiler", output: config, duration_ms: 1.5 }),
      stage({
        stage: "verifier",
        status: "warned",
        input: config,
        findings: [
          {
            code: "W-VFY-UNUSED",
            severity: "warning",
            layer: "verifier",
            message: "address Guests is defined but never referenced",
          },
        ],
        output: { findings: 1 },
      }),
    ],
    final: config,
  };
}

export function blockedTrace(): TraceDoc {
  return {
    request_id: "req-0002",
    context_id: "ecommerce",
    query: "Allow anyone to reach anything",
    stages: [
      stage({ stage: "resolver" }),
      stage({ stage: "ir_builder" }),
      stage({ stage: "lint_general" }),
      stage({
        stage: "lint_panos",
        status: "warned",
        findings: [
          {
            code: "W-PAN-02",
            severity: "warning",
            layer: "vendor_linter",
            message: "source zones are empty",
            rule_id: "R1",
          },
        ],
      }),
      stage({
        stage: "safety_gate",
        status: "blocked",
        output: { safe: false },
        findings: [
          {
            code: "E-SG-01",
            severity: "error",
            layer: "safety_gate",
            message: "allow rule admits traffic from any source to any destination",
            rule_id: "R1",
          },
          {
            code: "E-SG-02",
            severity: "error",
            layer: "safety_gate",
            message: "source zones missing",
            rule_id: "R1",
          },
        ],
      }),
      stage({ stage: "compiler", status: "skipped", input: null, output: null }),
      stage({ stage: "verifier", status: "skipped", input: null, output: null }),
    ],
    final: null,
  };
}

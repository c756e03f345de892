"""Pipeline orchestrator: one request in, one trace out.

Every run produces exactly one StageRecord per stage, in fixed order, so a
trace is always the same shape whether the request sailed through, got
blocked at the safety gate, or died in the parser. Linters can warn but
never stop a run; only the safety gate blocks; a failed stage skips the
rest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
import uuid
from dataclasses import dataclass, field

from . import panos
from .context import ContextNotFound, NetworkContext, context_to_doc
from .findings import Finding, has_errors, make_finding
from .intent import (
    AgentConfig,
    AgentError,
    IntentError,
    ParseError,
    build_ir,
    intent_to_doc,
    invoke_agent,
    parse_controlled,
    resolve,
)
from .ir import DecodeError, IRPolicy, PolicyInvalid, policy_from_doc, policy_to_doc, validate_policy
from .schemas import AGENT_SCHEMAS
from .validators import lint_general, lint_panos, safety_gate
from .verifier import synth_header, verify

STAGES = (
    "resolver",
    "ir_builder",
    "lint_general",
    "lint_panos",
    "safety_gate",
    "compiler",
    "verifier",
)

BACKENDS = ("grammar", "agent", "ir")

# Stage inputs/outputs are stored verbatim in the trace up to this many
# bytes of serialized JSON; beyond it only the digest survives.
MAX_VERBATIM_BYTES = 65536

STATUS_OK = "ok"
STATUS_WARNED = "warned"
STATUS_BLOCKED = "blocked"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"


@dataclass
class StageRecord:
    stage: str
    status: str
    input: object
    input_digest: str | None
    output: object
    findings: list[Finding] = field(default_factory=list)
    duration_ms: float = 0.0

    def to_doc(self) -> dict:
        return {
            "stage": self.stage,
            "status": self.status,
            "input": self.input,
            "input_digest": self.input_digest,
            "output": self.output,
            "findings": [f.to_doc() for f in self.findings],
            "duration_ms": self.duration_ms,
        }


@dataclass
class PipelineTrace:
    request_id: str
    context_id: str
    query: str
    stages: list[StageRecord]
    final: dict | None
    # Convenience handles for callers that need the real objects rather
    # than trace documents; not part of the serialized trace.
    policy: IRPolicy | None = None
    config: panos.DeviceConfig | None = None

    def outcome(self) -> str:
        statuses = [s.status for s in self.stages]
        if STATUS_FAILED in statuses:
            return STATUS_FAILED
        if STATUS_BLOCKED in statuses:
            return STATUS_BLOCKED
        if STATUS_WARNED in statuses:
            return STATUS_WARNED
        return STATUS_OK

    def finding_codes(self) -> list[str]:
        out = []
        for record in self.stages:
            for finding in record.findings:
                out.append(finding.code)
        return out

    def to_doc(self) -> dict:
        return {
            "request_id": self.request_id,
            "context_id": self.context_id,
            "query": self.query,
            "stages": [s.to_doc() for s in self.stages],
            "final": self.final,
        }


def _digest(doc) -> str:
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _capture(doc):
    """Return (stored_doc, digest), dropping the verbatim copy when oversized."""
    if doc is None:
        return None, None
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    if len(payload.encode("utf-8")) > MAX_VERBATIM_BYTES:
        return None, digest
    return doc, digest


def _capture_output(doc):
    if doc is None:
        return None
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    raw = payload.encode("utf-8")
    if len(raw) > MAX_VERBATIM_BYTES:
        return {"truncated": True, "sha256": hashlib.sha256(raw).hexdigest(), "bytes": len(raw)}
    return doc


def lookup_context(store, context_id: str) -> NetworkContext:
    """Fetch a context from a ContextStore or any mapping."""
    if hasattr(store, "get") and not isinstance(store, dict):
        return store.get(context_id)
    try:
        return store[context_id]
    except KeyError:
        raise ContextNotFound(context_id) from None


class _Run:
    """Mutable state for a single pipeline execution."""

    def __init__(self):
        self.records: list[StageRecord] = []
        self.dead = False  # a stage failed; everything after is skipped
        self.blocked = False  # gate said no; compile/verify are skipped

    def skip(self, stage: str):
        self.records.append(
            StageRecord(stage=stage, status=STATUS_SKIPPED, input=None, input_digest=None, output=None)
        )

    def run(self, stage: str, input_doc, fn):
        """Execute fn() -> (status, output_doc, findings) and record it."""
        stored_input, digest = _capture(input_doc)
        started = time.perf_counter()
        status, output_doc, findings = fn()
        elapsed = round((time.perf_counter() - started) * 1000.0, 3)
        self.records.append(
            StageRecord(
                stage=stage,
                status=status,
                input=stored_input,
                input_digest=digest,
                output=_capture_output(output_doc),
                findings=list(findings),
                duration_ms=elapsed,
            )
        )
        if status == STATUS_FAILED:
            self.dead = True
        if status == STATUS_BLOCKED:
            self.blocked = True


def run_pipeline(
    store,
    context_id: str,
    query: str,
    backend: str = "grammar",
    agent: AgentConfig | None = None,
    audit_path: str | None = None,
    request_id: str | None = None,
) -> PipelineTrace:
    """Run the seven-stage pipeline for one request.

    Raises ContextNotFound for an unknown context id and ValueError for an
    unknown backend; everything else is reported inside the trace.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "agent" and agent is None:
        raise ValueError("agent backend requires an AgentConfig")
    context = lookup_context(store, context_id)
    run = _Run()

    # Stage 1: resolver. Grammar parses and grounds the query; agent asks a
    # remote model for grounded clauses; ir treats the query as a policy doc.
    resolver_input = {"query": query, "context_id": context.id}
    intent_doc: dict | None = None
    policy_doc_from_ir: dict | None = None
    resolved = None

    def _resolver():
        nonlocal intent_doc, policy_doc_from_ir, resolved
        if backend == "grammar":
            try:
                resolved = resolve(parse_controlled(query), context)
            except ParseError as exc:
                return STATUS_FAILED, None, [exc.to_finding()]
            intent_doc = intent_to_doc(resolved)
            return STATUS_OK, intent_doc, []
        if backend == "agent":
            try:
                intent_doc = invoke_agent(
                    agent,
                    "resolver",
                    {"query": query, "context": context_to_doc(context)},
                    AGENT_SCHEMAS["resolver"],
                )
            except AgentError as exc:
                return STATUS_FAILED, None, [exc.finding]
            return STATUS_OK, intent_doc, []
        # ir backend: the query text is a policy document already.
        try:
            policy_doc_from_ir = json.loads(query)
        except json.JSONDecodeError as exc:
            finding = ParseError(f"policy document is not valid JSON: {exc.msg}", exc.pos).to_finding()
            return STATUS_FAILED, None, [finding]
        if not isinstance(policy_doc_from_ir, dict):
            finding = ParseError("policy document must be a JSON object", 0).to_finding()
            return STATUS_FAILED, None, [finding]
        return STATUS_OK, policy_doc_from_ir, []

    run.run("resolver", resolver_input, _resolver)

    # Stage 2: ir_builder. Build (or decode) the typed policy, then hold it
    # to the schema validator regardless of where it came from.
    policy: IRPolicy | None = None

    def _builder():
        nonlocal policy
        if backend == "grammar":
            try:
                policy = build_ir(resolved, context)
            except IntentError as exc:
                return STATUS_FAILED, None, [exc.finding]
        elif backend == "agent":
            try:
                doc = invoke_agent(
                    agent,
                    "builder",
                    {"context_id": context.id, "clauses": intent_doc.get("clauses", [])},
                    AGENT_SCHEMAS["builder"],
                )
                policy = policy_from_doc(doc)
            except AgentError as exc:
                return STATUS_FAILED, None, [exc.finding]
            except DecodeError as exc:
                return STATUS_FAILED, None, [make_finding("AGENT_SCHEMA_VIOLATION", str(exc))]
        else:
            try:
                policy = policy_from_doc(policy_doc_from_ir)
            except DecodeError as exc:
                return STATUS_FAILED, None, [make_finding("PARSE_SYNTAX", str(exc))]
            if policy.context_id != context.id:
                policy = dataclasses.replace(policy, context_id=context.id)
        findings = validate_policy(policy)
        if findings:
            policy = None
            return STATUS_FAILED, None, findings
        return STATUS_OK, policy_to_doc(policy), []

    if run.dead:
        run.skip("ir_builder")
    else:
        builder_input = intent_doc if backend != "ir" else policy_doc_from_ir
        run.run("ir_builder", builder_input, _builder)

    policy_doc = policy_to_doc(policy) if policy is not None else None

    # Stages 3-4: advisory linters. Warnings only, by construction.
    linters = (
        ("lint_general", lambda: lint_general(policy)),
        ("lint_panos", lambda: lint_panos(policy, context)),
    )
    for stage, linter in linters:
        if run.dead:
            run.skip(stage)
            continue

        def _lint(linter=linter):
            findings = linter()
            return (STATUS_WARNED if findings else STATUS_OK), None, findings

        run.run(stage, policy_doc, _lint)

    # Stage 5: the safety gate, the only stage allowed to block.
    def _gate():
        result = safety_gate(policy)
        if result.safe:
            return STATUS_OK, {"safe": True}, []
        return STATUS_BLOCKED, {"safe": False}, result.errors

    if run.dead:
        run.skip("safety_gate")
    else:
        run.run("safety_gate", policy_doc, _gate)

    # Stage 6: compiler.
    config: panos.DeviceConfig | None = None

    def _compile():
        nonlocal config
        try:
            config = panos.compile(policy, context)
        except panos.CompileError as exc:
            return STATUS_FAILED, None, [exc.to_finding()]
        return STATUS_OK, config.to_doc(), []

    if run.dead or run.blocked:
        run.skip("compiler")
    else:
        run.run("compiler", policy_doc, _compile)

    # Stage 7: static verification against the synthetic device model.
    def _verify():
        header = synth_header(context)
        findings = verify(config.lines, header)
        if has_errors(findings):
            return STATUS_FAILED, {"errors": True}, findings
        status = STATUS_WARNED if findings else STATUS_OK
        return status, {"errors": False}, findings

    if run.dead or run.blocked:
        run.skip("verifier")
    else:
        run.run("verifier", {"lines": list(config.lines)} if config else None, _verify)

    trace = PipelineTrace(
        request_id=request_id or uuid.uuid4().hex[:12],
        context_id=context.id,
        query=query,
        stages=run.records,
        final=config.to_doc() if config is not None else None,
        policy=policy,
        config=config,
    )
    if audit_path:
        append_audit(audit_path, trace)
    return trace


def append_audit(path: str, trace: PipelineTrace) -> None:
    """Append one JSONL audit record for a pipeline run."""
    gate = next(s for s in trace.stages if s.stage == "safety_gate")
    if gate.status == STATUS_SKIPPED:
        verdict = "skipped"
    elif gate.status == STATUS_BLOCKED:
        verdict = "blocked"
    else:
        verdict = "safe"
    entry = {
        "ts": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "request_id": trace.request_id,
        "context_id": trace.context_id,
        "query": trace.query,
        "gate": verdict,
        "outcome": trace.outcome(),
        "findings": trace.finding_codes(),
    }
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

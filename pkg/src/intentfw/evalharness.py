"""Evaluation harness: triplet suites, IR equality, and text similarity.

A triplet pins one query to the exact IR and CLI the pipeline must produce
for a given context. Semantic accuracy is byte equality of canonical IR
encodings; syntactic accuracy is sequence similarity of the CLI text, with
1.0 required to pass. Cases marked expect_blocked pass only when the
safety gate refuses the request.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field

from .context import ContextNotFound
from .findings import Finding, make_finding
from .ir import DecodeError, IRPolicy, PolicyInvalid, canonical_json, canonicalize, policy_from_doc, policy_to_doc
from .pipeline import run_pipeline


def _longest_match(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int):
    """Longest common block in a[alo:ahi] x b[blo:bhi].

    Ties go to the earliest start in a, then the earliest start in b.
    """
    besti, bestj, bestsize = alo, blo, 0
    j2len: dict[int, int] = {}
    for i in range(alo, ahi):
        newj2len: dict[int, int] = {}
        for j in range(blo, bhi):
            if a[i] == b[j]:
                k = newj2len[j] = j2len.get(j - 1, 0) + 1
                if k > bestsize:
                    besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def similarity(a: str, b: str) -> float:
    """Ratio of matched characters to total length, in [0.0, 1.0].

    Recursively anchors on the longest common block, then matches the
    pieces to its left and right. Two empty strings are identical.
    """
    if not a and not b:
        return 1.0
    matches = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        i, j, k = _longest_match(a, b, alo, ahi, blo, bhi)
        if k:
            matches += k
            stack.append((alo, i, blo, j))
            stack.append((i + k, ahi, j + k, bhi))
    return 2.0 * matches / (len(a) + len(b))


def ir_equal(a: IRPolicy, b: IRPolicy) -> bool:
    """Byte equality of canonical encodings; raises PolicyInvalid on bad input."""
    return canonical_encoding(a) == canonical_encoding(b)


def canonical_encoding(policy: IRPolicy) -> bytes:
    return canonical_json(policy_to_doc(canonicalize(policy))).encode("utf-8")


class TripletError(Exception):
    """A triplet file that cannot be loaded; carries schema findings."""

    def __init__(self, findings):
        super().__init__("; ".join(f"{f.code}: {f.message}" for f in findings))
        self.findings = list(findings)


@dataclass(frozen=True)
class TripletCase:
    id: str
    context_id: str
    query: str
    expected_ir: dict | None = None
    expected_cli: str | None = None
    expect_blocked: bool = False


def load_triplets(document) -> list:
    """Parse and validate a triplet suite document."""
    findings: list[Finding] = []
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TripletError(
                [make_finding("TPL_SYNTAX", f"{exc.msg} (line {exc.lineno}, column {exc.colno})")]
            ) from exc
    else:
        doc = document
    if not isinstance(doc, dict) or not isinstance(doc.get("cases"), list):
        raise TripletError([make_finding("TPL_SCHEMA", "top level must be an object with a cases array")])

    cases: list[TripletCase] = []
    seen: set[str] = set()
    for index, raw in enumerate(doc["cases"]):
        label = f"cases[{index}]"
        if not isinstance(raw, dict):
            findings.append(make_finding("TPL_SCHEMA", f"{label} must be an object"))
            continue
        missing = [k for k in ("id", "context_id", "query") if not isinstance(raw.get(k), str) or not raw.get(k)]
        expect_blocked = raw.get("expect_blocked", False)
        if not isinstance(expect_blocked, bool):
            findings.append(make_finding("TPL_SCHEMA", f"{label}: expect_blocked must be a boolean"))
            continue
        if not expect_blocked:
            if not isinstance(raw.get("expected_ir"), dict):
                missing.append("expected_ir")
            if not isinstance(raw.get("expected_cli"), str):
                missing.append("expected_cli")
        if missing:
            for name in missing:
                findings.append(make_finding("TPL_MISSING_FIELD", f"{label}: missing or invalid field {name!r}"))
            continue
        if raw["id"] in seen:
            findings.append(make_finding("TPL_SCHEMA", f"{label}: duplicate case id {raw['id']!r}"))
            continue
        seen.add(raw["id"])
        cases.append(
            TripletCase(
                id=raw["id"],
                context_id=raw["context_id"],
                query=raw["query"],
                expected_ir=raw.get("expected_ir"),
                expected_cli=raw.get("expected_cli"),
                expect_blocked=expect_blocked,
            )
        )
    if findings:
        raise TripletError(findings)
    return cases


@dataclass
class CaseResult:
    case_id: str
    status: str  # pass | fail | error
    semantic_pass: bool = False
    syntax_pass: bool = False
    similarity_score: float = 0.0
    detail: str = ""
    produced_ir: bytes | None = None
    produced_cli: str | None = None


@dataclass
class SuiteReport:
    results: list[CaseResult] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r.status == "pass")

    @property
    def failed(self) -> int:
        return sum(1 for r in self.results if r.status == "fail")

    @property
    def errored(self) -> int:
        return sum(1 for r in self.results if r.status == "error")

    @property
    def pass_rate(self) -> float:
        if not self.results:
            return 1.0
        return self.passed / self.total

    def render(self) -> str:
        lines = []
        for result in self.results:
            lines.append(f"case {result.case_id}: {result.status.upper()}")
            if result.detail:
                lines.extend("  " + l for l in result.detail.splitlines())
        lines.append(
            f"cases={self.total} pass={self.passed} fail={self.failed} "
            f"error={self.errored} rate={self.pass_rate:.3f}"
        )
        return "\n".join(lines) + "\n"


def _ir_diff(expected: IRPolicy, produced: IRPolicy) -> str:
    a = json.dumps(policy_to_doc(canonicalize(expected)), indent=2, sort_keys=True)
    b = json.dumps(policy_to_doc(canonicalize(produced)), indent=2, sort_keys=True)
    return "\n".join(difflib.unified_diff(a.splitlines(), b.splitlines(), "expected_ir", "produced_ir", lineterm=""))


def _cli_diff(expected: str, produced: str) -> str:
    return "\n".join(
        difflib.unified_diff(expected.splitlines(), produced.splitlines(), "expected_cli", "produced_cli", lineterm="")
    )


def _run_case(case: TripletCase, contexts) -> CaseResult:
    try:
        trace = run_pipeline(contexts, case.context_id, case.query)
    except ContextNotFound:
        return CaseResult(case.id, "error", detail=f"unknown context {case.context_id!r}")
    outcome = trace.outcome()

    if case.expect_blocked:
        if outcome == "blocked":
            return CaseResult(case.id, "pass")
        return CaseResult(case.id, "fail", detail=f"expected the safety gate to block, pipeline outcome was {outcome}")

    if outcome in ("blocked", "failed"):
        codes = ", ".join(trace.finding_codes()) or "no findings"
        return CaseResult(case.id, "fail", detail=f"pipeline outcome {outcome} ({codes})")

    try:
        expected_policy = policy_from_doc(case.expected_ir)
        expected_canonical = canonical_encoding(expected_policy)
    except (DecodeError, PolicyInvalid) as exc:
        return CaseResult(case.id, "error", detail=f"expected_ir does not decode: {exc}")

    produced_canonical = canonical_encoding(trace.policy)
    semantic = produced_canonical == expected_canonical

    produced_cli = trace.final["text"]
    score = similarity(produced_cli, case.expected_cli)
    syntactic = score == 1.0

    detail = ""
    if not semantic:
        detail += _ir_diff(expected_policy, trace.policy)
    if not syntactic:
        if detail:
            detail += "\n"
        detail += _cli_diff(case.expected_cli, produced_cli)

    return CaseResult(
        case_id=case.id,
        status="pass" if (semantic and syntactic) else "fail",
        semantic_pass=semantic,
        syntax_pass=syntactic,
        similarity_score=score,
        detail=detail,
        produced_ir=produced_canonical,
        produced_cli=produced_cli,
    )


def run_suite(cases, contexts) -> SuiteReport:
    """Run every case through the pipeline; one bad case never stops the rest."""
    report = SuiteReport()
    for case in sorted(cases, key=lambda c: c.id):
        report.results.append(_run_case(case, contexts))
    return report

"""Diagnostic findings shared by every validation layer.

Every code any layer can emit is registered in ``data/finding_catalog.json``
together with its severity and layer, so the CLI, the harness, and the
console all render the same diagnostics the same way. Linter layers are
warning-only by construction; only the safety gate, the compiler, and the
verifier may carry error severity among the pipeline layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

SEVERITY_WARNING = "warning"
SEVERITY_ERROR = "error"

# Layers that may appear on a Finding. The first five are the pipeline
# validation layers; the rest cover schema/infrastructure diagnostics.
LAYERS = (
    "general_linter",
    "vendor_linter",
    "safety_gate",
    "compiler",
    "verifier",
    "schema",
    "context",
    "engine",
    "harness",
)

_WARN_ONLY_LAYERS = {"general_linter", "vendor_linter"}


def _load_catalog() -> dict[str, dict[str, str]]:
    text = resources.files("intentfw.data").joinpath("finding_catalog.json").read_text("utf-8")
    catalog = json.loads(text)
    for code, entry in catalog.items():
        if entry["layer"] not in LAYERS:
            raise ValueError(f"catalog entry {code} has unknown layer {entry['layer']}")
        if entry["layer"] in _WARN_ONLY_LAYERS and entry["severity"] != SEVERITY_WARNING:
            raise ValueError(f"linter code {code} must be warning severity")
    return catalog


CATALOG: dict[str, dict[str, str]] = _load_catalog()


@dataclass(frozen=True)
class Finding:
    """One diagnostic from a validation layer, keyed by a stable code."""

    code: str
    severity: str
    layer: str
    message: str
    rule_id: str | None = None

    def to_doc(self) -> dict:
        doc = {
            "code": self.code,
            "severity": self.severity,
            "layer": self.layer,
            "message": self.message,
        }
        if self.rule_id is not None:
            doc["rule_id"] = self.rule_id
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "Finding":
        return cls(
            code=doc["code"],
            severity=doc["severity"],
            layer=doc["layer"],
            message=doc["message"],
            rule_id=doc.get("rule_id"),
        )


def make_finding(code: str, message: str, rule_id: str | None = None) -> Finding:
    """Build a Finding with severity and layer taken from the catalog."""
    entry = CATALOG[code]
    return Finding(
        code=code,
        severity=entry["severity"],
        layer=entry["layer"],
        message=message,
        rule_id=rule_id,
    )


def has_errors(findings: list[Finding]) -> bool:
    return any(f.severity == SEVERITY_ERROR for f in findings)

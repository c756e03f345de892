"""Typed vendor-agnostic rule representation.

The IR carries the five-tuple plus zones, direction, priority, logging and
an optional time window, decoupled from any device syntax. Values are
immutable after construction; every operation here is a pure function.

Construction is deliberately permissive: enum-like fields are plain strings
and ``PortSpec`` does not self-check, so documents produced by an external
agent can be represented as-is and reported on. ``validate_policy`` is the
single authority on value-level invariants; ``parse_port_spec`` is the
strict text-level entry point.
"""

from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass

from .findings import Finding, make_finding

ACTIONS = ("allow", "deny")
PROTOCOLS = ("tcp", "udp", "icmp", "any")
DIRECTIONS = ("inbound", "outbound", "any")
ENDPOINT_KINDS = ("object", "cidr", "any")
WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")

ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,63}$")

PRIORITY_MIN = 1
PRIORITY_MAX = 65535
DEFAULT_PRIORITY = 100


class PortSpecError(ValueError):
    """Raised by parse_port_spec; carries a stable code and the bad token."""

    def __init__(self, code: str, token: str, message: str):
        super().__init__(message)
        self.code = code
        self.token = token


class DecodeError(ValueError):
    """Raised by decode_policy for syntax or field-level schema problems."""

    def __init__(self, message: str, path: str = "", position: tuple[int, int] | None = None):
        detail = message if not path else f"{path}: {message}"
        if position is not None:
            detail = f"{detail} (line {position[0]}, column {position[1]})"
        super().__init__(detail)
        self.path = path
        self.position = position


@dataclass(frozen=True)
class PortSpec:
    """Inclusive port range; a single port has lo == hi."""

    lo: int
    hi: int

    def text(self) -> str:
        return str(self.lo) if self.lo == self.hi else f"{self.lo}-{self.hi}"


@dataclass(frozen=True)
class TimeWindow:
    """Named weekly recurrence; start/end are minutes from midnight."""

    name: str
    days: frozenset[str]
    start: int
    end: int


@dataclass(frozen=True)
class EndpointRef:
    """A rule member: a named object, a literal IPv4 CIDR, or any."""

    kind: str
    value: str = ""

    def text(self) -> str:
        return canonical_json(endpoint_to_doc(self))


@dataclass(frozen=True)
class IRRule:
    id: str
    name: str
    action: str
    protocol: str
    sources: tuple[EndpointRef, ...]
    destinations: tuple[EndpointRef, ...]
    source_zones: tuple[str, ...]
    destination_zones: tuple[str, ...]
    direction: str = "any"
    priority: int = DEFAULT_PRIORITY
    logging: bool = True
    ports: tuple[PortSpec, ...] | None = None
    application: str | None = None
    schedule: TimeWindow | None = None
    raw_policy: str = ""
    ambiguities: tuple[str, ...] = ()


@dataclass(frozen=True)
class IRPolicy:
    context_id: str
    rules: tuple[IRRule, ...]


def parse_port_spec(text: str) -> PortSpec:
    """Parse "N" or "N-M" into a PortSpec, enforcing 1 <= lo <= hi <= 65535."""
    text = text.strip()
    m = re.fullmatch(r"(\d+)(?:-(\d+))?", text)
    if not m:
        raise PortSpecError("PORT_SYNTAX", text, f"not a port or port range: {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    for value, token in ((lo, m.group(1)), (hi, m.group(2) or m.group(1))):
        if not 1 <= value <= 65535:
            raise PortSpecError("PORT_OUT_OF_RANGE", token, f"port {token} outside 1-65535")
    if lo > hi:
        raise PortSpecError("PORT_RANGE_INVERTED", text, f"inverted range {text!r}")
    return PortSpec(lo, hi)


def minutes_to_hhmm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def hhmm_to_minutes(text: str) -> int:
    m = re.fullmatch(r"(\d{1,2}):(\d{2})", text)
    if m is None:
        raise ValueError(f"not an HH:MM time: {text!r}")
    return int(m.group(1)) * 60 + int(m.group(2))


def _valid_cidr(value: str) -> bool:
    if "/" not in value:
        return False
    try:
        ipaddress.IPv4Network(value, strict=False)
    except (ValueError, TypeError):
        return False
    return True


def validate_policy(policy: IRPolicy) -> list[Finding]:
    """Return one Finding per type-invariant violation; [] iff the policy is valid.

    Accepts arbitrary decoded documents: violations are returned, never thrown.
    """
    findings: list[Finding] = []
    if not policy.rules:
        findings.append(make_finding("SCHEMA_EMPTY_POLICY", "policy has no rules"))

    seen_ids: set[str] = set()
    dup_reported: set[str] = set()
    for index, rule in enumerate(policy.rules):
        rid = rule.id if ID_RE.fullmatch(rule.id or "") else None
        label = rule.id or f"#{index}"
        if rid is None:
            findings.append(make_finding("SCHEMA_ID", f"rule {label}: id must match [A-Za-z0-9_-]{{1,63}}", rule.id or None))
        elif rid in seen_ids:
            if rid not in dup_reported:
                findings.append(make_finding("SCHEMA_DUP_ID", f"duplicate rule id {rid}", rid))
                dup_reported.add(rid)
        else:
            seen_ids.add(rid)

        # Enum checks fold case: canonicalize lower-cases these values, so
        # mixed-case spellings of a member are valid, unknown members are not.
        if rule.action.lower() not in ACTIONS:
            findings.append(make_finding("SCHEMA_ENUM", f"rule {label}: action {rule.action!r} not in {ACTIONS}", rule.id or None))
        if rule.protocol.lower() not in PROTOCOLS:
            findings.append(make_finding("SCHEMA_ENUM", f"rule {label}: protocol {rule.protocol!r} not in {PROTOCOLS}", rule.id or None))
        if rule.direction.lower() not in DIRECTIONS:
            findings.append(make_finding("SCHEMA_ENUM", f"rule {label}: direction {rule.direction!r} not in {DIRECTIONS}", rule.id or None))

        for role, members in (("source", rule.sources), ("destination", rule.destinations)):
            for ref in members:
                if ref.kind.lower() not in ENDPOINT_KINDS:
                    findings.append(make_finding("SCHEMA_ENUM", f"rule {label}: {role} kind {ref.kind!r} not in {ENDPOINT_KINDS}", rule.id or None))
                elif ref.kind.lower() == "cidr" and not _valid_cidr(ref.value):
                    findings.append(make_finding("SCHEMA_CIDR", f"rule {label}: {role} {ref.value!r} is not a valid IPv4 CIDR", rule.id or None))
                elif ref.kind.lower() == "object" and not ref.value:
                    findings.append(make_finding("SCHEMA_ENDPOINT", f"rule {label}: {role} object endpoint with empty value", rule.id or None))

        if rule.ports is not None:
            if rule.protocol.lower() in ("icmp", "any"):
                findings.append(make_finding("SCHEMA_PORTS_PROTOCOL", f"rule {label}: ports present under protocol {rule.protocol}", rule.id or None))
            for spec in rule.ports:
                if not (1 <= spec.lo <= spec.hi <= 65535):
                    findings.append(make_finding("SCHEMA_PORT_RANGE", f"rule {label}: port range {spec.text()} outside 1 <= lo <= hi <= 65535", rule.id or None))

        if not isinstance(rule.priority, int) or isinstance(rule.priority, bool) or not PRIORITY_MIN <= rule.priority <= PRIORITY_MAX:
            findings.append(make_finding("SCHEMA_PRIORITY", f"rule {label}: priority {rule.priority!r} outside [{PRIORITY_MIN}, {PRIORITY_MAX}]", rule.id or None))

        if rule.schedule is not None:
            w = rule.schedule
            problems = []
            if not w.name:
                problems.append("empty name")
            if not w.days:
                problems.append("empty day set")
            if any(d.lower() not in WEEKDAYS for d in w.days):
                problems.append("unknown day name")
            if not (0 <= w.start <= 1439 and 1 <= w.end <= 1440):
                problems.append("start/end out of range")
            if w.start >= w.end:
                problems.append("start not before end")
            if problems:
                findings.append(make_finding("SCHEMA_SCHEDULE", f"rule {label}: schedule invalid ({'; '.join(problems)})", rule.id or None))
    return findings


class PolicyInvalid(ValueError):
    """Raised when an operation requiring a valid policy receives an invalid one."""

    def __init__(self, findings: list[Finding]):
        super().__init__("; ".join(f"{f.code}: {f.message}" for f in findings))
        self.findings = findings


def _canonical_rule(rule: IRRule) -> IRRule:
    ports = rule.ports
    if ports is not None:
        ports = tuple(sorted(set(ports), key=lambda p: p.text())) or None
    schedule = rule.schedule
    if schedule is not None:
        schedule = TimeWindow(
            name=schedule.name,
            days=frozenset(d.lower() for d in schedule.days),
            start=schedule.start,
            end=schedule.end,
        )
    return IRRule(
        id=rule.id,
        name=rule.name,
        action=rule.action.lower(),
        protocol=rule.protocol.lower(),
        sources=tuple(sorted({EndpointRef(r.kind.lower(), r.value) for r in rule.sources}, key=EndpointRef.text)),
        destinations=tuple(sorted({EndpointRef(r.kind.lower(), r.value) for r in rule.destinations}, key=EndpointRef.text)),
        source_zones=tuple(sorted(set(rule.source_zones))),
        destination_zones=tuple(sorted(set(rule.destination_zones))),
        direction=rule.direction.lower(),
        priority=rule.priority,
        logging=rule.logging,
        ports=ports,
        application=rule.application or None,
        schedule=schedule,
        raw_policy="",
        ambiguities=(),
    )


def canonicalize(policy: IRPolicy) -> IRPolicy:
    """Return the canonical form used for structural equality.

    Member lists are treated as sets (deduplicated, sorted by serialized
    text), enum values lower-cased, empty optionals dropped, and provenance
    metadata (raw_policy, ambiguities) cleared. Idempotent.
    """
    findings = validate_policy(policy)
    if findings:
        raise PolicyInvalid(findings)
    return IRPolicy(context_id=policy.context_id, rules=tuple(_canonical_rule(r) for r in policy.rules))


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def endpoint_to_doc(ref: EndpointRef) -> dict:
    return {"kind": ref.kind, "value": ref.value}


def window_to_doc(window: TimeWindow) -> dict:
    return {
        "name": window.name,
        "days": sorted(window.days),
        "start": minutes_to_hhmm(window.start),
        "end": minutes_to_hhmm(window.end),
    }


def rule_to_doc(rule: IRRule) -> dict:
    doc = {
        "id": rule.id,
        "name": rule.name,
        "action": rule.action,
        "protocol": rule.protocol,
        "sources": [endpoint_to_doc(r) for r in rule.sources],
        "destinations": [endpoint_to_doc(r) for r in rule.destinations],
        "source_zones": list(rule.source_zones),
        "destination_zones": list(rule.destination_zones),
        "direction": rule.direction,
        "priority": rule.priority,
        "logging": rule.logging,
    }
    if rule.ports is not None:
        doc["ports"] = [p.text() for p in rule.ports]
    if rule.application is not None:
        doc["application"] = rule.application
    if rule.schedule is not None:
        doc["schedule"] = window_to_doc(rule.schedule)
    if rule.raw_policy:
        doc["raw_policy"] = rule.raw_policy
    if rule.ambiguities:
        doc["ambiguities"] = list(rule.ambiguities)
    return doc


def policy_to_doc(policy: IRPolicy) -> dict:
    return {"context_id": policy.context_id, "rules": [rule_to_doc(r) for r in policy.rules]}


def encode_policy(policy: IRPolicy) -> str:
    """Serialize a valid policy to its canonical UTF-8 JSON document text."""
    findings = validate_policy(policy)
    if findings:
        raise PolicyInvalid(findings)
    return canonical_json(policy_to_doc(policy))


_RULE_KEYS = {
    "id", "name", "action", "protocol", "sources", "destinations",
    "source_zones", "destination_zones", "ports", "application",
    "direction", "priority", "logging", "schedule", "raw_policy", "ambiguities",
}
_RULE_REQUIRED = (
    "id", "name", "action", "protocol", "sources", "destinations",
    "source_zones", "destination_zones", "direction", "priority", "logging",
)


def _decode_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise DecodeError("expected string", path)
    return value


def _decode_str_list(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list):
        raise DecodeError("expected array of strings", path)
    return tuple(_decode_str(v, f"{path}[{i}]") for i, v in enumerate(value))


def _decode_endpoint(doc, path: str) -> EndpointRef:
    if not isinstance(doc, dict):
        raise DecodeError("expected endpoint object", path)
    extra = set(doc) - {"kind", "value"}
    if extra:
        raise DecodeError(f"unknown keys {sorted(extra)}", path)
    if "kind" not in doc:
        raise DecodeError("missing field 'kind'", path)
    return EndpointRef(kind=_decode_str(doc["kind"], f"{path}.kind"), value=_decode_str(doc.get("value", ""), f"{path}.value"))


def _decode_port(text, path: str) -> PortSpec:
    # Lenient on ranges: value invariants are validate_policy's job.
    if not isinstance(text, str):
        raise DecodeError("expected port string", path)
    m = re.fullmatch(r"(\d+)(?:-(\d+))?", text.strip())
    if m is None:
        raise DecodeError(f"not a port or port range: {text!r}", path)
    lo = int(m.group(1))
    return PortSpec(lo, int(m.group(2)) if m.group(2) is not None else lo)


def _decode_window(doc, path: str) -> TimeWindow:
    if not isinstance(doc, dict):
        raise DecodeError("expected schedule object", path)
    extra = set(doc) - {"name", "days", "start", "end"}
    if extra:
        raise DecodeError(f"unknown keys {sorted(extra)}", path)
    for key in ("name", "days", "start", "end"):
        if key not in doc:
            raise DecodeError(f"missing field '{key}'", path)
    try:
        start = hhmm_to_minutes(_decode_str(doc["start"], f"{path}.start"))
        end = hhmm_to_minutes(_decode_str(doc["end"], f"{path}.end"))
    except ValueError as exc:
        raise DecodeError(str(exc), path) from exc
    return TimeWindow(
        name=_decode_str(doc["name"], f"{path}.name"),
        days=frozenset(_decode_str_list(doc["days"], f"{path}.days")),
        start=start,
        end=end,
    )


def _decode_rule(doc, path: str) -> IRRule:
    if not isinstance(doc, dict):
        raise DecodeError("expected rule object", path)
    extra = set(doc) - _RULE_KEYS
    if extra:
        raise DecodeError(f"unknown keys {sorted(extra)}", path)
    for key in _RULE_REQUIRED:
        if key not in doc:
            raise DecodeError(f"missing field '{key}'", path)
    priority = doc["priority"]
    if not isinstance(priority, int) or isinstance(priority, bool):
        raise DecodeError("expected integer", f"{path}.priority")
    logging = doc["logging"]
    if not isinstance(logging, bool):
        raise DecodeError("expected boolean", f"{path}.logging")
    sources = doc["sources"]
    destinations = doc["destinations"]
    if not isinstance(sources, list):
        raise DecodeError("expected array", f"{path}.sources")
    if not isinstance(destinations, list):
        raise DecodeError("expected array", f"{path}.destinations")
    ports = None
    if "ports" in doc:
        if not isinstance(doc["ports"], list):
            raise DecodeError("expected array", f"{path}.ports")
        ports = tuple(_decode_port(p, f"{path}.ports[{i}]") for i, p in enumerate(doc["ports"]))
    return IRRule(
        id=_decode_str(doc["id"], f"{path}.id"),
        name=_decode_str(doc["name"], f"{path}.name"),
        action=_decode_str(doc["action"], f"{path}.action"),
        protocol=_decode_str(doc["protocol"], f"{path}.protocol"),
        sources=tuple(_decode_endpoint(s, f"{path}.sources[{i}]") for i, s in enumerate(sources)),
        destinations=tuple(_decode_endpoint(d, f"{path}.destinations[{i}]") for i, d in enumerate(destinations)),
        source_zones=_decode_str_list(doc["source_zones"], f"{path}.source_zones"),
        destination_zones=_decode_str_list(doc["destination_zones"], f"{path}.destination_zones"),
        direction=_decode_str(doc["direction"], f"{path}.direction"),
        priority=priority,
        logging=logging,
        ports=ports,
        application=_decode_str(doc["application"], f"{path}.application") if "application" in doc else None,
        schedule=_decode_window(doc["schedule"], f"{path}.schedule") if "schedule" in doc else None,
        raw_policy=_decode_str(doc.get("raw_policy", ""), f"{path}.raw_policy"),
        ambiguities=_decode_str_list(doc.get("ambiguities", []), f"{path}.ambiguities"),
    )


def policy_from_doc(doc) -> IRPolicy:
    if not isinstance(doc, dict):
        raise DecodeError("expected policy object", "")
    extra = set(doc) - {"context_id", "rules"}
    if extra:
        raise DecodeError(f"unknown keys {sorted(extra)}", "")
    for key in ("context_id", "rules"):
        if key not in doc:
            raise DecodeError(f"missing field '{key}'", "")
    rules = doc["rules"]
    if not isinstance(rules, list):
        raise DecodeError("expected array", "rules")
    return IRPolicy(
        context_id=_decode_str(doc["context_id"], "context_id"),
        rules=tuple(_decode_rule(r, f"rules[{i}]") for i, r in enumerate(rules)),
    )


def decode_policy(document: str | bytes) -> IRPolicy:
    """Decode an IR document; raises DecodeError on syntax or schema problems."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"not UTF-8: {exc}") from exc
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DecodeError(exc.msg, position=(exc.lineno, exc.colno)) from exc
    return policy_from_doc(doc)

"""Pre-compilation validation: two advisory linters and the blocking Safety Gate.

The linters emit warnings only and never alter control flow. The gate is the
single place a policy can be stopped; its verdict is a boolean plus the
error findings that justify it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .context import NetworkContext, TRUST_RANK
from .findings import Finding, make_finding
from .ir import (
    ACTIONS,
    EndpointRef,
    IRPolicy,
    IRRule,
    PRIORITY_MAX,
    PRIORITY_MIN,
    PROTOCOLS,
)

# Built-in application coverage, shared with the compiler. A (protocol, port)
# pair listed here needs no custom service object.
BUILTIN_APPS: dict[tuple[str, int], str] = {
    ("tcp", 443): "ssl",
    ("tcp", 80): "web-browsing",
    ("udp", 53): "dns",
    ("tcp", 25): "smtp",
    ("tcp", 22): "ssh",
}

SCHEDULE_NAME_MAX = 31
_SCHEDULE_NAME_OK = re.compile(r"^[A-Za-z0-9_-]+$")


def builtin_application(rule: IRRule) -> str | None:
    """The built-in application covering this rule's protocol/ports, if any."""
    protocol = rule.protocol.lower()
    if protocol == "icmp":
        return "ping"
    if protocol not in ("tcp", "udp") or rule.ports is None or len(rule.ports) != 1:
        return None
    spec = rule.ports[0]
    if spec.lo != spec.hi:
        return None
    return BUILTIN_APPS.get((protocol, spec.lo))


def lint_general(policy: IRPolicy) -> list[Finding]:
    """Vendor-neutral hygiene checks; warnings only, never blocks."""
    findings: list[Finding] = []
    seen: set[str] = set()
    flagged: set[str] = set()
    for rule in policy.rules:
        if rule.id in seen and rule.id not in flagged:
            findings.append(make_finding("W-GEN-03", f"duplicate rule id {rule.id}", rule.id))
            flagged.add(rule.id)
        seen.add(rule.id)

        if not rule.sources:
            findings.append(make_finding("W-GEN-01", "empty source list", rule.id))
        if not rule.destinations:
            findings.append(make_finding("W-GEN-02", "empty destination list", rule.id))
        if rule.ports is not None:
            for spec in rule.ports:
                if not (1 <= spec.lo <= spec.hi <= 65535):
                    findings.append(make_finding("W-GEN-04", f"invalid port range {spec.text()}", rule.id))
            if rule.protocol.lower() in ("icmp", "any"):
                findings.append(
                    make_finding("W-GEN-05", f"ports specified under protocol {rule.protocol}", rule.id)
                )
        if not isinstance(rule.priority, int) or isinstance(rule.priority, bool) or not PRIORITY_MIN <= rule.priority <= PRIORITY_MAX:
            findings.append(
                make_finding("W-GEN-06", f"priority {rule.priority!r} outside [{PRIORITY_MIN}, {PRIORITY_MAX}]", rule.id)
            )
        if rule.action.lower() not in ACTIONS:
            findings.append(make_finding("W-GEN-07", f"unsupported action {rule.action!r}", rule.id))
    return findings


def _zone_rank(zones: tuple[str, ...], context: NetworkContext) -> int | None:
    ranks = [TRUST_RANK[context.zones[z].trust_level] for z in zones if z in context.zones]
    return max(ranks) if ranks else None


def _side_has_trust(zones: tuple[str, ...], context: NetworkContext) -> bool:
    return any(z in context.zones and context.zones[z].trust_level == "trust" for z in zones)


def _effective_direction(rule: IRRule, context: NetworkContext) -> str | None:
    direction = rule.direction.lower()
    if direction in ("inbound", "outbound"):
        return direction
    src = _zone_rank(rule.source_zones, context)
    dst = _zone_rank(rule.destination_zones, context)
    if src is None or dst is None or src == dst:
        return None
    return "outbound" if src < dst else "inbound"


def lint_panos(policy: IRPolicy, context: NetworkContext) -> list[Finding]:
    """Target-platform checks; warnings only, never blocks."""
    findings: list[Finding] = []
    for rule in policy.rules:
        if rule.protocol.lower() not in PROTOCOLS:
            findings.append(make_finding("W-PAN-01", f"protocol {rule.protocol!r} outside {PROTOCOLS}", rule.id))
        if not rule.source_zones:
            findings.append(make_finding("W-PAN-02", "no source zones", rule.id))
        if not rule.destination_zones:
            findings.append(make_finding("W-PAN-02", "no destination zones", rule.id))
        if rule.schedule is not None:
            name = rule.schedule.name
            if not _SCHEDULE_NAME_OK.fullmatch(name) or len(name) > SCHEDULE_NAME_MAX:
                findings.append(
                    make_finding("W-PAN-03", f"schedule name {name!r} invalid for the platform", rule.id)
                )
            if rule.action.lower() == "deny":
                findings.append(make_finding("W-PAN-04", "schedule attached to a deny rule", rule.id))
        if (
            rule.protocol.lower() in ("tcp", "udp")
            and rule.ports
            and builtin_application(rule) is None
        ):
            ports = ",".join(p.text() for p in rule.ports)
            findings.append(
                make_finding(
                    "W-PAN-05",
                    f"no built-in application covers {rule.protocol.lower()}/{ports}; a custom service object is required",
                    rule.id,
                )
            )
        direction = _effective_direction(rule, context)
        if direction == "inbound" and _side_has_trust(rule.source_zones, context):
            findings.append(make_finding("W-PAN-06", "inbound rule originates from a trust-level zone", rule.id))
        elif direction == "outbound" and _side_has_trust(rule.destination_zones, context):
            findings.append(make_finding("W-PAN-06", "outbound rule targets a trust-level zone", rule.id))
        shared = {r for r in rule.sources if r.kind.lower() in ("object", "cidr")} & set(rule.destinations)
        for ref in sorted(shared, key=EndpointRef.text):
            findings.append(
                make_finding("W-PAN-07", f"{ref.value!r} appears in both sources and destinations", rule.id)
            )
    return findings


@dataclass(frozen=True)
class GateResult:
    """The gate verdict: safe iff the error list is empty."""

    safe: bool
    errors: list[Finding] = field(default_factory=list)


def _any_equivalent(ref: EndpointRef) -> bool:
    if ref.kind.lower() == "any":
        return True
    if ref.kind.lower() == "cidr" and "/" in ref.value:
        prefix = ref.value.rsplit("/", 1)[1]
        return prefix.isdigit() and int(prefix) == 0
    return False


def safety_gate(policy: IRPolicy) -> GateResult:
    """The one blocking check. Rejects allow-everything rules and rules too
    incomplete to compile safely (missing zones, members, or protocol).

    Deny rules may match any-to-any: blocking traffic broadly is not the
    threat this gate exists for.
    """
    errors: list[Finding] = []
    for rule in policy.rules:
        if (
            rule.action.lower() == "allow"
            and any(_any_equivalent(r) for r in rule.sources)
            and any(_any_equivalent(r) for r in rule.destinations)
        ):
            errors.append(
                make_finding("E-SG-01", "allow rule admits traffic from any source to any destination", rule.id)
            )
        if not rule.source_zones:
            errors.append(make_finding("E-SG-02", "source zones missing", rule.id))
        if not rule.destination_zones:
            errors.append(make_finding("E-SG-02", "destination zones missing", rule.id))
        if not rule.sources:
            errors.append(make_finding("E-SG-03", "no sources", rule.id))
        if not rule.destinations:
            errors.append(make_finding("E-SG-03", "no destinations", rule.id))
        if not rule.protocol:
            errors.append(make_finding("E-SG-04", "protocol missing", rule.id))
    return GateResult(safe=not errors, errors=errors)

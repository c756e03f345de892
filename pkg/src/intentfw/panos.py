"""Deterministic set-command CLI backend.

Compilation is a pure function from (policy, context) to an ordered list of
CLI lines. Rules never reference a name the output (or the synthetic device
header) does not define: address objects are derived for CIDR members,
service objects are created or reused for uncovered port sets, and schedule
objects are expanded day by day. Rule blocks are emitted deny-first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import NetworkContext, Service
from .findings import make_finding
from .ir import ACTIONS, EndpointRef, IRPolicy, IRRule, PROTOCOLS, TimeWindow, WEEKDAYS, minutes_to_hhmm
from .validators import builtin_application


class CompileError(Exception):
    """An IR field with no CLI mapping; one-way and side-effect-free."""

    def __init__(self, rule_id: str, field: str, reason: str):
        super().__init__(f"rule {rule_id}: field {field}: {reason}")
        self.rule_id = rule_id
        self.field = field
        self.reason = reason

    def to_finding(self):
        return make_finding("E-CMP-01", str(self), self.rule_id)


@dataclass(frozen=True)
class DeviceConfig:
    lines: tuple[str, ...]
    emitted_objects: dict
    rule_order: tuple[str, ...]

    def text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def to_doc(self) -> dict:
        return {
            "lines": list(self.lines),
            "text": self.text(),
            "emitted_objects": self.emitted_objects,
            "rule_order": list(self.rule_order),
        }


def order_rules(policy: IRPolicy) -> list[str]:
    """Emission order: deny before allow, then ascending priority, then id."""
    def key(rule: IRRule):
        return (0 if rule.action.lower() == "deny" else 1, rule.priority, rule.id)

    return [rule.id for rule in sorted(policy.rules, key=key)]


def emit_schedule(window: TimeWindow) -> list[str]:
    """One line per selected day, monday-first."""
    clock = f"{minutes_to_hhmm(window.start)}-{minutes_to_hhmm(window.end)}"
    return [
        f"set schedule {window.name} recurring weekly {day} {clock}"
        for day in WEEKDAYS
        if day in window.days
    ]


def _cidr_object_name(value: str) -> str:
    addr, prefix = value.split("/", 1)
    return f"net-{addr}-{prefix}"


def _member_name(ref: EndpointRef) -> str:
    kind = ref.kind.lower()
    if kind == "any":
        return "any"
    if kind == "cidr":
        return _cidr_object_name(ref.value)
    return ref.value


def _collect_addresses(policy: IRPolicy, context: NetworkContext) -> dict[str, str]:
    """CIDR members become address objects; context objects stay header-defined."""
    out: dict[str, str] = {}
    for rule in policy.rules:
        for side, members in (("sources", rule.sources), ("destinations", rule.destinations)):
            for ref in members:
                if ref.kind.lower() != "cidr":
                    continue
                name = _cidr_object_name(ref.value)
                if name in context.objects:
                    raise CompileError(rule.id, side, f"derived address name {name} collides with a context object")
                out[name] = ref.value
    return out


def _match_context_service(context: NetworkContext, protocol: str, ports) -> Service | None:
    matches = [
        s for s in context.services.values()
        if s.protocol == protocol and set(s.ports) == set(ports)
    ]
    return min(matches, key=lambda s: s.name) if matches else None


def _service_plan(rule: IRRule, context: NetworkContext):
    """Decide the application and service attributes for one rule.

    Returns (application, service member names, service definitions), where
    each definition is (name, protocol, ports, reused).
    """
    protocol = rule.protocol.lower()
    if protocol not in PROTOCOLS:
        raise CompileError(rule.id, "protocol", f"no mapping for protocol {rule.protocol!r}")
    if protocol == "any":
        return "any", ["any"], []
    if protocol == "icmp":
        return "ping", ["application-default"], []
    app = builtin_application(rule)
    if app is not None:
        return app, ["application-default"], []
    if not rule.ports:
        return "any", ["any"], []
    reused = _match_context_service(context, protocol, rule.ports)
    if reused is not None:
        return "any", [reused.name], [(reused.name, protocol, tuple(reused.ports), True)]
    definitions = []
    for spec in rule.ports:
        name = f"svc-{protocol}-{spec.text()}"
        if name in context.services:
            raise CompileError(rule.id, "ports", f"derived service name {name} collides with a context service")
        definitions.append((name, protocol, (spec,), False))
    return "any", sorted(d[0] for d in definitions), definitions


def compile(policy: IRPolicy, context: NetworkContext) -> DeviceConfig:  # noqa: A001 - module-scoped name
    """Compile a gate-passing policy to CLI lines.

    Layout: derived address objects, then service objects, then schedules,
    then rule blocks in order_rules order. Byte-deterministic.
    """
    addresses = _collect_addresses(policy, context)

    plans: dict[str, tuple[str, list[str]]] = {}
    service_defs: dict[str, tuple[str, tuple, bool]] = {}
    for rule in policy.rules:
        if rule.action.lower() not in ACTIONS:
            raise CompileError(rule.id, "action", f"no mapping for action {rule.action!r}")
        app, members, definitions = _service_plan(rule, context)
        plans[rule.id] = (app, members)
        for name, protocol, ports, reused in definitions:
            service_defs.setdefault(name, (protocol, ports, reused))

    schedules: dict[str, TimeWindow] = {}
    for rule in policy.rules:
        if rule.schedule is not None and rule.schedule.name not in schedules:
            schedules[rule.schedule.name] = rule.schedule

    lines: list[str] = []
    for name in sorted(addresses):
        lines.append(f"set address {name} ip-netmask {addresses[name]}")
    for name in sorted(service_defs):
        protocol, ports, _ = service_defs[name]
        for spec in sorted(ports, key=lambda p: p.text()):
            lines.append(f"set service {name} protocol {protocol} port {spec.text()}")
    for name in sorted(schedules):
        lines.extend(emit_schedule(schedules[name]))

    order = order_rules(policy)
    by_id = {rule.id: rule for rule in policy.rules}
    for rule_id in order:
        rule = by_id[rule_id]
        app, services = plans[rule_id]
        prefix = f"set rulebase security rules {rule.id}"
        for zone in sorted(set(rule.source_zones)):
            lines.append(f"{prefix} from {zone}")
        for zone in sorted(set(rule.destination_zones)):
            lines.append(f"{prefix} to {zone}")
        for member in sorted({_member_name(r) for r in rule.sources}):
            lines.append(f"{prefix} source {member}")
        for member in sorted({_member_name(r) for r in rule.destinations}):
            lines.append(f"{prefix} destination {member}")
        lines.append(f"{prefix} application {app}")
        for service in services:
            lines.append(f"{prefix} service {service}")
        lines.append(f"{prefix} action {rule.action.lower()}")
        lines.append(f"{prefix} log-end {'yes' if rule.logging else 'no'}")
        if rule.schedule is not None:
            lines.append(f"{prefix} schedule {rule.schedule.name}")

    manifest = {
        "addresses": [{"name": n, "reused": False} for n in sorted(addresses)],
        "services": [
            {"name": n, "reused": service_defs[n][2]} for n in sorted(service_defs)
        ],
        "schedules": [
            {"name": n, "reused": n in context.schedules} for n in sorted(schedules)
        ],
    }
    return DeviceConfig(lines=tuple(lines), emitted_objects=manifest, rule_order=tuple(order))

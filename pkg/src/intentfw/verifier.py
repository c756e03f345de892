"""Static CLI verification against a synthetic device model.

The device model is a deterministic header derived from a network context:
hostname, one layer-3 interface per zone, virtual-router membership, zone
bindings, and one address object per context object. verify() parses the
header plus a compiled config line by line, builds symbol tables, and
reports unparseable lines, dangling references, and unused definitions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .context import NetworkContext
from .findings import Finding, make_finding
from .ir import WEEKDAYS

CATEGORIES = ("zone", "address", "service", "schedule")

# Names that are device vocabulary rather than config-defined objects.
_BUILTIN_MEMBERS = frozenset({"any"})
_BUILTIN_SERVICES = frozenset({"any", "application-default"})

_ID = r"[A-Za-z0-9_-]+"
_NAME = r"[A-Za-z0-9._-]+"
_IFACE = r"ethernet1/\d+"
_CIDR = r"\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}/\d{1,2}"
_PORT = r"\d{1,5}(?:-\d{1,5})?"
_TIME = r"\d{2}:\d{2}-\d{2}:\d{2}"
_DAY = "|".join(WEEKDAYS)
_RULE = rf"set rulebase security rules (?P<rule>{_ID})"

# (pattern, handler key) in match order; first fullmatch wins.
_PRODUCTIONS: list[tuple[re.Pattern, str]] = [
    (re.compile(rf"set deviceconfig system hostname {_NAME}"), "noop"),
    (re.compile(rf"set network interface ethernet {_IFACE} layer3 ip {_CIDR}"), "noop"),
    (re.compile(rf"set network virtual-router {_ID} interface {_IFACE}"), "noop"),
    (re.compile(rf"set zone (?P<name>{_ID}) network layer3 {_IFACE}"), "def:zone"),
    (re.compile(rf"set address (?P<name>{_NAME}) ip-netmask {_CIDR}"), "def:address"),
    (re.compile(rf"set address (?P<name>{_NAME}) fqdn {_NAME}"), "def:address"),
    (re.compile(rf"set service (?P<name>{_NAME}) protocol (?:tcp|udp) port {_PORT}"), "def:service"),
    (re.compile(rf"set schedule (?P<name>{_NAME}) recurring weekly (?:{_DAY}) {_TIME}"), "def:schedule"),
    (re.compile(rf"{_RULE} from (?P<name>{_ID})"), "ref:zone"),
    (re.compile(rf"{_RULE} to (?P<name>{_ID})"), "ref:zone"),
    (re.compile(rf"{_RULE} source (?P<name>{_NAME})"), "ref:address"),
    (re.compile(rf"{_RULE} destination (?P<name>{_NAME})"), "ref:address"),
    (re.compile(rf"{_RULE} application {_NAME}"), "noop"),
    (re.compile(rf"{_RULE} service (?P<name>{_NAME})"), "ref:service"),
    (re.compile(rf"{_RULE} action (?:allow|deny)"), "noop"),
    (re.compile(rf"{_RULE} log-end (?:yes|no)"), "noop"),
    (re.compile(rf"{_RULE} schedule (?P<name>{_NAME})"), "ref:schedule"),
]


@dataclass
class SymbolTables:
    """Definitions and references keyed by category, with 1-based lines."""

    defined: dict = field(default_factory=lambda: {c: {} for c in CATEGORIES})
    referenced: dict = field(default_factory=lambda: {c: {} for c in CATEGORIES})
    findings: list[Finding] = field(default_factory=list)


def synth_header(context: NetworkContext) -> list[str]:
    """Deterministic device header: the half of the config a context implies."""
    lines = ["set deviceconfig system hostname synth-fw"]
    zones = sorted(context.zones)
    for k in range(1, len(zones) + 1):
        lines.append(f"set network interface ethernet ethernet1/{k} layer3 ip 10.255.{k}.1/24")
    for k in range(1, len(zones) + 1):
        lines.append(f"set network virtual-router vr-default interface ethernet1/{k}")
    for k, zone in enumerate(zones, 1):
        lines.append(f"set zone {zone} network layer3 ethernet1/{k}")
    for name in sorted(context.objects):
        obj = context.objects[name]
        if obj.kind == "host":
            lines.append(f"set address {name} ip-netmask {obj.value}/32")
        elif obj.kind == "subnet":
            lines.append(f"set address {name} ip-netmask {obj.value}")
        else:
            lines.append(f"set address {name} fqdn {obj.value}")
    return lines


def parse_cli(lines) -> SymbolTables:
    """Match each nonblank line against the line grammar and fill the tables."""
    tables = SymbolTables()
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        for pattern, handler in _PRODUCTIONS:
            m = pattern.fullmatch(line)
            if m is None:
                continue
            if handler == "noop":
                break
            kind, category = handler.split(":", 1)
            name = m.group("name")
            if kind == "def":
                tables.defined[category].setdefault(name, line_no)
            else:
                if category == "address" and name in _BUILTIN_MEMBERS:
                    break
                if category == "service" and name in _BUILTIN_SERVICES:
                    break
                tables.referenced[category].setdefault(name, []).append(line_no)
            break
        else:
            tables.findings.append(
                make_finding("E-VFY-PARSE", f"line {line_no} does not match the CLI grammar: {line!r}")
            )
    return tables


def verify(config_lines, header_lines) -> list[Finding]:
    """Check a compiled config against the synthetic device header.

    Errors mean the config would not load (unparseable lines, references to
    names nothing defines). Unused definitions are warnings; zones are
    exempt because the header always defines every context zone.
    """
    tables = parse_cli(list(header_lines) + list(config_lines))
    findings = list(tables.findings)
    for category in CATEGORIES:
        for name in sorted(tables.referenced[category]):
            if name in tables.defined[category]:
                continue
            where = tables.referenced[category][name]
            findings.append(
                make_finding(
                    "E-VFY-UNDEF",
                    f"{category} {name} is referenced at line {where[0]} but never defined",
                )
            )
    for category in ("address", "service", "schedule"):
        for name in sorted(tables.defined[category]):
            if name not in tables.referenced[category]:
                findings.append(
                    make_finding("W-VFY-UNUSED", f"{category} {name} is defined but never referenced")
                )
    return findings

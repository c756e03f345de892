"""Network context: the enterprise ground truth names are resolved against.

A context document declares address objects, security zones, named services
and schedules. Contexts are immutable once loaded; the directory-backed
store serializes writes and reads always see completed writes.
"""

from __future__ import annotations

import hashlib
import ipaddress
import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from .findings import Finding, make_finding
from .ir import (
    ID_RE,
    PortSpec,
    TimeWindow,
    WEEKDAYS,
    canonical_json,
    hhmm_to_minutes,
    minutes_to_hhmm,
    parse_port_spec,
)

TRUST_LEVELS = ("trust", "dmz", "guest", "untrust")
# Rank used by the direction heuristic: trust > dmz > guest > untrust.
TRUST_RANK = {"trust": 3, "dmz": 2, "guest": 1, "untrust": 0}

OBJECT_KINDS = ("host", "subnet", "fqdn")

_FQDN_RE = re.compile(r"^(?!-)[A-Za-z0-9-]{1,63}(?<!-)(\.(?!-)[A-Za-z0-9-]{1,63}(?<!-))+$")


@dataclass(frozen=True)
class AddressObject:
    name: str
    kind: str
    value: str
    zone: str | None = None
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Zone:
    name: str
    trust_level: str


@dataclass(frozen=True)
class Service:
    name: str
    protocol: str
    ports: tuple[PortSpec, ...]
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class NetworkContext:
    id: str
    title: str
    objects: dict[str, AddressObject]
    zones: dict[str, Zone]
    services: dict[str, Service]
    schedules: dict[str, TimeWindow]

    def untrust_zones(self) -> list[str]:
        return sorted(name for name, z in self.zones.items() if z.trust_level == "untrust")


class ContextError(ValueError):
    """Raised when a context document fails validation; carries the findings."""

    def __init__(self, findings: list[Finding]):
        super().__init__("; ".join(f"{f.code}: {f.message}" for f in findings))
        self.findings = findings


class ContextNotFound(KeyError):
    def __init__(self, context_id: str):
        super().__init__(context_id)
        self.context_id = context_id
        self.finding = make_finding("CTX_NOT_FOUND", f"no stored context with id {context_id!r}")


def _valid_object_value(kind: str, value: str) -> bool:
    try:
        if kind == "host":
            ipaddress.IPv4Address(value)
        elif kind == "subnet":
            if "/" not in value:
                return False
            ipaddress.IPv4Network(value, strict=False)
        elif kind == "fqdn":
            return _FQDN_RE.fullmatch(value) is not None
        else:
            return False
    except (ValueError, TypeError):
        return False
    return True


def _str_list(doc: dict, key: str, where: str, findings: list[Finding]) -> tuple[str, ...]:
    raw = doc.get(key, [])
    if not isinstance(raw, list) or any(not isinstance(v, str) for v in raw):
        findings.append(make_finding("CTX_SCHEMA", f"{where}: {key} must be an array of strings"))
        return ()
    return tuple(raw)


def load_context(document: str | bytes | dict) -> NetworkContext:
    """Validate a context document; raises ContextError carrying schema findings.

    The id is taken from the document, or derived from a content digest when
    absent.
    """
    findings: list[Finding] = []
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ContextError([make_finding("CTX_SYNTAX", f"{exc.msg} (line {exc.lineno}, column {exc.colno})")]) from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ContextError([make_finding("CTX_SCHEMA", "top level must be an object")])

    zones: dict[str, Zone] = {}
    raw_zones = doc.get("zones", {})
    if not isinstance(raw_zones, dict):
        findings.append(make_finding("CTX_SCHEMA", "zones must be an object"))
        raw_zones = {}
    for name, z in raw_zones.items():
        if not ID_RE.fullmatch(name):
            findings.append(make_finding("CTX_BAD_NAME", f"zone {name!r}"))
            continue
        level = z.get("trust_level") if isinstance(z, dict) else None
        if level not in TRUST_LEVELS:
            findings.append(make_finding("CTX_SCHEMA", f"zone {name}: trust_level must be one of {TRUST_LEVELS}"))
            continue
        zones[name] = Zone(name=name, trust_level=level)

    objects: dict[str, AddressObject] = {}
    raw_objects = doc.get("objects", {})
    if not isinstance(raw_objects, dict):
        findings.append(make_finding("CTX_SCHEMA", "objects must be an object"))
        raw_objects = {}
    for name, o in raw_objects.items():
        if not ID_RE.fullmatch(name):
            findings.append(make_finding("CTX_BAD_NAME", f"object {name!r}"))
            continue
        if not isinstance(o, dict):
            findings.append(make_finding("CTX_SCHEMA", f"object {name}: must be an object"))
            continue
        kind = o.get("kind")
        value = o.get("value")
        if kind not in OBJECT_KINDS or not isinstance(value, str):
            findings.append(make_finding("CTX_SCHEMA", f"object {name}: kind must be one of {OBJECT_KINDS} with a string value"))
            continue
        if not _valid_object_value(kind, value):
            findings.append(make_finding("CTX_BAD_VALUE", f"object {name}: {value!r} does not parse as {kind}"))
            continue
        zone = o.get("zone")
        if zone is not None and not isinstance(zone, str):
            findings.append(make_finding("CTX_SCHEMA", f"object {name}: zone must be a string"))
            continue
        if zone is not None and zone not in zones:
            findings.append(make_finding("CTX_DANGLING_ZONE", f"object {name}: zone {zone!r} is not defined"))
            continue
        objects[name] = AddressObject(name=name, kind=kind, value=value, zone=zone, aliases=_str_list(o, "aliases", f"object {name}", findings))

    services: dict[str, Service] = {}
    raw_services = doc.get("services", {})
    if not isinstance(raw_services, dict):
        findings.append(make_finding("CTX_SCHEMA", "services must be an object"))
        raw_services = {}
    for name, s in raw_services.items():
        if not ID_RE.fullmatch(name):
            findings.append(make_finding("CTX_BAD_NAME", f"service {name!r}"))
            continue
        if not isinstance(s, dict):
            findings.append(make_finding("CTX_SCHEMA", f"service {name}: must be an object"))
            continue
        protocol = s.get("protocol")
        raw_ports = s.get("ports")
        if protocol not in ("tcp", "udp") or not isinstance(raw_ports, list) or not raw_ports:
            findings.append(make_finding("CTX_SCHEMA", f"service {name}: needs protocol tcp|udp and a non-empty ports array"))
            continue
        try:
            ports = tuple(parse_port_spec(str(p)) for p in raw_ports)
        except ValueError as exc:
            findings.append(make_finding("CTX_BAD_VALUE", f"service {name}: {exc}"))
            continue
        services[name] = Service(name=name, protocol=protocol, ports=ports, aliases=_str_list(s, "aliases", f"service {name}", findings))

    schedules: dict[str, TimeWindow] = {}
    raw_schedules = doc.get("schedules", {})
    if not isinstance(raw_schedules, dict):
        findings.append(make_finding("CTX_SCHEMA", "schedules must be an object"))
        raw_schedules = {}
    for name, w in raw_schedules.items():
        if not ID_RE.fullmatch(name):
            findings.append(make_finding("CTX_BAD_NAME", f"schedule {name!r}"))
            continue
        if not isinstance(w, dict):
            findings.append(make_finding("CTX_SCHEMA", f"schedule {name}: must be an object"))
            continue
        days = w.get("days")
        try:
            start = hhmm_to_minutes(str(w.get("start")))
            end = hhmm_to_minutes(str(w.get("end")))
        except ValueError:
            findings.append(make_finding("CTX_BAD_VALUE", f"schedule {name}: start/end must be HH:MM"))
            continue
        if (
            not isinstance(days, list)
            or not days
            or any(not isinstance(d, str) or d.lower() not in WEEKDAYS for d in days)
            or not (0 <= start <= 1439 and 1 <= end <= 1440 and start < end)
        ):
            findings.append(make_finding("CTX_BAD_VALUE", f"schedule {name}: needs weekday names and start < end"))
            continue
        schedules[name] = TimeWindow(name=name, days=frozenset(d.lower() for d in days), start=start, end=end)

    # Lookup must be unambiguous across categories, so primary names must be
    # pairwise disjoint after case-folding.
    folded: dict[str, str] = {}
    for category, names in (("zone", zones), ("object", objects), ("service", services), ("schedule", schedules)):
        for name in names:
            key = name.casefold()
            if key in folded:
                findings.append(make_finding("CTX_NAME_COLLISION", f"{category} {name!r} collides with {folded[key]}"))
            else:
                folded[key] = f"{category} {name!r}"

    if findings:
        raise ContextError(findings)

    context_id = doc.get("id")
    title = doc.get("title", "")
    if not isinstance(title, str):
        raise ContextError([make_finding("CTX_SCHEMA", "title must be a string")])
    if context_id is None:
        digest_src = canonical_json({k: doc.get(k) for k in ("title", "zones", "objects", "services", "schedules")})
        context_id = "ctx-" + hashlib.sha256(digest_src.encode("utf-8")).hexdigest()[:12]
    elif not isinstance(context_id, str) or not ID_RE.fullmatch(context_id):
        raise ContextError([make_finding("CTX_BAD_NAME", f"context id {context_id!r}")])

    return NetworkContext(id=context_id, title=title, objects=objects, zones=zones, services=services, schedules=schedules)


def context_to_doc(context: NetworkContext) -> dict:
    doc: dict = {"id": context.id, "title": context.title, "zones": {}, "objects": {}, "services": {}, "schedules": {}}
    for name, z in sorted(context.zones.items()):
        doc["zones"][name] = {"trust_level": z.trust_level}
    for name, o in sorted(context.objects.items()):
        entry: dict = {"kind": o.kind, "value": o.value}
        if o.zone is not None:
            entry["zone"] = o.zone
        if o.aliases:
            entry["aliases"] = list(o.aliases)
        doc["objects"][name] = entry
    for name, s in sorted(context.services.items()):
        entry = {"protocol": s.protocol, "ports": [p.text() for p in s.ports]}
        if s.aliases:
            entry["aliases"] = list(s.aliases)
        doc["services"][name] = entry
    for name, w in sorted(context.schedules.items()):
        doc["schedules"][name] = {"days": sorted(w.days), "start": minutes_to_hhmm(w.start), "end": minutes_to_hhmm(w.end)}
    return doc


def summarize(context: NetworkContext) -> dict:
    return {
        "id": context.id,
        "title": context.title,
        "zones": len(context.zones),
        "objects": len(context.objects),
        "services": len(context.services),
        "schedules": len(context.schedules),
    }


def _token_norm(text: str) -> str:
    return re.sub(r"[ \-_]+", "", text).casefold()


@dataclass(frozen=True)
class Match:
    category: str
    name: str

    def entity(self, context: NetworkContext):
        return getattr(context, self.category + "s")[self.name]


@dataclass(frozen=True)
class MatchSet:
    """Candidates for one phrase; tier 0 means no match anywhere."""

    phrase: str
    tier: int
    candidates: tuple[Match, ...]

    def __bool__(self) -> bool:
        return bool(self.candidates)

    @property
    def unique(self) -> Match | None:
        return self.candidates[0] if len(self.candidates) == 1 else None


def lookup(context: NetworkContext, phrase: str) -> MatchSet:
    """Ground a phrase: tier 1 exact name, tier 2 alias, tier 3 token-normalized.

    The lowest matching tier is returned whole, so a tier may be ambiguous.
    Deterministic: candidates are sorted by (category, name).
    """
    categories = (
        ("object", context.objects),
        ("zone", context.zones),
        ("service", context.services),
        ("schedule", context.schedules),
    )
    folded = phrase.casefold()
    tier1 = [Match(cat, name) for cat, entries in categories for name in entries if name.casefold() == folded]
    if tier1:
        return MatchSet(phrase, 1, tuple(sorted(tier1, key=lambda m: (m.category, m.name))))

    tier2 = [
        Match(cat, name)
        for cat, entries in categories
        for name, entity in entries.items()
        if any(a.casefold() == folded for a in getattr(entity, "aliases", ()))
    ]
    if tier2:
        return MatchSet(phrase, 2, tuple(sorted(tier2, key=lambda m: (m.category, m.name))))

    norm = _token_norm(phrase)
    tier3 = [
        Match(cat, name)
        for cat, entries in categories
        for name, entity in entries.items()
        if _token_norm(name) == norm or any(_token_norm(a) == norm for a in getattr(entity, "aliases", ()))
    ]
    if tier3:
        return MatchSet(phrase, 3, tuple(sorted(tier3, key=lambda m: (m.category, m.name))))
    return MatchSet(phrase, 0, ())


class ContextStore:
    """Directory of canonical context documents, one file per context id."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, context_id: str) -> Path:
        return self.root / f"{context_id}.json"

    def save(self, context: NetworkContext) -> str:
        text = canonical_json(context_to_doc(context))
        with self._write_lock:
            tmp = self._path(context.id).with_suffix(".tmp")
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, self._path(context.id))
        return context.id

    def get(self, context_id: str) -> NetworkContext:
        path = self._path(context_id)
        if not ID_RE.fullmatch(context_id) or not path.exists():
            raise ContextNotFound(context_id)
        return load_context(path.read_text(encoding="utf-8"))

    def list(self) -> list[dict]:
        summaries = []
        for path in sorted(self.root.glob("*.json")):
            try:
                summaries.append(summarize(load_context(path.read_text(encoding="utf-8"))))
            except ContextError:
                continue
        return summaries

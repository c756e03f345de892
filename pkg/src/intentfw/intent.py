"""Natural-language front end: controlled-grammar parser, resolver, IR builder.

The reference backend is fully deterministic: a small controlled grammar is
parsed into clause ASTs, phrases are grounded against the network context,
and the grounded clauses become IR rules. An external agent endpoint can
stand in for the parser/builder pair; its output is re-validated against a
JSON Schema and never trusted as-is.

Resolution never throws for a phrase it cannot ground. Failed and ambiguous
phrases are recorded verbatim so downstream layers (and the operator) see
exactly what did not bind; the Safety Gate is the stage that decides whether
the resulting holes are fatal.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass

import jsonschema
import requests

from .context import NetworkContext, lookup
from .findings import Finding, make_finding
from .ir import (
    EndpointRef,
    IRPolicy,
    IRRule,
    PortSpec,
    TimeWindow,
    WEEKDAYS,
    hhmm_to_minutes,
    minutes_to_hhmm,
    parse_port_spec,
)

PROTOCOL_KEYWORDS = ("tcp", "udp", "icmp")
ANY_WORDS = frozenset({"any", "anyone", "anything", "everyone", "everything"})

_WORKWEEK = WEEKDAYS[:5]
_TIME_RE = re.compile(r"(\d{1,2}:\d{2})--?(\d{1,2}:\d{2})")
_CIDR_RE = re.compile(r"\d{1,3}(\.\d{1,3}){3}/\d{1,2}")
_PORT_TOKEN_RE = re.compile(r"\d+(-\d+)?")


class ParseError(ValueError):
    """Query text outside the controlled grammar; offset points at the bad token."""

    def __init__(self, message: str, offset: int, token: str = ""):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset
        self.token = token

    def to_finding(self) -> Finding:
        return make_finding("PARSE_SYNTAX", str(self))


class IntentError(ValueError):
    """An intent that cannot become a policy at all (e.g. zero clauses)."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.finding = make_finding(code, message)


@dataclass(frozen=True)
class ClauseAST:
    """One parsed clause; phrases are raw text, not yet grounded."""

    action: str
    subject_phrase: str
    object_phrase: str | None = None
    service_phrase: str | None = None
    proto_port_phrase: str | None = None
    direction_word: str | None = None
    schedule_phrase: str | None = None
    text: str = ""


@dataclass(frozen=True)
class ResolvedClause:
    action: str
    sources: tuple[EndpointRef, ...]
    destinations: tuple[EndpointRef, ...]
    source_zones: tuple[str, ...]
    destination_zones: tuple[str, ...]
    protocol: str
    ports: tuple[PortSpec, ...] | None
    direction: str
    schedule: TimeWindow | None
    text: str
    unresolved: tuple[str, ...]


@dataclass(frozen=True)
class ResolvedIntent:
    clauses: tuple[ResolvedClause, ...]


@dataclass(frozen=True)
class _Token:
    text: str
    start: int

    @property
    def low(self) -> str:
        return self.text.lower()

    @property
    def end(self) -> int:
        return self.start + len(self.text)


class _Cursor:
    def __init__(self, query: str):
        self.query = query
        self.tokens = [_Token(m.group(), m.start()) for m in re.finditer(r"\S+", query)]
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token | None:
        at = self.i + ahead
        return self.tokens[at] if at < len(self.tokens) else None

    def take(self) -> _Token:
        token = self.tokens[self.i]
        self.i += 1
        return token

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def fail(self, message: str) -> "ParseError":
        token = self.peek()
        if token is None:
            return ParseError(f"{message}, got end of input", len(self.query))
        return ParseError(f"{message}, got {token.text!r}", token.start, token.text)

    def name_until(self, stops: frozenset[str], what: str) -> list[_Token]:
        out = []
        while not self.at_end() and self.peek().low not in stops:
            out.append(self.take())
        if not out:
            raise self.fail(f"expected {what}")
        return out

    def span(self, tokens: list[_Token]) -> str:
        return self.query[tokens[0].start : tokens[-1].end]


def _scan_window(tokens: list[_Token], i: int):
    """Structurally match `dayset SP timerange` at tokens[i].

    Returns (day list, start text, end text, index of the time token) or None.
    Values are unchecked; the caller validates ranges.
    """
    days: list[str] = []
    j = i
    if j < len(tokens) and tokens[j].low == "weekdays":
        days = list(_WORKWEEK)
        j += 1
    else:
        more = True
        while more and j < len(tokens):
            raw = tokens[j].low
            more = raw.endswith(",")
            parts = [p for p in raw.split(",") if p]
            if not parts or any(p not in WEEKDAYS for p in parts):
                return None
            days.extend(parts)
            j += 1
        if more or not days:
            return None
    if j >= len(tokens):
        return None
    m = _TIME_RE.fullmatch(tokens[j].text)
    if m is None:
        return None
    return days, m.group(1), m.group(2), j


def _window_name(days: frozenset[str], start: int, end: int) -> str:
    clock = f"{minutes_to_hhmm(start).replace(':', '')}-{minutes_to_hhmm(end).replace(':', '')}"
    if days == frozenset(_WORKWEEK):
        part = "wk"
    elif days == frozenset(WEEKDAYS):
        part = "daily"
    else:
        part = "-".join(d[:3] for d in WEEKDAYS if d in days)
    return f"{part}-{clock}"


def _window_from_phrase(phrase: str) -> TimeWindow | None:
    """Turn an inline `dayset timerange` phrase into a named TimeWindow."""
    tokens = [_Token(m.group(), m.start()) for m in re.finditer(r"\S+", phrase)]
    scanned = _scan_window(tokens, 0)
    if scanned is None or scanned[3] != len(tokens) - 1:
        return None
    days, start_text, end_text, _ = scanned
    start = hhmm_to_minutes(start_text)
    end = hhmm_to_minutes(end_text)
    if not (0 <= start <= 1439 and 1 <= end <= 1440 and start < end):
        return None
    day_set = frozenset(days)
    return TimeWindow(name=_window_name(day_set, start, end), days=day_set, start=start, end=end)


def _check_window_times(time_token: _Token, start_text: str, end_text: str) -> None:
    start = hhmm_to_minutes(start_text)
    end = hhmm_to_minutes(end_text)
    if start > 1439 or end > 1440:
        raise ParseError(f"time of day out of range in {time_token.text!r}", time_token.start, time_token.text)
    if start >= end:
        raise ParseError(f"start not before end in {time_token.text!r}", time_token.start, time_token.text)


def _take_proto_port(cur: _Cursor) -> str | None:
    """Consume `proto SP port` if present at the cursor; port is range-checked here."""
    proto = cur.peek()
    port = cur.peek(1)
    if proto is None or port is None or proto.low not in PROTOCOL_KEYWORDS:
        return None
    if not _PORT_TOKEN_RE.fullmatch(port.text):
        return None
    if proto.low == "icmp":
        raise ParseError(f"icmp takes no port, got {port.text!r}", port.start, port.text)
    try:
        parse_port_spec(port.text)
    except ValueError as exc:
        raise ParseError(str(exc), port.start, port.text) from exc
    cur.take()
    cur.take()
    return f"{proto.text} {port.text}"


def _take_schedule(cur: _Cursor) -> str | None:
    head = cur.peek()
    if head is None:
        return None
    if head.low == "during":
        cur.take()
        phrase = cur.name_until(frozenset({"and"}), "a schedule phrase after 'during'")
        return cur.span(phrase)
    if head.low == "on":
        scanned = _scan_window(cur.tokens, cur.i + 1)
        if scanned is None:
            return None
        _, start_text, end_text, time_at = scanned
        cur.take()
        first = cur.peek()
        time_token = first
        while cur.i <= time_at:
            time_token = cur.take()
        _check_window_times(time_token, start_text, end_text)
        return cur.query[first.start : time_token.end]
    return None


def _parse_allow(cur: _Cursor) -> ClauseAST:
    start_token = cur.take()  # "allow"
    subject = cur.name_until(frozenset({"to"}), "a source name after 'allow'")
    if cur.at_end() or cur.take().low != "to":
        raise cur.fail("expected 'to'")
    verb = cur.peek()
    if verb is None or verb.low not in ("reach", "access"):
        raise cur.fail("expected 'reach' or 'access'")
    cur.take()
    obj = cur.name_until(frozenset({"over", "on", "during", "and"}), "a destination name")

    service_phrase = None
    proto_port_phrase = None
    schedule_phrase = None
    head = cur.peek()
    if head is not None and head.low in ("over", "on"):
        if head.low == "on":
            # "on" opens either a connection clause or an inline schedule;
            # a day set with a time range decides for the schedule.
            schedule_phrase = _take_schedule(cur)
        if schedule_phrase is None:
            cur.take()  # over | on
            proto_port_phrase = _take_proto_port(cur)
            if proto_port_phrase is None:
                svc = cur.name_until(
                    frozenset({"during", "on", "and"}),
                    f"a service or protocol/port after {head.text!r}",
                )
                service_phrase = cur.span(svc)
    if schedule_phrase is None:
        schedule_phrase = _take_schedule(cur)

    last = cur.tokens[cur.i - 1]
    return ClauseAST(
        action="allow",
        subject_phrase=cur.span(subject),
        object_phrase=cur.span(obj),
        service_phrase=service_phrase,
        proto_port_phrase=proto_port_phrase,
        schedule_phrase=schedule_phrase,
        text=cur.query[start_token.start : last.end],
    )


def _parse_deny(cur: _Cursor) -> ClauseAST:
    start_token = cur.take()  # "block" | "deny"
    direction_word = None
    head = cur.peek()
    if head is not None and head.low in ("outbound", "inbound"):
        direction_word = cur.take().low

    proto_port_phrase = _take_proto_port(cur)
    service_phrase = None
    if proto_port_phrase is None:
        svc = cur.name_until(frozenset({"from"}), "a service or protocol after the action")
        service_phrase = cur.span(svc)
    if cur.at_end() or cur.peek().low != "from":
        raise cur.fail("expected 'from'")
    cur.take()
    subject = cur.name_until(frozenset({"to", "and"}), "a source name after 'from'")

    object_phrase = None
    if not cur.at_end() and cur.peek().low == "to":
        cur.take()
        obj = cur.name_until(frozenset({"and"}), "a destination name after 'to'")
        object_phrase = cur.span(obj)

    last = cur.tokens[cur.i - 1]
    return ClauseAST(
        action="deny",
        subject_phrase=cur.span(subject),
        object_phrase=object_phrase,
        service_phrase=service_phrase,
        proto_port_phrase=proto_port_phrase,
        direction_word=direction_word,
        text=cur.query[start_token.start : last.end],
    )


def parse_controlled(query: str) -> list[ClauseAST]:
    """Parse the controlled grammar into clause ASTs, in textual order.

    Grammar: clauses joined by "and"; allow clauses are
    `allow NAME to reach|access NAME [over|on svc-or-proto-port] [schedule]`;
    deny clauses are `block|deny [outbound|inbound] svc-or-proto-port from
    NAME [to NAME]`. Raises ParseError with the failing token offset.
    """
    cur = _Cursor(query)
    if cur.at_end():
        raise ParseError("empty query", 0)
    clauses = []
    while True:
        head = cur.peek()
        if head is None:
            raise cur.fail("expected a clause")
        if head.low == "allow":
            clauses.append(_parse_allow(cur))
        elif head.low in ("block", "deny"):
            clauses.append(_parse_deny(cur))
        else:
            raise cur.fail("expected 'allow', 'block', or 'deny'")
        if cur.at_end():
            return clauses
        if cur.peek().low != "and":
            raise cur.fail("expected 'and' between clauses")
        cur.take()


def _normalize_cidr(phrase: str) -> str | None:
    if not _CIDR_RE.fullmatch(phrase):
        return None
    try:
        return ipaddress.IPv4Network(phrase, strict=False).with_prefixlen
    except ValueError:
        return None


def _resolve_endpoint(context: NetworkContext, phrase: str, unresolved: list[str]):
    """Ground one endpoint phrase; returns (members, zones)."""
    if phrase.lower() in ANY_WORDS:
        return (EndpointRef("any", ""),), ()
    cidr = _normalize_cidr(phrase)
    if cidr is not None:
        return (EndpointRef("cidr", cidr),), ()
    matches = [m for m in lookup(context, phrase).candidates if m.category == "object"]
    if len(matches) != 1:
        unresolved.append(phrase)
        return (), ()
    entity = matches[0].entity(context)
    zones = (entity.zone,) if entity.zone else ()
    return (EndpointRef("object", entity.name),), zones


def _resolve_service(context: NetworkContext, clause: ClauseAST, unresolved: list[str]):
    """Return (protocol, ports) for the clause's connection slot."""
    if clause.proto_port_phrase is not None:
        proto_text, port_text = clause.proto_port_phrase.split()
        return proto_text.lower(), (parse_port_spec(port_text),)
    if clause.service_phrase is None:
        return "any", None
    phrase = clause.service_phrase
    matches = [m for m in lookup(context, phrase).candidates if m.category == "service"]
    if len(matches) == 1:
        service = matches[0].entity(context)
        return service.protocol, service.ports
    if not matches and phrase.lower() in PROTOCOL_KEYWORDS + ("any",):
        return phrase.lower(), None
    unresolved.append(phrase)
    return "any", None


def _resolve_schedule(context: NetworkContext, phrase: str | None, unresolved: list[str]) -> TimeWindow | None:
    if phrase is None:
        return None
    inline = _window_from_phrase(phrase)
    if inline is not None:
        return inline
    matches = [m for m in lookup(context, phrase).candidates if m.category == "schedule"]
    if len(matches) == 1:
        return matches[0].entity(context)
    unresolved.append(phrase)
    return None


def resolve(clauses: list[ClauseAST], context: NetworkContext) -> ResolvedIntent:
    """Ground each clause against the context.

    Phrases that fail to ground, or ground ambiguously, are recorded in the
    clause's unresolved list and leave their field unbound; nothing is
    thrown. A deny clause with direction outbound and no stated destination
    targets `any` toward the untrust-level zone.
    """
    resolved = []
    for clause in clauses:
        unresolved: list[str] = []
        sources, source_zones = _resolve_endpoint(context, clause.subject_phrase, unresolved)
        if clause.object_phrase is not None:
            destinations, destination_zones = _resolve_endpoint(context, clause.object_phrase, unresolved)
        elif clause.action == "deny" and clause.direction_word == "outbound":
            untrust = context.untrust_zones()
            destinations = (EndpointRef("any", ""),)
            destination_zones = (untrust[0],) if untrust else ()
        else:
            destinations, destination_zones = (), ()
        protocol, ports = _resolve_service(context, clause, unresolved)
        schedule = _resolve_schedule(context, clause.schedule_phrase, unresolved)
        resolved.append(
            ResolvedClause(
                action=clause.action,
                sources=sources,
                destinations=destinations,
                source_zones=tuple(sorted(set(source_zones))),
                destination_zones=tuple(sorted(set(destination_zones))),
                protocol=protocol,
                ports=ports,
                direction=clause.direction_word or "any",
                schedule=schedule,
                text=clause.text,
                unresolved=tuple(unresolved),
            )
        )
    return ResolvedIntent(clauses=tuple(resolved))


def _slug(members: tuple[EndpointRef, ...]) -> str:
    if not members:
        return "unresolved"
    first = members[0]
    raw = "any" if first.kind == "any" else first.value
    return re.sub(r"[^A-Za-z0-9_-]+", "-", raw).strip("-") or "any"


def build_ir(intent: ResolvedIntent, context: NetworkContext) -> IRPolicy:
    """One IRRule per clause: ids R1, R2, ... in clause order, defaults filled.

    The output satisfies the policy type invariants whenever every phrase
    resolved; holes (empty member lists) are preserved for the Safety Gate
    to judge.
    """
    if not intent.clauses:
        raise IntentError("INTENT_EMPTY", "intent contains no clauses")
    rules = []
    for index, clause in enumerate(intent.clauses, start=1):
        rules.append(
            IRRule(
                id=f"R{index}",
                name=f"{clause.action}-{_slug(clause.sources)}-to-{_slug(clause.destinations)}",
                action=clause.action,
                protocol=clause.protocol,
                sources=clause.sources,
                destinations=clause.destinations,
                source_zones=clause.source_zones,
                destination_zones=clause.destination_zones,
                direction=clause.direction,
                priority=100,
                logging=True,
                ports=clause.ports,
                application=None,
                schedule=clause.schedule,
                raw_policy=clause.text,
                ambiguities=clause.unresolved,
            )
        )
    return IRPolicy(context_id=context.id, rules=tuple(rules))


def clause_to_doc(clause: ResolvedClause) -> dict:
    doc = {
        "action": clause.action,
        "sources": [{"kind": r.kind, "value": r.value} for r in clause.sources],
        "destinations": [{"kind": r.kind, "value": r.value} for r in clause.destinations],
        "source_zones": list(clause.source_zones),
        "destination_zones": list(clause.destination_zones),
        "protocol": clause.protocol,
        "direction": clause.direction,
        "text": clause.text,
        "unresolved": list(clause.unresolved),
    }
    if clause.ports is not None:
        doc["ports"] = [p.text() for p in clause.ports]
    if clause.schedule is not None:
        w = clause.schedule
        doc["schedule"] = {
            "name": w.name,
            "days": sorted(w.days),
            "start": minutes_to_hhmm(w.start),
            "end": minutes_to_hhmm(w.end),
        }
    return doc


def intent_to_doc(intent: ResolvedIntent) -> dict:
    return {"clauses": [clause_to_doc(c) for c in intent.clauses]}


def intent_from_doc(doc: dict) -> ResolvedIntent:
    clauses = []
    for c in doc.get("clauses", []):
        schedule = None
        if "schedule" in c:
            w = c["schedule"]
            schedule = TimeWindow(
                name=w["name"],
                days=frozenset(w["days"]),
                start=hhmm_to_minutes(w["start"]),
                end=hhmm_to_minutes(w["end"]),
            )
        clauses.append(
            ResolvedClause(
                action=c["action"],
                sources=tuple(EndpointRef(r["kind"], r.get("value", "")) for r in c["sources"]),
                destinations=tuple(EndpointRef(r["kind"], r.get("value", "")) for r in c["destinations"]),
                source_zones=tuple(c["source_zones"]),
                destination_zones=tuple(c["destination_zones"]),
                protocol=c["protocol"],
                ports=tuple(parse_port_spec(p) for p in c["ports"]) if "ports" in c else None,
                direction=c["direction"],
                schedule=schedule,
                text=c.get("text", ""),
                unresolved=tuple(c.get("unresolved", [])),
            )
        )
    return ResolvedIntent(clauses=tuple(clauses))


@dataclass(frozen=True)
class AgentConfig:
    """Where the external agent listens and how long to wait for it."""

    endpoint: str
    timeout: float = 10.0


class AgentError(RuntimeError):
    """Agent call failed; the finding says whether transport or schema."""

    def __init__(self, finding: Finding):
        super().__init__(finding.message)
        self.finding = finding


def invoke_agent(config: AgentConfig, role: str, input_doc: dict, schema: dict) -> dict:
    """POST one role-conditioned request and re-validate the returned document.

    Output failing schema validation is rejected, never repaired: the agent
    proposes, this side decides.
    """
    body = {"role": role, "input": input_doc, "schema": schema}
    try:
        response = requests.post(config.endpoint, json=body, timeout=config.timeout)
        response.raise_for_status()
        doc = response.json()
    except requests.RequestException as exc:
        raise AgentError(make_finding("AGENT_TRANSPORT", f"agent endpoint {config.endpoint}: {exc}")) from exc
    except ValueError as exc:
        raise AgentError(make_finding("AGENT_TRANSPORT", f"agent returned a non-JSON body: {exc}")) from exc
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise AgentError(
            make_finding("AGENT_SCHEMA_VIOLATION", f"agent {role} output rejected at {where}: {exc.message}")
        ) from exc
    return doc

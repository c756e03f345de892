"""Hypothesis strategies and seeded random generators for policies and contexts."""

from __future__ import annotations

import random
import string

from hypothesis import strategies as st

from intentfw.context import AddressObject, NetworkContext, Service, Zone
from intentfw.ir import (
    ACTIONS,
    DIRECTIONS,
    EndpointRef,
    IRPolicy,
    IRRule,
    PortSpec,
    TimeWindow,
    WEEKDAYS,
)

_name_alphabet = string.ascii_letters + string.digits + "_-"

names = st.text(alphabet=_name_alphabet, min_size=1, max_size=12)

port_specs = st.builds(
    lambda lo, span: PortSpec(lo, min(lo + span, 65535)),
    st.integers(1, 65535),
    st.integers(0, 100),
)


def _cidr(addr: int, prefix: int) -> str:
    mask = (0xFFFFFFFF << (32 - prefix)) & 0xFFFFFFFF if prefix else 0
    net = addr & mask
    return f"{net >> 24 & 255}.{net >> 16 & 255}.{net >> 8 & 255}.{net & 255}/{prefix}"


cidrs = st.builds(_cidr, st.integers(0, 0xFFFFFFFF), st.integers(1, 32))

endpoints = st.one_of(
    st.builds(lambda v: EndpointRef("object", v), names),
    st.builds(lambda v: EndpointRef("cidr", v), cidrs),
    st.just(EndpointRef("any", "")),
)

windows = st.builds(
    lambda name, days, start, span: TimeWindow(name, frozenset(days), start, min(start + 1 + span, 1440)),
    names,
    st.sets(st.sampled_from(WEEKDAYS), min_size=1),
    st.integers(0, 1438),
    st.integers(0, 600),
)


@st.composite
def rules(draw, rule_id=None):
    protocol = draw(st.sampled_from(("tcp", "udp", "icmp", "any")))
    ports = None
    if protocol in ("tcp", "udp") and draw(st.booleans()):
        ports = tuple(draw(st.lists(port_specs, min_size=1, max_size=3)))
    return IRRule(
        id=rule_id if rule_id is not None else draw(names),
        name=draw(st.text(max_size=20)),
        action=draw(st.sampled_from(ACTIONS)),
        protocol=protocol,
        sources=tuple(draw(st.lists(endpoints, min_size=1, max_size=3))),
        destinations=tuple(draw(st.lists(endpoints, min_size=1, max_size=3))),
        source_zones=tuple(draw(st.lists(names, min_size=0, max_size=2))),
        destination_zones=tuple(draw(st.lists(names, min_size=0, max_size=2))),
        direction=draw(st.sampled_from(DIRECTIONS)),
        priority=draw(st.integers(1, 65535)),
        logging=draw(st.booleans()),
        ports=ports,
        application=draw(st.one_of(st.none(), names)),
        schedule=draw(st.one_of(st.none(), windows)),
        raw_policy=draw(st.text(max_size=30)),
        ambiguities=tuple(draw(st.lists(st.text(max_size=15), max_size=2))),
    )


@st.composite
def policies(draw):
    count = draw(st.integers(1, 4))
    rule_ids = draw(st.lists(names, min_size=count, max_size=count, unique_by=str))
    return IRPolicy(
        context_id=draw(names),
        rules=tuple(draw(rules(rule_id=rid)) for rid in rule_ids),
    )


@st.composite
def contexts(draw):
    zone_count = draw(st.integers(1, 4))
    zone_names = [f"zone-{i}" for i in range(zone_count)]
    zones = {
        n: Zone(n, draw(st.sampled_from(("trust", "dmz", "guest", "untrust"))))
        for n in zone_names
    }
    objects = {}
    for i in range(draw(st.integers(0, 5))):
        n = f"obj-{i}"
        kind = draw(st.sampled_from(("host", "subnet", "fqdn")))
        if kind == "host":
            value = f"10.{draw(st.integers(0, 255))}.{draw(st.integers(0, 255))}.{draw(st.integers(1, 254))}"
        elif kind == "subnet":
            value = draw(cidrs)
        else:
            value = f"svc{i}.example.com"
        objects[n] = AddressObject(n, kind, value, zone=draw(st.sampled_from(zone_names)), aliases=(f"alias-{i}",))
    services = {}
    for i in range(draw(st.integers(0, 4))):
        n = f"svc-def-{i}"
        services[n] = Service(n, draw(st.sampled_from(("tcp", "udp"))), tuple(draw(st.lists(port_specs, min_size=1, max_size=2))))
    schedules = {}
    for i in range(draw(st.integers(0, 2))):
        n = f"sched-{i}"
        w = draw(windows)
        schedules[n] = TimeWindow(n, w.days, w.start, w.end)
    return NetworkContext(
        id=draw(st.sampled_from(("ctx-a", "ctx-b", "ctx-c"))),
        title=draw(st.text(max_size=12)),
        objects=objects,
        zones=zones,
        services=services,
        schedules=schedules,
    )


# --- Seeded random generators (non-hypothesis paths: acceptance suites) ---


def random_context(rng: random.Random) -> NetworkContext:
    """A small valid context with disjoint names across categories."""
    levels = ["trust", "dmz", "guest", "untrust"]
    zone_names = [f"z{i}" for i in range(rng.randint(2, 4))]
    zones = {n: Zone(n, levels[i % 4]) for i, n in enumerate(zone_names)}
    objects = {}
    for i in range(rng.randint(2, 6)):
        n = f"obj-{i}"
        kind = rng.choice(["host", "subnet", "fqdn"])
        if kind == "host":
            value = f"10.{rng.randint(0, 250)}.{rng.randint(0, 250)}.{rng.randint(1, 250)}"
        elif kind == "subnet":
            value = f"10.{rng.randint(0, 250)}.{rng.randint(0, 250)}.0/24"
        else:
            value = f"app{i}.example.net"
        objects[n] = AddressObject(n, kind, value, zone=rng.choice(zone_names))
    services = {}
    for i in range(rng.randint(1, 3)):
        n = f"named-svc-{i}"
        lo = rng.randint(1024, 60000)
        services[n] = Service(n, rng.choice(["tcp", "udp"]), (PortSpec(lo, lo),))
    schedules = {}
    for i in range(rng.randint(0, 2)):
        n = f"win-{i}"
        start = rng.randint(0, 600)
        schedules[n] = TimeWindow(n, frozenset(rng.sample(WEEKDAYS, rng.randint(1, 4))), start, start + rng.randint(30, 600))
    return NetworkContext(
        id=f"rand-{rng.randint(0, 10**6)}",
        title="random context",
        objects=objects,
        zones=zones,
        services=services,
        schedules=schedules,
    )


def random_gate_passing_rule(rng: random.Random, context: NetworkContext, rule_id: str) -> IRRule:
    """A rule that satisfies every safety-gate check by construction."""
    object_names = sorted(context.objects)
    zone_names = sorted(context.zones)

    def members(allow_any: bool) -> tuple[EndpointRef, ...]:
        out = []
        for _ in range(rng.randint(1, 2)):
            roll = rng.random()
            if roll < 0.6 and object_names:
                out.append(EndpointRef("object", rng.choice(object_names)))
            elif roll < 0.85:
                out.append(EndpointRef("cidr", f"172.{rng.randint(16, 31)}.{rng.randint(0, 250)}.0/24"))
            elif allow_any:
                out.append(EndpointRef("any", ""))
            else:
                out.append(EndpointRef("cidr", f"192.168.{rng.randint(0, 250)}.0/24"))
        return tuple(out)

    action = rng.choice(["allow", "deny"])
    # Never any-equivalent on both sides of an allow rule (E-SG-01).
    sources = members(allow_any=action == "deny")
    destinations = members(allow_any=action == "deny" or all(r.kind != "any" for r in sources))
    if action == "allow" and any(r.kind == "any" for r in sources) and any(r.kind == "any" for r in destinations):
        destinations = (EndpointRef("object", rng.choice(object_names)) if object_names else EndpointRef("cidr", "192.168.77.0/24"),)
    protocol = rng.choice(["tcp", "udp", "icmp", "any"])
    ports = None
    if protocol in ("tcp", "udp") and rng.random() < 0.8:
        specs = []
        for _ in range(rng.randint(1, 2)):
            lo = rng.randint(1, 65000)
            specs.append(PortSpec(lo, lo if rng.random() < 0.7 else lo + rng.randint(1, 200)))
        ports = tuple(specs)
    schedule = None
    if rng.random() < 0.4:
        if context.schedules and rng.random() < 0.5:
            schedule = rng.choice(sorted(context.schedules.values(), key=lambda w: w.name))
        else:
            start = rng.randint(0, 1000)
            schedule = TimeWindow(f"win-{rule_id}", frozenset(rng.sample(WEEKDAYS, rng.randint(1, 3))), start, start + rng.randint(10, 400))
    return IRRule(
        id=rule_id,
        name=f"rule {rule_id}",
        action=action,
        protocol=protocol,
        sources=sources,
        destinations=destinations,
        source_zones=tuple(rng.sample(zone_names, rng.randint(1, min(2, len(zone_names))))),
        destination_zones=tuple(rng.sample(zone_names, rng.randint(1, min(2, len(zone_names))))),
        direction=rng.choice(["inbound", "outbound", "any"]),
        priority=rng.randint(1, 65535),
        logging=rng.random() < 0.8,
        ports=ports,
        schedule=schedule,
        raw_policy="",
        ambiguities=(),
    )


def random_gate_passing_policy(rng: random.Random, context: NetworkContext) -> IRPolicy:
    count = rng.randint(1, 5)
    rules = tuple(random_gate_passing_rule(rng, context, f"R{i + 1}") for i in range(count))
    return IRPolicy(context_id=context.id, rules=rules)

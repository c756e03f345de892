"""Release gate: one test per headline guarantee of the pipeline.

Each test prints a single PASS/FAIL line (visible under pytest -s) so the
suite doubles as a checklist. Expected values are recomputed inside the test
body with an independent oracle wherever one is cheap to state: a re-sort
for rule ordering, hand-derived ratios for similarity, a line-deletion
mutation loop for referential closure. Nothing here reaches into private
helpers of the modules under test.
"""

from __future__ import annotations

import json
import random
import re
import time
from dataclasses import replace
from pathlib import Path

import strategies
from intentfw import panos, verifier
from intentfw.evalharness import load_triplets, run_suite, similarity
from intentfw.ir import EndpointRef, IRPolicy, IRRule, PortSpec, TimeWindow, policy_to_doc
from intentfw.pipeline import run_pipeline
from intentfw.validators import lint_general, lint_panos, safety_gate

CORPUS = Path(__file__).resolve().parents[1] / "corpus" / "triplets.json"


def _verdict(label: str, problems: list[str], note: str = "") -> None:
    status = "PASS" if not problems else "FAIL"
    suffix = f"  [{note}]" if note else ""
    print(f"acceptance: {label:<32} {status}{suffix}")
    assert not problems, f"{label}: " + " | ".join(problems[:12])


def _rule(**overrides) -> IRRule:
    fields = dict(
        id="R1",
        name="seed rule",
        action="allow",
        protocol="tcp",
        sources=(EndpointRef("object", "WebServer"),),
        destinations=(EndpointRef("object", "DB"),),
        source_zones=("dmz",),
        destination_zones=("trust",),
        direction="outbound",
        priority=100,
        logging=True,
        ports=(PortSpec(443, 443),),
        schedule=None,
        raw_policy="",
        ambiguities=(),
    )
    fields.update(overrides)
    return IRRule(**fields)


def _policy(*rules: IRRule, context_id: str = "ecommerce") -> IRPolicy:
    return IRPolicy(context_id=context_id, rules=tuple(rules))


ANY = EndpointRef("any", "")
ZERO_NET = EndpointRef("cidr", "0.0.0.0/0")
OBJ = EndpointRef("object", "WebServer")

# Adversarial corpus: every entry carries exactly one gate defect and the
# single code the gate must report for it.
GATE_SEEDS = [
    ("E-SG-01", _rule(sources=(ANY,), destinations=(ANY,))),
    ("E-SG-01", _rule(sources=(ZERO_NET,), destinations=(ZERO_NET,))),
    ("E-SG-01", _rule(sources=(ANY,), destinations=(ZERO_NET,))),
    ("E-SG-01", _rule(sources=(ZERO_NET,), destinations=(ANY,))),
    ("E-SG-01", _rule(sources=(OBJ, ANY), destinations=(ZERO_NET, OBJ))),
    ("E-SG-01", _rule(action="Allow", sources=(ANY,), destinations=(ANY,))),
    ("E-SG-01", _rule(protocol="any", sources=(ANY,), destinations=(ANY,), ports=None)),
    ("E-SG-01", _rule(sources=(OBJ, ANY), destinations=(ANY,))),
    ("E-SG-02", _rule(source_zones=())),
    ("E-SG-02", _rule(destination_zones=())),
    ("E-SG-02", _rule(action="deny", source_zones=())),
    ("E-SG-02", _rule(protocol="icmp", ports=None, destination_zones=())),
    ("E-SG-03", _rule(sources=())),
    ("E-SG-03", _rule(destinations=())),
    ("E-SG-03", _rule(action="deny", sources=())),
    ("E-SG-03", _rule(protocol="udp", destinations=())),
    ("E-SG-04", _rule(protocol="")),
    ("E-SG-04", _rule(action="deny", protocol="")),
    ("E-SG-04", _rule(protocol=None, ports=None)),
    ("E-SG-01", _rule(priority=1, sources=(ANY,), destinations=(ANY,))),
    ("E-SG-01", _rule(logging=False, sources=(ZERO_NET,), destinations=(ZERO_NET, OBJ))),
    ("E-SG-03", _rule(action="deny", destinations=())),
]


def test_safety_gate_completeness():
    problems: list[str] = []
    started = time.perf_counter()

    for index, (code, rule) in enumerate(GATE_SEEDS):
        result = safety_gate(_policy(rule))
        if result.safe:
            problems.append(f"seed {index} ({code}): gate passed a defective policy")
            continue
        codes = {f.code for f in result.errors}
        if codes != {code}:
            problems.append(f"seed {index}: expected {{{code}}}, gate reported {sorted(codes)}")
        if len(result.errors) != 1:
            problems.append(f"seed {index}: expected one error, got {len(result.errors)}")

    for seed in range(20):
        rng = random.Random(9000 + seed)
        context = strategies.random_context(rng)
        policy = strategies.random_gate_passing_policy(rng, context)
        result = safety_gate(policy)
        if not result.safe:
            codes = sorted(f.code for f in result.errors)
            problems.append(f"clean policy seed {seed} falsely blocked: {codes}")

    elapsed = time.perf_counter() - started
    if len(GATE_SEEDS) < 20:
        problems.append(f"only {len(GATE_SEEDS)} adversarial seeds, need at least 20")
    if elapsed >= 1.0:
        problems.append(f"runtime {elapsed:.2f}s exceeds 1s budget")
    _verdict(
        "safety-gate completeness",
        problems,
        f"{len(GATE_SEEDS)} defects + 20 clean, {elapsed:.2f}s < 1s",
    )


def test_triplet_suite_pass_rate(ecommerce, smart_factory):
    problems: list[str] = []
    cases = load_triplets(CORPUS.read_text(encoding="utf-8"))
    contexts = {ecommerce.id: ecommerce, smart_factory.id: smart_factory}

    started = time.perf_counter()
    report = run_suite(cases, contexts)
    elapsed = time.perf_counter() - started

    if len(cases) < 30:
        problems.append(f"corpus holds {len(cases)} cases, need at least 30")
    case_ids = {case.id for case in cases}
    for anchor in ("ec-01-db-access", "ec-02-walkthrough"):
        if anchor not in case_ids:
            problems.append(f"anchor case {anchor} missing from corpus")
    used_contexts = {case.context_id for case in cases}
    if used_contexts != {"ecommerce", "smart-factory"}:
        problems.append(f"expected both fixture contexts, corpus uses {sorted(used_contexts)}")
    if report.pass_rate != 1.0:
        for result in report.results:
            if result.status != "pass":
                problems.append(f"case {result.case_id}: {result.status}")
    if elapsed >= 10.0:
        problems.append(f"runtime {elapsed:.2f}s exceeds 10s budget")
    _verdict(
        "triplet suite pass rate",
        problems,
        f"{report.passed}/{report.total} pass, {elapsed:.2f}s < 10s",
    )


_DEF_PATTERNS = {
    "zone": re.compile(r"^set zone (\S+) network"),
    "address": re.compile(r"^set address (\S+) "),
    "service": re.compile(r"^set service (\S+) protocol"),
    "schedule": re.compile(r"^set schedule (\S+) recurring"),
}


def _single_line_definitions(lines: list[str]) -> list[tuple[str, str, int]]:
    """(category, name, line index) for names defined by exactly one line.

    A multi-line definition (a schedule with several weekdays, a service
    with several port entries) survives losing one line, so only names
    whose whole definition is a single line qualify for the deletion test.
    """
    counts: dict[tuple[str, str], list[int]] = {}
    for index, line in enumerate(lines):
        for category, pattern in _DEF_PATTERNS.items():
            match = pattern.match(line)
            if match:
                counts.setdefault((category, match.group(1)), []).append(index)
    return [(cat, name, idxs[0]) for (cat, name), idxs in counts.items() if len(idxs) == 1]


def test_compiler_referential_closure():
    problems: list[str] = []
    mutations = 0
    started = time.perf_counter()

    for seed in range(100):
        rng = random.Random(31000 + seed)
        context = strategies.random_context(rng)
        policy = strategies.random_gate_passing_policy(rng, context)
        config = panos.compile(policy, context)
        header = verifier.synth_header(context)
        findings = verifier.verify(config.lines, header)
        errors = [f for f in findings if f.severity == "error"]
        if errors:
            problems.append(f"seed {seed}: clean compile verified with errors {[f.code for f in errors]}")
            continue

        all_lines = list(header) + list(config.lines)
        referenced = verifier.parse_cli(all_lines).referenced
        for category, name, index in _single_line_definitions(all_lines):
            if name not in referenced.get(category, {}):
                continue
            mutated = all_lines[:index] + all_lines[index + 1 :]
            needle = f"{category} {name} is referenced"
            hits = [
                f
                for f in verifier.verify(mutated, [])
                if f.code == "E-VFY-UNDEF" and needle in f.message
            ]
            mutations += 1
            if not hits:
                problems.append(f"seed {seed}: deleting {category} {name} raised no undefined-reference error")

    elapsed = time.perf_counter() - started
    if mutations < 50:
        problems.append(f"only {mutations} deletion mutations exercised, need at least 50")
    if elapsed >= 30.0:
        problems.append(f"runtime {elapsed:.2f}s exceeds 30s budget")
    _verdict(
        "compiler referential closure",
        problems,
        f"100 policies, {mutations} deletions, {elapsed:.2f}s < 30s",
    )


def test_rule_ordering_law():
    problems: list[str] = []
    rule_line = re.compile(r"^set rulebase security rules (\S+) ")

    for seed in range(100):
        rng = random.Random(47000 + seed)
        context = strategies.random_context(rng)
        policy = strategies.random_gate_passing_policy(rng, context)
        config = panos.compile(policy, context)

        # Oracle: re-sort from scratch against the published contract.
        expected = [
            rule.id
            for rule in sorted(
                policy.rules,
                key=lambda r: (0 if r.action.lower() == "deny" else 1, r.priority, r.id),
            )
        ]
        if list(config.rule_order) != expected:
            problems.append(f"seed {seed}: manifest order {list(config.rule_order)} != oracle {expected}")

        emitted: list[str] = []
        for line in config.lines:
            match = rule_line.match(line)
            if match and match.group(1) not in emitted:
                emitted.append(match.group(1))
        if emitted != expected:
            problems.append(f"seed {seed}: emitted block order {emitted} != oracle {expected}")

        by_id = {rule.id: rule for rule in policy.rules}
        actions = [by_id[rid].action.lower() for rid in emitted]
        if "deny" in actions and "allow" in actions:
            if actions.index("allow") < len(actions) - 1 - actions[::-1].index("deny"):
                problems.append(f"seed {seed}: an allow block precedes a deny block")
        for action in ("deny", "allow"):
            priorities = [by_id[rid].priority for rid in emitted if by_id[rid].action.lower() == action]
            if priorities != sorted(priorities):
                problems.append(f"seed {seed}: {action} priorities out of order: {priorities}")

    _verdict("rule ordering law", problems, "100 policies vs re-sort oracle")


# Hand-derived gestalt ratios, 2*matches/(len(a)+len(b)).
# ("abc","abd"): block "ab" -> 4/6. ("abcd","bcda"): block "bcd" -> 6/8.
# ("aabb","bbaa"): the tie between "aa" and "bb" goes to "aa" (earliest
# start in a), both remainders around it are empty on one side -> 4/8.
# ("python","typhon"): block "hon", then "p" inside the left remainder
# ("pyt" vs "typ", earliest start in a wins again) -> 8/12. "" vs "x"
# shares nothing -> 0.
SIMILARITY_PAIRS = [
    ("abc", "abd", 2.0 / 3.0),
    ("abcd", "bcda", 0.75),
    ("aabb", "bbaa", 0.5),
    ("", "x", 0.0),
    ("python", "typhon", 2.0 / 3.0),
]


def test_similarity_oracle():
    problems: list[str] = []
    for a, b, expected in SIMILARITY_PAIRS:
        got = similarity(a, b)
        if abs(got - expected) > 1e-9:
            problems.append(f"similarity({a!r},{b!r}) = {got!r}, expected {expected!r}")

    alphabet = "abcdefgh XYZ0189_-\né中"
    rng = random.Random(424242)
    for _ in range(100):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        if similarity(text, text) != 1.0:
            problems.append(f"self-similarity below 1.0 for {text!r}")
    _verdict("similarity oracle", problems, "5 fixed pairs @1e-9 + 100 self-pairs")


def test_determinism_across_runs(ecommerce, smart_factory):
    problems: list[str] = []
    contexts = {ecommerce.id: ecommerce, smart_factory.id: smart_factory}
    text = CORPUS.read_text(encoding="utf-8")

    first = run_suite(load_triplets(text), contexts)
    second = run_suite(load_triplets(text), contexts)

    if [r.case_id for r in first.results] != [r.case_id for r in second.results]:
        problems.append("case order differs between runs")
    else:
        for one, two in zip(first.results, second.results):
            if one.produced_ir != two.produced_ir:
                problems.append(f"case {one.case_id}: canonical IR bytes differ between runs")
            if one.produced_cli != two.produced_cli:
                problems.append(f"case {one.case_id}: CLI text differs between runs")
            if one.status != two.status:
                problems.append(f"case {one.case_id}: status differs between runs")
    _verdict("determinism across runs", problems, f"{first.total} cases, two full passes")


# One seed per advisory code. The middle column says how far the policy can
# travel after linting: "compiles" all the way through the compiler,
# "compile-error" reaches the compiler which rejects the rule itself
# (unknown action or protocol is a compile failure, not a safety block),
# "gate" overlaps with a gate check because the same omission that draws
# the warning (empty members or zones) is independently unsafe.
WARN_SEEDS = [
    ("W-GEN-01", "gate", _policy(_rule(sources=()))),
    ("W-GEN-02", "gate", _policy(_rule(destinations=()))),
    ("W-GEN-03", "compiles", _policy(_rule(), _rule(priority=200))),
    ("W-GEN-04", "compiles", _policy(_rule(ports=(PortSpec(70000, 70001),)))),
    ("W-GEN-05", "compiles", _policy(_rule(protocol="icmp", ports=(PortSpec(80, 80),)))),
    ("W-GEN-06", "compiles", _policy(_rule(priority=0))),
    ("W-GEN-07", "compile-error", _policy(_rule(action="drop"))),
    ("W-PAN-01", "compile-error", _policy(_rule(protocol="gre", ports=None))),
    ("W-PAN-02", "gate", _policy(_rule(source_zones=()))),
    ("W-PAN-03", "compiles", _policy(_rule(schedule=TimeWindow("x" * 32, frozenset({"monday"}), 540, 1020)))),
    (
        "W-PAN-04",
        "compiles",
        _policy(
            _rule(
                action="deny",
                sources=(EndpointRef("object", "Guests"),),
                source_zones=("guest",),
                destination_zones=("untrust",),
                ports=None,
                protocol="any",
                schedule=TimeWindow("after-hours", frozenset({"saturday"}), 0, 360),
            )
        ),
    ),
    ("W-PAN-05", "compiles", _policy(_rule(ports=(PortSpec(8080, 8080),)))),
    ("W-PAN-06", "compiles", _policy(_rule(direction="inbound", source_zones=("trust",)))),
    ("W-PAN-07", "compiles", _policy(_rule(destinations=(OBJ,)))),
]


def test_warnings_never_block(ecommerce):
    problems: list[str] = []
    seeded_codes = set()

    for code, fate, policy in WARN_SEEDS:
        seeded_codes.add(code)
        findings = lint_general(policy) + lint_panos(policy, ecommerce)
        if code not in {f.code for f in findings}:
            problems.append(f"{code}: seed did not trigger the warning")
            continue
        wrong = [f for f in findings if f.severity != "warning"]
        if wrong:
            problems.append(f"{code}: linters produced non-warning findings {[f.code for f in wrong]}")

        gate = safety_gate(policy)
        if fate == "gate":
            # The same omission is a genuine safety defect; the block must
            # come from the gate under its own E-SG code, never from the
            # warning.
            if gate.safe:
                problems.append(f"{code}: expected the gate to reject this seed on its own grounds")
            elif not all(f.code.startswith("E-SG-") for f in gate.errors):
                problems.append(f"{code}: gate reported non-gate codes {[f.code for f in gate.errors]}")
            continue
        if not gate.safe:
            problems.append(f"{code}: gate blocked a warning-only policy: {[f.code for f in gate.errors]}")
            continue
        try:
            config = panos.compile(policy, ecommerce)
        except panos.CompileError as exc:
            if fate != "compile-error":
                problems.append(f"{code}: compile failed unexpectedly: {exc}")
            continue
        if fate == "compile-error":
            problems.append(f"{code}: expected the compiler itself to reject this rule")
        elif not config.lines:
            problems.append(f"{code}: compiler produced no output")

    expected_codes = {f"W-GEN-0{i}" for i in range(1, 8)} | {f"W-PAN-0{i}" for i in range(1, 8)}
    if seeded_codes != expected_codes:
        problems.append(f"seed table covers {sorted(seeded_codes)}, expected all of {sorted(expected_codes)}")

    _pipeline_subset(problems, ecommerce)
    _pipeline_fuzz(problems)
    _verdict("warnings never block", problems, "14 codes seeded + pipeline fuzz")


def _pipeline_subset(problems: list[str], ecommerce) -> None:
    """Codes expressible in schema-valid policies must ride the full
    pipeline to a compiled config with the lint stage merely warned."""
    contexts = {ecommerce.id: ecommerce}
    runs = [
        ("W-PAN-05", "Allow WebServer to reach DB on tcp 5432", "grammar"),
        ("W-PAN-06", "Allow WebServer to reach DB on tcp 5432", "grammar"),
        ("W-PAN-07", "Allow WebServer to reach WebServer", "grammar"),
    ]
    for code, _, policy in WARN_SEEDS:
        if code in ("W-PAN-03", "W-PAN-04"):
            runs.append((code, json.dumps(policy_to_doc(policy)), "ir"))

    for code, query, backend in runs:
        trace = run_pipeline(contexts, "ecommerce", query, backend=backend)
        stages = {record.stage: record for record in trace.stages}
        lint_stage = stages["lint_panos"]
        if lint_stage.status != "warned" or code not in {f.code for f in lint_stage.findings}:
            problems.append(f"{code}: pipeline lint stage was {lint_stage.status}, findings {[f.code for f in lint_stage.findings]}")
        if stages["safety_gate"].status != "ok":
            problems.append(f"{code}: gate stage {stages['safety_gate'].status} for a warning-only policy")
        if stages["compiler"].status != "ok":
            problems.append(f"{code}: compiler stage {stages['compiler'].status}, expected ok")
        if any(record.status == "blocked" for record in trace.stages):
            problems.append(f"{code}: some stage reports blocked")
        if not (trace.final and trace.final.get("text")):
            problems.append(f"{code}: pipeline produced no final config")


def _pipeline_fuzz(problems: list[str]) -> None:
    """Random policies, some deliberately broken: the lint stages may only
    ever be ok or warned, and blocked can only ever name the gate."""
    linter_stages = {"lint_general", "lint_panos"}
    for seed in range(150):
        rng = random.Random(88000 + seed)
        context = strategies.random_context(rng)
        policy = strategies.random_gate_passing_policy(rng, context)
        expect_block = seed % 5 == 0
        if expect_block:
            victim = policy.rules[rng.randrange(len(policy.rules))]
            field = rng.choice(["sources", "destinations", "source_zones", "destination_zones"])
            broken = replace(victim, **{field: ()})
            policy = replace(
                policy,
                rules=tuple(broken if r.id == victim.id else r for r in policy.rules),
            )

        trace = run_pipeline(
            {context.id: context},
            context.id,
            json.dumps(policy_to_doc(policy)),
            backend="ir",
        )
        for record in trace.stages:
            if record.stage in linter_stages and record.status not in ("ok", "warned"):
                problems.append(f"fuzz seed {seed}: lint stage {record.stage} reports {record.status}")
            if record.status == "blocked" and record.stage != "safety_gate":
                problems.append(f"fuzz seed {seed}: stage {record.stage} blocked; only the gate may block")
        stages = {record.stage: record for record in trace.stages}
        if expect_block:
            if stages["safety_gate"].status != "blocked":
                problems.append(f"fuzz seed {seed}: broken policy was not blocked by the gate")
        else:
            if stages["safety_gate"].status != "ok":
                problems.append(f"fuzz seed {seed}: clean policy blocked: {[f.code for f in stages['safety_gate'].findings]}")
            if stages["compiler"].status != "ok":
                problems.append(f"fuzz seed {seed}: compiler stage {stages['compiler'].status}")

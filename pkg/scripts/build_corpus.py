#!/usr/bin/env python3
"""Regenerate corpus/triplets.json from the seed query list.

Every case is produced by running the deterministic pipeline and freezing
its output, so the suite detects any behavior drift from the committed
baseline. The two hand-derived anchor cases are additionally checked
against their expected CLI text verbatim; if the pipeline ever disagrees
with them, this script refuses to write the file.
"""

import json
import sys
from pathlib import Path

from intentfw.context import load_context
from intentfw.ir import canonicalize, policy_to_doc
from intentfw.pipeline import run_pipeline

ROOT = Path(__file__).resolve().parents[1]

# (case id, context id, query, expect_blocked)
SEEDS = [
    ("ec-01-db-access", "ecommerce",
     "Allow WebServer to reach DB over tcp 5432 during business hours", False),
    ("ec-02-walkthrough", "ecommerce",
     "Allow Finance to reach Vendor-Invoices over HTTPS on weekdays 08:00-18:00 "
     "and deny outbound SMTP from Guests", False),
    ("ec-03-guests-invoices", "ecommerce",
     "Allow Guests to reach Vendor-Invoices over HTTPS", False),
    ("ec-04-bare-allow", "ecommerce",
     "Allow WebServer to access DB", False),
    ("ec-05-dns-by-name", "ecommerce",
     "Allow Finance to reach DB over DNS", False),
    ("ec-06-alias-source", "ecommerce",
     "Allow database to reach Vendor-Invoices over tcp 8443", False),
    ("ec-07-deny-icmp-outbound", "ecommerce",
     "Deny outbound ICMP from Guests", False),
    ("ec-08-deny-rdp-inbound", "ecommerce",
     "Block inbound tcp 3389 from Guests to Finance", False),
    ("ec-09-deny-smtp-named-dest", "ecommerce",
     "Deny outbound SMTP from Guests to Vendor-Invoices", False),
    ("ec-10-cidr-dest-blocked", "ecommerce",
     "Allow Guests to reach 8.8.8.8/32 over DNS", True),
    ("ec-11-any-any-blocked", "ecommerce",
     "Allow anyone to reach anything", True),
    ("ec-12-mail-alias-schedule", "ecommerce",
     "Allow Finance to access Vendor-Invoices over mail during business hours", False),
    ("ec-13-inline-days", "ecommerce",
     "Allow WebServer to reach DB on monday,wednesday 00:30-05:45", False),
    ("ec-14-weekday-window", "ecommerce",
     "Allow Guests to access WebServer over HTTPS on weekdays 10:00-16:00", False),
    ("ec-15-deny-tftp", "ecommerce",
     "Deny outbound udp 69 from Finance", False),
    ("ec-16-postgres-alias", "ecommerce",
     "Allow postgres to reach Finance over tcp 9000", False),
    ("ec-17-two-clause-mixed", "ecommerce",
     "Block tcp 445 from Guests to Finance and allow WebServer to access DB over HTTPS", False),
    ("ec-18-deny-ssh-inbound", "ecommerce",
     "Deny inbound tcp 22 from Vendor-Invoices to WebServer", False),
    ("ec-19-web-schedule", "ecommerce",
     "Allow WebServer to reach Vendor-Invoices over tcp 80 during business hours", False),
    ("ec-20-unresolved-service", "ecommerce",
     "Allow DB to access Vendor-Invoices over invoicing", False),
    ("ec-21-deny-no-direction-blocked", "ecommerce",
     "Deny ICMP from Guests", True),
    ("sf-01-opcua-reuse", "smart-factory",
     "Allow Engineering to reach PLC-Cluster over OPC-UA", False),
    ("sf-02-historian-db", "smart-factory",
     "Allow SCADA-Server to access Historian over tcp 5432 during shift hours", False),
    ("sf-03-modbus", "smart-factory",
     "Allow Engineering to reach SCADA-Server over Modbus", False),
    ("sf-04-deny-http-visitors", "smart-factory",
     "Deny outbound HTTP from Visitor-WiFi", False),
    ("sf-05-visitors-portal", "smart-factory",
     "Allow Visitor-WiFi to reach Vendor-Portal over tcp 443", False),
    ("sf-06-maintenance-window", "smart-factory",
     "Allow Engineering to access Vendor-Portal over HTTP during maintenance-window", False),
    ("sf-07-deny-modbus-inbound", "smart-factory",
     "Deny inbound tcp 502 from Visitor-WiFi to PLC-Cluster", False),
    ("sf-08-ntp-reuse", "smart-factory",
     "Allow Historian to reach Vendor-Portal over NTP", False),
    ("sf-09-unresolved-source-blocked", "smart-factory",
     "Allow opc to reach Historian over tcp 9200", True),
    ("sf-10-weekend-window", "smart-factory",
     "Allow Engineering to reach Visitor-WiFi on saturday,sunday 09:00-12:00", False),
    ("sf-11-deny-telnet", "smart-factory",
     "Deny outbound tcp 23 from Visitor-WiFi", False),
    ("sf-12-any-source-blocked", "smart-factory",
     "Allow anything to reach Historian over tcp 9092", True),
    ("sf-13-deny-snmp", "smart-factory",
     "Block udp 161 from Visitor-WiFi to Engineering", False),
]

# Hand-derived CLI for the anchor cases; the pipeline must agree byte for
# byte or the corpus is not written.
ANCHOR_CLI = {
    "ec-01-db-access": """\
set service svc-tcp-5432 protocol tcp port 5432
set schedule business-hours recurring weekly monday 09:00-17:00
set schedule business-hours recurring weekly tuesday 09:00-17:00
set schedule business-hours recurring weekly wednesday 09:00-17:00
set schedule business-hours recurring weekly thursday 09:00-17:00
set schedule business-hours recurring weekly friday 09:00-17:00
set rulebase security rules R1 from dmz
set rulebase security rules R1 to trust
set rulebase security rules R1 source WebServer
set rulebase security rules R1 destination DB
set rulebase security rules R1 application any
set rulebase security rules R1 service svc-tcp-5432
set rulebase security rules R1 action allow
set rulebase security rules R1 log-end yes
set rulebase security rules R1 schedule business-hours
""",
    "ec-02-walkthrough": """\
set schedule wk-0800-1800 recurring weekly monday 08:00-18:00
set schedule wk-0800-1800 recurring weekly tuesday 08:00-18:00
set schedule wk-0800-1800 recurring weekly wednesday 08:00-18:00
set schedule wk-0800-1800 recurring weekly thursday 08:00-18:00
set schedule wk-0800-1800 recurring weekly friday 08:00-18:00
set rulebase security rules R2 from guest
set rulebase security rules R2 to untrust
set rulebase security rules R2 source Guests
set rulebase security rules R2 destination any
set rulebase security rules R2 application smtp
set rulebase security rules R2 service application-default
set rulebase security rules R2 action deny
set rulebase security rules R2 log-end yes
set rulebase security rules R1 from trust
set rulebase security rules R1 to untrust
set rulebase security rules R1 source Finance
set rulebase security rules R1 destination Vendor-Invoices
set rulebase security rules R1 application ssl
set rulebase security rules R1 service application-default
set rulebase security rules R1 action allow
set rulebase security rules R1 log-end yes
set rulebase security rules R1 schedule wk-0800-1800
""",
}


def main() -> int:
    contexts = {}
    for path in sorted((ROOT / "corpus" / "contexts").glob("*.json")):
        context = load_context(path.read_text())
        contexts[context.id] = context

    cases = []
    for case_id, context_id, query, expect_blocked in SEEDS:
        trace = run_pipeline(contexts, context_id, query)
        outcome = trace.outcome()
        if expect_blocked:
            if outcome != "blocked":
                print(f"{case_id}: expected blocked, pipeline said {outcome}", file=sys.stderr)
                return 1
            cases.append(
                {"id": case_id, "context_id": context_id, "query": query, "expect_blocked": True}
            )
            continue
        if outcome not in ("ok", "warned"):
            codes = ",".join(trace.finding_codes())
            print(f"{case_id}: pipeline outcome {outcome} ({codes})", file=sys.stderr)
            return 1
        text = trace.final["text"]
        if case_id in ANCHOR_CLI and text != ANCHOR_CLI[case_id]:
            print(f"{case_id}: pipeline output drifted from the hand-derived CLI", file=sys.stderr)
            return 1
        cases.append(
            {
                "id": case_id,
                "context_id": context_id,
                "query": query,
                "expected_ir": policy_to_doc(canonicalize(trace.policy)),
                "expected_cli": text,
            }
        )

    out = ROOT / "corpus" / "triplets.json"
    out.write_text(json.dumps({"cases": cases}, indent=2, ensure_ascii=False) + "\n")
    blocked = sum(1 for c in cases if c.get("expect_blocked"))
    print(f"wrote {out} with {len(cases)} cases ({blocked} expect_blocked)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command line entry points.

Exit codes: 0 when a run compiles (warnings allowed), 2 when the safety
gate blocks it, 1 for failures of any other kind, 64 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .context import ContextError, ContextNotFound, ContextStore, load_context
from .evalharness import TripletError, load_triplets, run_suite
from .intent import AgentConfig
from .pipeline import BACKENDS, run_pipeline

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BLOCKED = 2
EXIT_USAGE = 64


class Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract wants 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name, default=None):
    return os.environ.get(f"INTENTFW_{name}", default)


def default_store_dir():
    return _env("STORE", os.path.join(os.path.expanduser("~"), ".intentfw", "contexts"))


def build_parser() -> Parser:
    parser = Parser(prog="intentfw", description="Compile network change requests into firewall CLI.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    ctx = sub.add_parser("context", help="manage network contexts")
    ctx_sub = ctx.add_subparsers(dest="context_command", required=True, parser_class=Parser)
    ctx_add = ctx_sub.add_parser("add", help="validate and store a context document")
    ctx_add.add_argument("path", help="context JSON file")
    ctx_add.add_argument("--store", default=default_store_dir(), help="context store directory")
    ctx_list = ctx_sub.add_parser("list", help="list stored contexts")
    ctx_list.add_argument("--store", default=default_store_dir())

    run = sub.add_parser("run", help="run one request through the pipeline")
    run.add_argument("--context", required=True, help="context id")
    run.add_argument("--query", required=True, help="request text")
    run.add_argument("--backend", choices=BACKENDS, default="grammar")
    run.add_argument("--trace", help="write the full trace document to this file ('-' for stdout)")
    run.add_argument("--store", default=default_store_dir())
    run.add_argument("--agent-endpoint", default=_env("AGENT_ENDPOINT"))
    run.add_argument("--audit", default=_env("AUDIT"), help="append audit records to this JSONL file")

    ev = sub.add_parser("eval", help="run a triplet suite")
    ev.add_argument("--triplets", required=True, help="triplet suite JSON file")
    ev.add_argument("--contexts", help="directory of context JSON files (default: contexts/ next to the suite)")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--port", type=int, default=int(_env("PORT", "8080")))
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--store", default=default_store_dir())
    serve.add_argument("--agent-endpoint", default=_env("AGENT_ENDPOINT"))
    serve.add_argument("--audit", default=_env("AUDIT"))
    serve.add_argument("--ui", help="serve a static UI build from this directory")

    return parser


def _print_findings(findings, stream=None):
    stream = stream if stream is not None else sys.stderr
    for finding in findings:
        rule = f" [{finding.rule_id}]" if finding.rule_id else ""
        print(f"{finding.severity}: {finding.code}{rule}: {finding.message}", file=stream)


def cmd_context_add(args) -> int:
    try:
        document = Path(args.path).read_text()
    except OSError as exc:
        print(f"cannot read {args.path}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    try:
        context = load_context(document)
    except ContextError as exc:
        _print_findings(exc.findings)
        return EXIT_FAILED
    ContextStore(args.store).save(context)
    print(context.id)
    return EXIT_OK


def cmd_context_list(args) -> int:
    for summary in ContextStore(args.store).list():
        counts = f"zones={summary['zones']} objects={summary['objects']} services={summary['services']} schedules={summary['schedules']}"
        title = summary.get("title") or ""
        print(f"{summary['id']}\t{title}\t{counts}")
    return EXIT_OK


def cmd_run(args) -> int:
    store = ContextStore(args.store)
    agent = AgentConfig(endpoint=args.agent_endpoint) if args.agent_endpoint else None
    if args.backend == "agent" and agent is None:
        print("the agent backend needs --agent-endpoint or INTENTFW_AGENT_ENDPOINT", file=sys.stderr)
        return EXIT_USAGE
    try:
        trace = run_pipeline(
            store, args.context, args.query, backend=args.backend, agent=agent, audit_path=args.audit
        )
    except ContextNotFound as exc:
        _print_findings([exc.finding])
        return EXIT_FAILED

    if args.trace:
        payload = json.dumps(trace.to_doc(), indent=2, ensure_ascii=False)
        if args.trace == "-":
            print(payload)
        else:
            Path(args.trace).write_text(payload + "\n")

    for record in trace.stages:
        _print_findings(record.findings)

    outcome = trace.outcome()
    if outcome in ("ok", "warned"):
        sys.stdout.write(trace.final["text"])
        return EXIT_OK
    if outcome == "blocked":
        print("blocked by the safety gate", file=sys.stderr)
        return EXIT_BLOCKED
    return EXIT_FAILED


def cmd_eval(args) -> int:
    triplets_path = Path(args.triplets)
    try:
        cases = load_triplets(triplets_path.read_text())
    except OSError as exc:
        print(f"cannot read {args.triplets}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except TripletError as exc:
        _print_findings(exc.findings)
        return EXIT_FAILED

    contexts_dir = Path(args.contexts) if args.contexts else triplets_path.parent / "contexts"
    contexts = {}
    for path in sorted(contexts_dir.glob("*.json")):
        try:
            context = load_context(path.read_text())
        except ContextError as exc:
            print(f"skipping {path.name}:", file=sys.stderr)
            _print_findings(exc.findings)
            continue
        contexts[context.id] = context

    report = run_suite(cases, contexts)
    sys.stdout.write(report.render())
    return EXIT_OK if report.pass_rate == 1.0 else EXIT_FAILED


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        store_dir=args.store,
        agent_endpoint=args.agent_endpoint,
        audit_path=args.audit,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "context":
        if args.context_command == "add":
            return cmd_context_add(args)
        return cmd_context_list(args)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "eval":
        return cmd_eval(args)
    return cmd_serve(args)


if __name__ == "__main__":
    raise SystemExit(main())

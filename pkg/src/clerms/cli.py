"""Administration CLI.

Exit codes: 0 success, 1 domain error (the printed document carries the
stable error name), 2 usage error. ``--json`` switches every command to
machine-readable output on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading

from .auth import Principal, require
from .config import load_config
from .costs import invoice_from_document
from .errors import ClermsError, NotFound
from .reporting import TransparencyReport, export_report
from .service import ClermsService

_FALLBACK_ADMIN = Principal("cli-admin", "admin", "local")


def _emit(args, doc, human_lines=None):
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2))
    elif human_lines is not None:
        for line in human_lines:
            print(line)
    else:
        print(json.dumps(doc, sort_keys=True, indent=2))


def _service(args, config) -> ClermsService:
    return ClermsService(
        args.data_dir or config.data_dir,
        preservation_delay_days=config.preservation_delay_days,
        ack_timeout_days=config.ack_timeout_days,
        principals=config.principals,
    )


def _principal(args, config) -> Principal:
    name = getattr(args, "as_principal", None)
    if not name:
        return _FALLBACK_ADMIN
    principal = config.principals.get(name)
    if principal is None:
        raise ClermsError(f"no principal {name!r} in config")
    return principal


# ---- commands -----------------------------------------------------------------


def cmd_serve(args, config):
    from .http_api import start_api_server
    from .wire_server import start_wire_server

    service = _service(args, config)
    http_port = config.http_port if args.http_port is None else args.http_port
    agent_port = config.agent_port if args.agent_port is None else args.agent_port
    api = start_api_server(service, config, port=http_port)
    wire = start_wire_server(service, port=agent_port)
    print(f"http api on :{api.port}, agent endpoint on :{wire.port}, "
          f"data in {service.data_dir}", file=sys.stderr)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        api.shutdown()
        wire.shutdown()
    return 0


def cmd_request_submit(args, config):
    service = _service(args, config)
    principal = _principal(args, config)
    require(principal, "request.submit")
    with open(args.file, encoding="utf-8") as fh:
        fields = json.load(fh)
    entry = service.submit_request(principal, fields)
    request = entry["request"]
    _emit(args, {"request_id": request["request_id"], "state": request["state"]["value"],
                 "priority": entry["priority"]},
          [f"submitted {request['request_id']}",
           f"state: {request['state']['value']}", f"priority: {entry['priority']}"])
    return 0


def cmd_request_list(args, config):
    service = _service(args, config)
    principal = _principal(args, config)
    require(principal, "request.list", owner_id=principal.principal_id)
    rows = service.list_requests(principal)
    _emit(args, {"requests": rows},
          [f"{r['request']['request_id']}  {r['request']['state']['value']}  {r['priority']}"
           for r in rows] or ["(none)"])
    return 0


def cmd_request_show(args, config):
    service = _service(args, config)
    principal = _principal(args, config)
    entry = service.state.requests.get(args.request_id)
    if entry is None:
        raise NotFound(f"no request {args.request_id}")
    require(principal, "request.read", owner_id=entry["owner"])
    view = service.view_request(principal, args.request_id)
    _emit(args, view)
    return 0


def cmd_case_show(args, config):
    service = _service(args, config)
    case = service.state.cases.get(args.case_id)
    if case is None:
        raise ClermsError(f"no case {args.case_id}")
    _emit(args, case)
    return 0


def cmd_report_transparency(args, config):
    service = _service(args, config)
    principal = _principal(args, config)
    require(principal, "report.transparency")
    report = service.generate_report(principal, args.period_from, args.period_to)
    if args.format == "csv":
        sys.stdout.write(export_report(TransparencyReport.from_json(report), "csv").decode())
    else:
        _emit(args, report)
    return 0


def cmd_invoice_compute(args, config):
    with open(args.file, encoding="utf-8") as fh:
        doc = json.load(fh)
    invoice = invoice_from_document(doc)
    out = invoice.to_json()
    _emit(args, out, [f"total: {out['total']} cents"]
          + [f"  {l['name']}: {l['line_cost']}" for l in out["resource_lines"]])
    return 0


def cmd_evidence_verify(args, config):
    service = _service(args, config)
    check = service.store.verify_chain(args.evidence_id)
    if check.ok:
        _emit(args, check.to_json(), ["Ok"])
        return 0
    _emit(args, check.to_json(), [f"BrokenAt({check.broken_at})"])
    return 1


def cmd_agent_sim(args, config):
    from .agent import AgentSim

    host, _, port = args.server.rpartition(":")
    sim = AgentSim(
        (host or "127.0.0.1", int(port)),
        args.root,
        hostname=args.hostname,
        os_name=args.os,
        labels=args.label or [],
        processes_file=args.processes,
        agent_id=args.agent_id,
    )
    with sim:
        executed = sim.run_until_idle(max_polls=args.max_polls)
    _emit(args, {"agent_id": sim.agent_id, "executed": executed},
          [f"agent {sim.agent_id} executed {executed} flow(s)"])
    return 0


# ---- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clerms", description="request management service")
    parser.add_argument("--config", help="config file path (else $CLERMS_CONFIG, else ./clerms.ini)")
    parser.add_argument("--data-dir", help="override the configured data directory")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API and the agent endpoint")
    serve.add_argument("--http-port", type=int)
    serve.add_argument("--agent-port", type=int)
    serve.set_defaults(func=cmd_serve)

    request = sub.add_parser("request", help="submit, list, or show requests")
    request_sub = request.add_subparsers(dest="subcommand", required=True)
    submit = request_sub.add_parser("submit")
    submit.add_argument("--file", required=True, help="JSON submission document")
    submit.add_argument("--as", dest="as_principal", help="principal name from config")
    submit.set_defaults(func=cmd_request_submit)
    listing = request_sub.add_parser("list")
    listing.add_argument("--as", dest="as_principal")
    listing.set_defaults(func=cmd_request_list)
    show = request_sub.add_parser("show")
    show.add_argument("request_id")
    show.add_argument("--as", dest="as_principal")
    show.set_defaults(func=cmd_request_show)

    case = sub.add_parser("case", help="inspect cases")
    case_sub = case.add_subparsers(dest="subcommand", required=True)
    case_show = case_sub.add_parser("show")
    case_show.add_argument("case_id")
    case_show.set_defaults(func=cmd_case_show)

    report = sub.add_parser("report", help="generate reports")
    report_sub = report.add_subparsers(dest="subcommand", required=True)
    transparency = report_sub.add_parser("transparency")
    transparency.add_argument("--from", dest="period_from", required=True)
    transparency.add_argument("--to", dest="period_to", required=True)
    transparency.add_argument("--format", choices=("json", "csv"), default="json")
    transparency.add_argument("--as", dest="as_principal")
    transparency.set_defaults(func=cmd_report_transparency)

    invoice = sub.add_parser("invoice", help="cost computations")
    invoice_sub = invoice.add_subparsers(dest="subcommand", required=True)
    compute = invoice_sub.add_parser("compute")
    compute.add_argument("--file", required=True, help="JSON invoice document")
    compute.set_defaults(func=cmd_invoice_compute)

    evidence = sub.add_parser("evidence", help="evidence administration")
    evidence_sub = evidence.add_subparsers(dest="subcommand", required=True)
    verify = evidence_sub.add_parser("verify")
    verify.add_argument("evidence_id")
    verify.set_defaults(func=cmd_evidence_verify)

    agent_sim = sub.add_parser("agent-sim", help="run the endpoint agent simulator")
    agent_sim.add_argument("--server", required=True, help="host:port of the agent endpoint")
    agent_sim.add_argument("--root", required=True, help="sandbox directory seen as /")
    agent_sim.add_argument("--processes", help="JSON process-table fixture")
    agent_sim.add_argument("--agent-id", help="resume an existing registration instead of creating a new agent")
    agent_sim.add_argument("--hostname", default="sim-host")
    agent_sim.add_argument("--os", default="linux", choices=("linux", "windows", "other"))
    agent_sim.add_argument("--label", action="append")
    agent_sim.add_argument("--max-polls", type=int, default=3)
    agent_sim.set_defaults(func=cmd_agent_sim)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ClermsError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IoFailure", "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""HTTP surface: JSON over stdlib http.server, bearer-token principals.

Every route lives under ``/api/v1``. Authorization happens here — the
service layer below assumes the caller was already cleared — and every
error answers with its stable name in the body, e.g.::

    {"error": "InvalidState", "detail": "cannot move Approved -> Rejected"}
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .auth import authorize
from .domain import submission_schema
from .errors import ClermsError, Forbidden, NotFound, Unauthenticated, UnsupportedFormat
from .reporting import TransparencyReport, export_report
from .workflow import transition_table

log = logging.getLogger(__name__)

MAX_BODY = 32 * 1024 * 1024


class _Route:
    def __init__(self, method, pattern, handler):
        self.method = method
        self.regex = re.compile("^" + pattern + "$")
        self.handler = handler


def _json_bytes(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "clerms"

    # -- plumbing ------------------------------------------------------------

    def log_message(self, format, *args):  # route through logging, not stderr
        log.debug("%s %s", self.address_string(), format % args)

    def _send(self, status: int, doc, content_type="application/json") -> None:
        body = doc if isinstance(doc, bytes) else _json_bytes(doc)
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _principal(self):
        header = self.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise Unauthenticated("missing bearer token")
        principal = self.server.config.principal_for_token(header[len("Bearer ") :].strip())
        if principal is None:
            raise Unauthenticated("unknown token")
        return principal

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        if length > MAX_BODY:
            raise UnsupportedFormat("request body too large")
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError):
            raise UnsupportedFormat("request body is not valid JSON")
        if not isinstance(doc, dict):
            raise UnsupportedFormat("request body must be a JSON object")
        return doc

    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        try:
            for route in self.server.routes:
                if route.method != method:
                    continue
                match = route.regex.match(parsed.path)
                if match:
                    route.handler(self, query, *match.groups())
                    return
            raise NotFound(f"no route {method} {parsed.path}")
        except ClermsError as exc:
            self._send(exc.http_status, exc.to_json())
        except Exception:
            log.exception("handler failed: %s %s", method, parsed.path)
            self._send(500, {"error": "InternalError", "detail": "unexpected server failure"})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    # -- authorization helper ---------------------------------------------------

    def _require(self, action: str, owner_id=None, self_owned: bool = False):
        principal = self._principal()  # authenticate before touching any resource
        if self_owned:
            owner_id = principal.principal_id  # listing your own collection
        elif callable(owner_id):
            owner_id = owner_id()
        if not authorize(principal, action, owner_id=owner_id):
            raise Forbidden(f"{principal.role} may not {action}")
        return principal

    def _request_owner(self, request_id: str) -> str:
        svc = self.server.service
        entry = svc.state.requests.get(request_id)
        if entry is None:
            raise NotFound(f"no request {request_id}")
        return entry["owner"]

    def _ticket_owner(self, ticket_id: str) -> str:
        svc = self.server.service
        ticket = svc.state.tickets.get(ticket_id)
        if ticket is None:
            raise NotFound(f"no ticket {ticket_id}")
        return self._request_owner(ticket["request_id"])

    # -- request routes -----------------------------------------------------------

    def r_submit(self, query):
        principal = self._require("request.submit")
        svc = self.server.service
        entry = svc.submit_request(principal, self._body())
        request_id = entry["request"]["request_id"]
        self._send(201, {
            "request_id": request_id,
            "ticket_id": svc.state.ticket_by_request[request_id],
            "request": svc.view_request(principal, request_id),
        })

    def r_list(self, query):
        principal = self._require("request.list", self_owned=True)
        self._send(200, {"requests": self.server.service.list_requests(principal)})

    def r_show(self, query, request_id):
        principal = self._require("request.read", owner_id=lambda: self._request_owner(request_id))
        self._send(200, self.server.service.view_request(principal, request_id))

    def r_documents(self, query, request_id):
        principal = self._require("request.receive_documents")
        entry = self.server.service.receive_documents(
            principal, request_id, self._body().get("document_ids")
        )
        self._send(200, {"state": entry["request"]["state"]["value"]})

    def r_decision(self, query, request_id):
        principal = self._require("request.decide")
        body = self._body()
        entry = self.server.service.record_decision(
            principal,
            request_id,
            body.get("decision", ""),
            body.get("rationale", ""),
            response_data_class=body.get("response_data_class", "none"),
            public_summary=body.get("public_summary", ""),
            co_signers=body.get("co_signers"),
        )
        self._send(200, {"state": entry["request"]["state"]["value"],
                         "decision": entry["decisions"][-1]})

    def r_reopen(self, query, request_id):
        principal = self._require("request.reopen")
        entry = self.server.service.reopen_evaluation(principal, request_id)
        self._send(200, {"state": entry["request"]["state"]["value"]})

    def r_escalate(self, query, request_id):
        principal = self._require("request.escalate")
        case = self.server.service.escalate(
            principal, request_id, override=bool(self._body().get("override"))
        )
        self._send(201, case)

    def r_provisional(self, query, request_id):
        principal = self._require("request.provisional")
        self._send(200, self.server.service.apply_provisional_measures(principal, request_id))

    def r_extend(self, query, request_id):
        principal = self._require("request.extend_preservation")
        self._send(200, self.server.service.extend_preservation(principal, request_id))

    def r_action(self, query, request_id):
        principal = self._require("request.apply_action")
        entry = self.server.service.apply_action(
            principal, request_id, self._body().get("summary", "")
        )
        self._send(200, {"state": entry["request"]["state"]["value"]})

    def r_response(self, query, request_id):
        principal = self._require("request.respond")
        response = self.server.service.issue_response(
            principal, request_id, body=self._body().get("body", "")
        )
        self._send(200, response)

    def r_acknowledge(self, query, request_id):
        principal = self._require("request.acknowledge", owner_id=lambda: self._request_owner(request_id))
        entry = self.server.service.acknowledge_response(principal, request_id)
        self._send(200, {"state": entry["request"]["state"]["value"]})

    # -- tickets ----------------------------------------------------------------

    def r_ticket(self, query, ticket_id):
        self._require("ticket.read", owner_id=lambda: self._ticket_owner(ticket_id))
        self._send(200, self.server.service.state.tickets[ticket_id])

    def r_ticket_messages(self, query, ticket_id):
        self._require("ticket.read", owner_id=lambda: self._ticket_owner(ticket_id))
        self._send(200, {"messages": self.server.service.state.tickets[ticket_id]["messages"]})

    def r_ticket_post(self, query, ticket_id):
        principal = self._require("ticket.message", owner_id=lambda: self._ticket_owner(ticket_id))
        body = self._body().get("body", "")
        if not body.strip():
            raise UnsupportedFormat("message body must be non-empty")
        ticket = self.server.service.add_ticket_message(principal, ticket_id, body)
        self._send(201, {"messages": ticket["messages"]})

    # -- documents ----------------------------------------------------------------

    def r_document_upload(self, query):
        principal = self._require("document.upload")
        body = self._body()
        try:
            content = base64.b64decode(body.get("content_b64", ""), validate=True)
        except (binascii.Error, ValueError):
            raise UnsupportedFormat("content_b64 is not valid base64")
        if not content:
            raise UnsupportedFormat("document is empty")
        document = self.server.service.upload_document(
            principal, content, body.get("filename", "")
        )
        self._send(201, document)

    # -- cases ----------------------------------------------------------------------

    def r_case(self, query, case_id):
        self._require("case.read")
        svc = self.server.service
        case = svc.state.cases.get(case_id)
        if case is None:
            raise NotFound(f"no case {case_id}")
        self._send(200, case)

    def r_case_evidence(self, query, case_id):
        principal = self._require("case.link_evidence")
        case = self.server.service.link_evidence(
            principal, case_id, self._body().get("evidence_id", "")
        )
        self._send(200, {"evidence_ids": case["evidence_ids"]})

    def r_case_reports(self, query, case_id):
        principal = self._require("case.add_report")
        body = self._body()
        case = self.server.service.add_report(
            principal, case_id, body.get("doc_id", ""), body.get("kind", "")
        )
        self._send(201, {"documents": case["documents"]})

    def r_case_tasks(self, query, case_id):
        principal = self._require("case.assign_task")
        body = self._body()
        task = self.server.service.assign_task(
            principal, case_id, body.get("description", ""), body.get("assignee_role", ""),
            due=body.get("due"),
        )
        self._send(201, task)

    def r_case_task_update(self, query, case_id, task_id):
        principal = self._require("case.update_task")
        task = self.server.service.update_task(
            principal, case_id, task_id, self._body().get("status", "")
        )
        self._send(200, task)

    def r_case_close(self, query, case_id):
        principal = self._require("case.close")
        case = self.server.service.close_case(principal, case_id)
        self._send(200, {"status": case["status"], "closed_at": case["closed_at"]})

    def r_case_export(self, query, case_id):
        principal = self._require("case.export")
        out = self.server.service.export_case(
            principal, case_id, self._body().get("recipient", "")
        )
        self._send(200, out)

    # -- evidence ---------------------------------------------------------------------

    def r_evidence_verify(self, query, evidence_id):
        self._require("evidence.verify")
        check = self.server.service.store.verify_chain(evidence_id)
        self._send(200, check.to_json())

    def r_evidence_destroy(self, query, evidence_id):
        principal = self._require("evidence.destroy")
        body = self._body()
        record = self.server.service.destroy_evidence(
            principal, evidence_id, body.get("second_authorizer", ""), body.get("reason", "")
        )
        self._send(200, record)

    # -- reporting --------------------------------------------------------------------

    def r_transparency(self, query):
        principal = self._require("report.transparency")
        report = self.server.service.generate_report(
            principal, query.get("from", ""), query.get("to", "")
        )
        if query.get("format") == "csv":
            data = export_report(TransparencyReport.from_json(report), "csv")
            self._send(200, data, content_type="text/csv; charset=utf-8")
        else:
            self._send(200, report)

    def r_invoice_create(self, query):
        principal = self._require("invoice.create")
        self._send(201, self.server.service.create_invoice(principal, self._body()))

    def r_invoice_show(self, query, invoice_id):
        self._require("invoice.read")
        invoice = self.server.service.state.invoices.get(invoice_id)
        if invoice is None:
            raise NotFound(f"no invoice {invoice_id}")
        self._send(200, invoice)

    # -- agents / flows / logs -----------------------------------------------------------

    def r_agents(self, query):
        self._require("agents.read")
        agents = sorted(
            self.server.service.state.agents.values(), key=lambda a: a["agent_id"]
        )
        self._send(200, {"agents": agents})

    def r_flow_launch(self, query):
        principal = self._require("flow.launch")
        body = self._body()
        flow = self.server.service.launch_flow(
            principal,
            body.get("agent_id", ""),
            body.get("kind", ""),
            body.get("case_id", ""),
            glob=body.get("glob"),
            action=body.get("action"),
            device=body.get("device"),
        )
        self._send(201, flow)

    def r_flow_show(self, query, flow_id):
        self._require("flow.read")
        flow = self.server.service.state.flows.get(flow_id)
        if flow is None:
            raise NotFound(f"no flow {flow_id}")
        self._send(200, flow)

    def r_logs_query(self, query):
        self._require("logs.query")
        time_range = None
        if "from" in query or "to" in query:
            time_range = (query.get("from", ""), query.get("to", ""))
        records = self.server.service.query_logs(
            client_ip=query.get("client_ip"),
            time_range=time_range,
            substring=query.get("substring"),
        )
        self._send(200, {"records": records})

    # -- meta ------------------------------------------------------------------------------

    def r_transitions(self, query):
        self._require("workflow.read")
        self._send(200, {"transitions": transition_table()})

    def r_schema(self, query):
        self._require("schema.read")
        self._send(200, submission_schema())

    def r_notifications(self, query):
        self._require("notification.read")
        self._send(200, {"notifications": self.server.service.state.notifications})


_UUID = r"([0-9a-fA-F-]{8,64})"

ROUTES = [
    _Route("POST", r"/api/v1/requests", ApiHandler.r_submit),
    _Route("GET", r"/api/v1/requests", ApiHandler.r_list),
    _Route("GET", rf"/api/v1/requests/{_UUID}", ApiHandler.r_show),
    _Route("POST", rf"/api/v1/requests/{_UUID}/documents", ApiHandler.r_documents),
    _Route("POST", rf"/api/v1/requests/{_UUID}/decision", ApiHandler.r_decision),
    _Route("POST", rf"/api/v1/requests/{_UUID}/reopen", ApiHandler.r_reopen),
    _Route("POST", rf"/api/v1/requests/{_UUID}/escalate", ApiHandler.r_escalate),
    _Route("POST", rf"/api/v1/requests/{_UUID}/provisional", ApiHandler.r_provisional),
    _Route("POST", rf"/api/v1/requests/{_UUID}/provisional/extend", ApiHandler.r_extend),
    _Route("POST", rf"/api/v1/requests/{_UUID}/action", ApiHandler.r_action),
    _Route("POST", rf"/api/v1/requests/{_UUID}/response", ApiHandler.r_response),
    _Route("POST", rf"/api/v1/requests/{_UUID}/acknowledge", ApiHandler.r_acknowledge),
    _Route("GET", rf"/api/v1/tickets/{_UUID}", ApiHandler.r_ticket),
    _Route("GET", rf"/api/v1/tickets/{_UUID}/messages", ApiHandler.r_ticket_messages),
    _Route("POST", rf"/api/v1/tickets/{_UUID}/messages", ApiHandler.r_ticket_post),
    _Route("POST", r"/api/v1/documents", ApiHandler.r_document_upload),
    _Route("GET", rf"/api/v1/cases/{_UUID}", ApiHandler.r_case),
    _Route("POST", rf"/api/v1/cases/{_UUID}/evidence", ApiHandler.r_case_evidence),
    _Route("POST", rf"/api/v1/cases/{_UUID}/reports", ApiHandler.r_case_reports),
    _Route("POST", rf"/api/v1/cases/{_UUID}/tasks", ApiHandler.r_case_tasks),
    _Route("POST", rf"/api/v1/cases/{_UUID}/tasks/{_UUID}", ApiHandler.r_case_task_update),
    _Route("POST", rf"/api/v1/cases/{_UUID}/close", ApiHandler.r_case_close),
    _Route("POST", rf"/api/v1/cases/{_UUID}/export", ApiHandler.r_case_export),
    _Route("GET", rf"/api/v1/evidence/{_UUID}/verify", ApiHandler.r_evidence_verify),
    _Route("POST", rf"/api/v1/evidence/{_UUID}/destroy", ApiHandler.r_evidence_destroy),
    _Route("GET", r"/api/v1/reports/transparency", ApiHandler.r_transparency),
    _Route("POST", r"/api/v1/invoices", ApiHandler.r_invoice_create),
    _Route("GET", rf"/api/v1/invoices/{_UUID}", ApiHandler.r_invoice_show),
    _Route("GET", r"/api/v1/agents", ApiHandler.r_agents),
    _Route("POST", r"/api/v1/flows", ApiHandler.r_flow_launch),
    _Route("GET", rf"/api/v1/flows/{_UUID}", ApiHandler.r_flow_show),
    _Route("GET", r"/api/v1/logs/query", ApiHandler.r_logs_query),
    _Route("GET", r"/api/v1/workflow/transitions", ApiHandler.r_transitions),
    _Route("GET", r"/api/v1/schema/submission", ApiHandler.r_schema),
    _Route("GET", r"/api/v1/notifications", ApiHandler.r_notifications),
]


class ApiServer(ThreadingHTTPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, service, config):
        super().__init__(address, ApiHandler)
        self.service = service
        self.config = config
        self.routes = ROUTES

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_api_server(service, config, host: str = "127.0.0.1", port: int = 0) -> ApiServer:
    """Serve the JSON API on a background thread; port 0 picks a free one."""
    server = ApiServer((host, port), service, config)
    thread = threading.Thread(target=server.serve_forever, name="http-api", daemon=True)
    thread.start()
    return server

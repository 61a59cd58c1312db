"""In-memory service state and the event appliers.

Appliers are deterministic functions of (state, payload): commands put every
generated value — ids, timestamps, delivery outcomes — into the payload
before committing, so replaying the log rebuilds bit-identical state. The
state digest is the SHA-256 of the canonical JSON of everything here plus
the log-index fingerprint.
"""

from __future__ import annotations

from typing import Optional

from . import canonical


class ServiceState:
    def __init__(self):
        self.requests: dict = {}          # request_id -> entry (see request_submitted)
        self.tickets: dict = {}           # ticket_id -> ticket json
        self.ticket_by_request: dict = {}
        self.notifications: list = []
        self.cases: dict = {}             # case_id -> case json
        self.case_by_request: dict = {}
        self.agents: dict = {}            # agent_id -> agent json
        self.flows: dict = {}             # flow_id -> flow json
        self.flow_queues: dict = {}       # agent_id -> [flow_id] pending delivery
        self.evidence: dict = {}          # evidence_id -> item json (+ destroyed flag)
        self.documents: dict = {}         # doc_id -> document json
        self.invoices: dict = {}
        self.reports: dict = {}
        self.latest_report_id: Optional[str] = None
        self.manifests: dict = {}

    def to_json(self) -> dict:
        return {
            "requests": self.requests,
            "tickets": self.tickets,
            "ticket_by_request": self.ticket_by_request,
            "notifications": self.notifications,
            "cases": self.cases,
            "case_by_request": self.case_by_request,
            "agents": self.agents,
            "flows": self.flows,
            "flow_queues": self.flow_queues,
            "evidence": self.evidence,
            "documents": self.documents,
            "invoices": self.invoices,
            "reports": self.reports,
            "latest_report_id": self.latest_report_id,
            "manifests": self.manifests,
        }

    def digest(self, log_index=None) -> str:
        doc = self.to_json()
        doc["log_keys"] = log_index.record_keys() if log_index is not None else []
        return canonical.digest_of(doc)


# ---- appliers ---------------------------------------------------------------


def _set_request_state(entry: dict, new_state: str) -> None:
    entry["request"]["state"]["value"] = new_state
    entry["history"].append(new_state)


def _ticket_message(state: ServiceState, ticket_id: str, message: dict) -> None:
    state.tickets[ticket_id]["messages"].append(message)


def _apply_request_submitted(state: ServiceState, p: dict) -> None:
    request_id = p["entry"]["request"]["request_id"]
    state.requests[request_id] = p["entry"]
    ticket = p["ticket"]
    state.tickets[ticket["ticket_id"]] = ticket
    state.ticket_by_request[request_id] = ticket["ticket_id"]
    state.notifications.append(p["notification"])


def _apply_documents_received(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    for doc_id in p["document_ids"]:
        if doc_id not in entry["documents"]:
            entry["documents"].append(doc_id)
    _set_request_state(entry, "DocumentsReceived")
    ticket_id = state.ticket_by_request[p["request_id"]]
    state.tickets[ticket_id]["status"] = "open"
    _ticket_message(
        state,
        ticket_id,
        {
            "author": "system",
            "body": f"supporting documents formally received ({len(p['document_ids'])})",
            "timestamp": p["at"],
            "system": True,
        },
    )


def _apply_provisional_applied(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    entry["provisional"] = p["order"]
    entry["request"]["state"]["provisional_active"] = True
    state.notifications.append(p["notification"])


def _apply_preservation_extended(state: ServiceState, p: dict) -> None:
    order = state.requests[p["request_id"]]["provisional"]
    order["deadline"] = p["deadline"]
    order["extended"] = True


def _apply_decision_recorded(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    entry["decisions"].append(p["decision"])
    _set_request_state(entry, p["new_state"])
    _ticket_message(state, state.ticket_by_request[p["request_id"]], p["ticket_message"])


def _apply_evaluation_reopened(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    _set_request_state(entry, "UnderEvaluation")
    _ticket_message(
        state,
        state.ticket_by_request[p["request_id"]],
        {
            "author": "system",
            "body": "challenge returned for re-evaluation",
            "timestamp": p["at"],
            "system": True,
        },
    )


def _apply_request_escalated(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    _set_request_state(entry, "Escalated")
    entry["case_id"] = p["case"]["case_id"]
    entry["override"] = p.get("override", False) or entry.get("override", False)
    state.cases[p["case"]["case_id"]] = p["case"]
    state.case_by_request[p["request_id"]] = p["case"]["case_id"]


def _apply_action_applied(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    _set_request_state(entry, "ActionApplied")
    entry["action_summary"] = p["summary"]


def _apply_response_issued(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    entry["response"] = p["response"]
    _set_request_state(entry, "ResponseIssued")
    entry["request"]["state"]["provisional_active"] = False
    ticket_id = state.ticket_by_request[p["request_id"]]
    state.tickets[ticket_id]["status"] = "pending_requester"
    _ticket_message(state, ticket_id, p["ticket_message"])


def _apply_request_closed(state: ServiceState, p: dict) -> None:
    entry = state.requests[p["request_id"]]
    _set_request_state(entry, "Closed")
    entry["closed"] = {"at": p["at"], "by": p.get("by"), "cause": p["cause"]}
    ticket_id = state.ticket_by_request[p["request_id"]]
    state.tickets[ticket_id]["status"] = "resolved"
    _ticket_message(
        state,
        ticket_id,
        {
            "author": "system",
            "body": f"request closed ({p['cause']})",
            "timestamp": p["at"],
            "system": True,
        },
    )


def _append_audit(case: dict, actor: str, action: str, at: str, details: str = "") -> None:
    case["audit"].append(
        {
            "seq": len(case["audit"]),
            "case_id": case["case_id"],
            "actor": actor,
            "action": action,
            "timestamp": at,
            "details": details,
        }
    )


def _apply_evidence_registered(state: ServiceState, p: dict) -> None:
    item = p["item"]
    state.evidence[item["evidence_id"]] = dict(item, destroyed=False)


def _apply_evidence_linked(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    if p["evidence_id"] not in case["evidence_ids"]:
        case["evidence_ids"].append(p["evidence_id"])
    _append_audit(
        case, p["actor"], "evidence_linked", p["at"],
        f"{p['evidence_id']} head {p['custody_head']}",
    )


def _apply_report_added(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    case["documents"].append(p["document"])
    _append_audit(case, p["actor"], "document_attached", p["at"], p["document"]["kind"])
    if p.get("ticket_message") is not None:
        ticket_id = state.ticket_by_request[case["request_id"]]
        _ticket_message(state, ticket_id, p["ticket_message"])


def _apply_task_assigned(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    case["assignments"].append(p["task"])
    _append_audit(case, p["actor"], "task_assigned", p["at"], p["task"]["description"])


def _apply_task_updated(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    for task in case["assignments"]:
        if task["task_id"] == p["task_id"]:
            task["status"] = p["status"]
            break
    _append_audit(case, p["actor"], f"task_{p['status']}", p["at"], p["task_id"])


def _apply_case_closed(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    case["status"] = "closed"
    case["closed_at"] = p["at"]
    _append_audit(
        case, p["actor"], "case_closed", p["at"],
        "chain heads " + ",".join(p["chain_heads"]),
    )


def _apply_case_exported(state: ServiceState, p: dict) -> None:
    case = state.cases[p["case_id"]]
    manifest = p["manifest"]
    state.manifests[manifest["manifest_id"]] = manifest
    _append_audit(case, p["actor"], "transport_exported", p["at"], manifest["manifest_id"])


def _apply_agent_registered(state: ServiceState, p: dict) -> None:
    agent = p["agent"]
    state.agents[agent["agent_id"]] = agent
    state.flow_queues.setdefault(agent["agent_id"], [])


def _apply_agent_seen(state: ServiceState, p: dict) -> None:
    agent = state.agents[p["agent_id"]]
    agent["last_seen"] = max(agent["last_seen"], p["at"])


def _apply_flow_launched(state: ServiceState, p: dict) -> None:
    flow = p["flow"]
    state.flows[flow["flow_id"]] = flow
    state.flow_queues.setdefault(flow["agent_id"], []).append(flow["flow_id"])


def _apply_flows_delivered(state: ServiceState, p: dict) -> None:
    queue = state.flow_queues.get(p["agent_id"], [])
    for flow_id in p["flow_ids"]:
        state.flows[flow_id]["status"] = "running"
        if flow_id in queue:
            queue.remove(flow_id)


def _apply_flow_completed(state: ServiceState, p: dict) -> None:
    flow = state.flows[p["flow_id"]]
    flow["status"] = p["status"]
    flow["items"] = p["items"]
    flow["error"] = p.get("error")
    flow["completed_at"] = p["completed_at"]


def _apply_logs_ingested(state: ServiceState, p: dict, log_index=None) -> None:
    if log_index is not None and p["records"]:
        log_index.ingest(p["records"])  # idempotent: dedup keys absorb replays


def _apply_document_uploaded(state: ServiceState, p: dict) -> None:
    document = p["document"]
    state.documents[document["doc_id"]] = document


def _apply_invoice_created(state: ServiceState, p: dict) -> None:
    state.invoices[p["invoice"]["invoice_id"]] = p["invoice"]


def _apply_report_generated(state: ServiceState, p: dict) -> None:
    report = p["report"]
    state.reports[report["report_id"]] = report
    state.latest_report_id = report["report_id"]


def _apply_evidence_destroyed(state: ServiceState, p: dict) -> None:
    entry = state.evidence.get(p["evidence_id"])
    if entry is not None:
        entry["destroyed"] = True
        entry["destruction"] = p["record"]


def _apply_ticket_message_added(state: ServiceState, p: dict) -> None:
    _ticket_message(state, p["ticket_id"], p["message"])
    if p.get("status") is not None:
        state.tickets[p["ticket_id"]]["status"] = p["status"]


def _apply_notification_created(state: ServiceState, p: dict) -> None:
    state.notifications.append(p["notification"])


_APPLIERS = {
    "request_submitted": _apply_request_submitted,
    "documents_received": _apply_documents_received,
    "provisional_applied": _apply_provisional_applied,
    "preservation_extended": _apply_preservation_extended,
    "decision_recorded": _apply_decision_recorded,
    "evaluation_reopened": _apply_evaluation_reopened,
    "request_escalated": _apply_request_escalated,
    "action_applied": _apply_action_applied,
    "response_issued": _apply_response_issued,
    "request_closed": _apply_request_closed,
    "evidence_registered": _apply_evidence_registered,
    "evidence_linked": _apply_evidence_linked,
    "report_added": _apply_report_added,
    "task_assigned": _apply_task_assigned,
    "task_updated": _apply_task_updated,
    "case_closed": _apply_case_closed,
    "case_exported": _apply_case_exported,
    "agent_registered": _apply_agent_registered,
    "agent_seen": _apply_agent_seen,
    "flow_launched": _apply_flow_launched,
    "flows_delivered": _apply_flows_delivered,
    "flow_completed": _apply_flow_completed,
    "logs_ingested": _apply_logs_ingested,
    "document_uploaded": _apply_document_uploaded,
    "invoice_created": _apply_invoice_created,
    "report_generated": _apply_report_generated,
    "evidence_destroyed": _apply_evidence_destroyed,
    "ticket_message_added": _apply_ticket_message_added,
    "notification_created": _apply_notification_created,
}

EVENT_TYPES = tuple(sorted(_APPLIERS))


def apply_event(state: ServiceState, event_type: str, payload: dict, log_index=None) -> None:
    applier = _APPLIERS[event_type]
    if event_type == "logs_ingested":
        applier(state, payload, log_index)
    else:
        applier(state, payload)

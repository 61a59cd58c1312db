"""The service: command handlers over the event-sourced state.

Every state change validates against current state, builds a payload
containing all generated values, appends it to the event log, and applies
it through the pure appliers in ``state.py``. Disk-side effects (evidence
blobs, custody chains, transport archives, the log index) are performed by
commands only — replay never re-executes them.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path
from typing import Optional

from . import canonical
from .auth import ROLES, Principal
from .cases import DOCUMENT_KINDS, TERMINAL_TASK_STATUSES
from .costs import invoice_from_document
from .custody import EvidenceStore
from .domain import (
    LERequest,
    classify_priority,
    validate_submission,
)
from .errors import (
    CaseClosed,
    ChainBroken,
    DuplicateCase,
    DuplicateRequest,
    Forbidden,
    InvalidState,
    MissingForensicReport,
    NotEligible,
    NotFound,
    OpenTasks,
    UnknownAgent,
    UnknownDocument,
    UnknownRecipient,
    UnknownRequest,
    UnsupportedFormat,
)
from .events import EventLog, SnapshotStore
from .logsindex import LogIndex
from .notify import LogOnlySender, Notification, deliver
from .reporting import generate_transparency_report
from .state import ServiceState, apply_event
from .workflow import (
    CERTIFICATE_TEMPLATE,
    EvaluationDecision,
    PreservationOrder,
    StateValue,
    allowed_transitions,
    classify_response,
    provisional_eligible,
)

AGENT_OS_VALUES = ("linux", "windows", "other")
FLOW_KINDS = ("FileFinder", "ProcessList", "DiskImage")
FILE_ACTIONS = ("stat", "hash", "fetch")


class ClermsService:
    def __init__(
        self,
        data_dir,
        preservation_delay_days: int = 90,
        ack_timeout_days: int = 30,
        snapshot_every: int = 0,
        sender=None,
        principals: Optional[dict] = None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.preservation_delay_days = preservation_delay_days
        self.ack_timeout_days = ack_timeout_days
        self.snapshot_every = snapshot_every
        self.sender = sender or LogOnlySender()
        self.principals = dict(principals or {})  # principal_id -> Principal

        self.store = EvidenceStore(self.data_dir)
        self.log_index = LogIndex(self.data_dir / "logsindex")
        self.log = EventLog(self.data_dir / "events.jsonl")
        self.snapshots = SnapshotStore(self.data_dir / "snapshots")
        self.state = ServiceState()
        self.corrupt = None
        self.read_only = False
        self._lock = threading.RLock()
        self._replay()

    # ---- persistence ------------------------------------------------------

    def _replay(self) -> None:
        start_seq = 0
        snapshot = self.snapshots.latest() if self.snapshot_every else None
        if snapshot is not None:
            start_seq, state_doc = snapshot
            self.state = _state_from_json(state_doc)
        try:
            for record in self.log.scan():
                if record.seq < start_seq:
                    continue
                apply_event(self.state, record.event_type, record.payload, self.log_index)
        except Exception as exc:  # CorruptLog — keep the intact prefix
            from .errors import CorruptLog

            if not isinstance(exc, CorruptLog):
                raise
            self.corrupt = exc
            self.read_only = True

    def _commit(self, event_type: str, payload: dict) -> None:
        self._commit_many([(event_type, payload)])

    def _commit_many(self, events: list) -> None:
        if self.read_only:
            raise self.corrupt
        self.log.append_many(events)
        for event_type, payload in events:
            apply_event(self.state, event_type, payload, self.log_index)
        if self.snapshot_every and self.log.next_seq % self.snapshot_every == 0:
            self.snapshots.save(self.log.next_seq, self.state.to_json())

    def state_digest(self) -> str:
        return self.state.digest(self.log_index)

    # ---- helpers ----------------------------------------------------------

    @staticmethod
    def _now() -> str:
        return canonical.format_ts(canonical.utc_now())

    def _entry(self, request_id: str) -> dict:
        entry = self.state.requests.get(request_id)
        if entry is None:
            raise UnknownRequest(f"no request {request_id}")
        return entry

    def _case(self, case_id: str) -> dict:
        case = self.state.cases.get(case_id)
        if case is None:
            raise NotFound(f"no case {case_id}")
        return case

    def _open_case(self, case_id: str) -> dict:
        case = self._case(case_id)
        if case["status"] != "open":
            raise CaseClosed(f"case {case_id} is closed")
        return case

    def _request_value(self, entry: dict) -> str:
        return entry["request"]["state"]["value"]

    def _check_transition(self, entry: dict, successor: str) -> None:
        current = self._request_value(entry)
        allowed = allowed_transitions(
            current,
            entry["request"]["objective"],
            history=entry["history"],
            override=entry.get("override", False),
        )
        if successor not in allowed:
            raise InvalidState(f"cannot move {current} -> {successor}")

    def _notification(self, recipient: str, subject: str, body: str, at: str) -> dict:
        if recipient not in ROLES and recipient not in self.principals:
            raise UnknownRecipient(f"no role or principal {recipient!r}")
        notification = Notification(
            notification_id=str(uuid.uuid4()),
            recipient=recipient,
            subject=subject,
            body=body,
            created_at=at,
        )
        return deliver(notification, self.sender).to_json()

    def _document_exists(self, doc_id: str) -> bool:
        return doc_id in self.state.documents or self.store.exists(doc_id)

    # ---- documents --------------------------------------------------------

    def upload_document(self, principal: Principal, content: bytes, filename: str = "") -> dict:
        with self._lock:
            at = self._now()
            item = self.store.store(
                content,
                format="document",
                source={"kind": "upload", "uploader": principal.principal_id},
                actor=principal.principal_id,
                created_at=at,
            )
            existing = self.state.documents.get(item.evidence_id)
            if existing is not None:
                return existing
            document = {
                "doc_id": item.evidence_id,
                "size_bytes": item.size_bytes,
                "uploaded_by": principal.principal_id,
                "uploaded_at": at,
                "filename": filename,
            }
            self._commit("document_uploaded", {"document": document, "at": at})
            return document

    # ---- request lifecycle -------------------------------------------------

    def submit_request(self, principal: Principal, raw_fields: dict) -> dict:
        with self._lock:
            request = validate_submission(raw_fields)
            if request.request_id in self.state.requests:
                raise DuplicateRequest(f"request {request.request_id} already submitted")
            for instrument in request.instruments:
                for ref in instrument.document_refs:
                    if not self._document_exists(ref):
                        raise UnknownDocument(f"document {ref} was never uploaded")
            at = self._now()
            request.submitted_at = raw_fields.get("submitted_at") or at
            request.state.value = StateValue.AWAITING_DOCUMENTS.value
            priority = classify_priority(request)
            entry = {
                "request": request.to_json(),
                "owner": principal.principal_id,
                "priority": priority,
                "history": [StateValue.PRE_SUBMITTED.value, StateValue.AWAITING_DOCUMENTS.value],
                "decisions": [],
                "provisional": None,
                "override": False,
                "case_id": None,
                "response": None,
                "documents": [],
                "action_summary": None,
            }
            ticket = {
                "ticket_id": str(uuid.uuid4()),
                "request_id": request.request_id,
                "priority": priority,
                "status": "pending_requester",
                "messages": [
                    {
                        "author": "system",
                        "body": "request registered; awaiting formal receipt of supporting documents",
                        "timestamp": at,
                        "system": True,
                    }
                ],
            }
            notification = self._notification(
                "crisis_manager",
                f"new {priority} request",
                f"request {request.request_id} submitted by {principal.principal_id}",
                at,
            )
            self._commit(
                "request_submitted",
                {"entry": entry, "ticket": ticket, "notification": notification, "at": at},
            )
            return self.state.requests[request.request_id]

    def receive_documents(
        self, principal: Principal, request_id: str, document_ids: Optional[list] = None
    ) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            self._check_transition(entry, StateValue.DOCUMENTS_RECEIVED.value)
            if document_ids is None:
                document_ids = [
                    ref
                    for instrument in entry["request"]["instruments"]
                    for ref in instrument["document_refs"]
                ]
            for doc_id in document_ids:
                if not self._document_exists(doc_id):
                    raise UnknownDocument(f"document {doc_id} was never uploaded")
            self._commit(
                "documents_received",
                {"request_id": request_id, "document_ids": document_ids, "at": self._now()},
            )
            return entry

    def apply_provisional_measures(self, principal: Principal, request_id: str) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            request = entry["request"]
            if not provisional_eligible(request["regime"], request["objective"]):
                raise NotEligible(
                    "provisional measures apply to emergency or preservation requests only"
                )
            if self._request_value(entry) in (
                StateValue.RESPONSE_ISSUED.value,
                StateValue.CLOSED.value,
            ):
                raise InvalidState("request already answered")
            if entry["provisional"] is not None:
                return entry["provisional"]  # idempotent: the order stands
            at = self._now()
            order = PreservationOrder.issue(request_id, at, self.preservation_delay_days)
            notification = self._notification(
                "crisis_manager",
                "provisional measures applied",
                f"preservation order for request {request_id} until {order.deadline}",
                at,
            )
            self._commit(
                "provisional_applied",
                {
                    "request_id": request_id,
                    "order": order.to_json(),
                    "notification": notification,
                    "at": at,
                },
            )
            return self.state.requests[request_id]["provisional"]

    def extend_preservation(self, principal: Principal, request_id: str) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            order = entry["provisional"]
            if order is None:
                raise InvalidState("no preservation order to extend")
            if order["extended"]:
                raise InvalidState("preservation order already extended once")
            deadline = canonical.ts_add_days(order["deadline"], self.preservation_delay_days)
            self._commit(
                "preservation_extended",
                {"request_id": request_id, "deadline": deadline, "at": self._now()},
            )
            return self.state.requests[request_id]["provisional"]

    def record_decision(
        self,
        principal: Principal,
        request_id: str,
        decision: str,
        rationale: str,
        response_data_class: str = "none",
        public_summary: str = "",
        co_signers: Optional[list] = None,
    ) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            if decision not in EvaluationDecision.DECISIONS:
                raise UnsupportedFormat(f"unknown decision {decision!r}")
            if response_data_class not in EvaluationDecision.DATA_CLASSES:
                raise UnsupportedFormat(f"unknown data class {response_data_class!r}")
            new_state = {
                "approve": StateValue.APPROVED.value,
                "reject": StateValue.REJECTED.value,
                "challenge": StateValue.CHALLENGED.value,
            }[decision]
            self._check_transition(entry, new_state)
            request = entry["request"]
            if (
                decision == "approve"
                and request["objective"] == "disclosure"
                and response_data_class not in ("content", "non_content")
            ):
                raise InvalidState("approved disclosure requires a content/non_content data class")
            if decision != "approve":
                response_data_class = "none"
            at = self._now()
            decided_by = [{"principal_id": principal.principal_id, "role": principal.role}]
            decided_by.extend(co_signers or [])
            record = EvaluationDecision(
                decision=decision,
                rationale=rationale,
                decided_by=decided_by,
                decided_at=at,
                response_data_class=response_data_class,
            )
            record.require_crisis_manager()
            payload_decision = record.to_json()
            payload_decision["public_summary"] = public_summary
            self._commit(
                "decision_recorded",
                {
                    "request_id": request_id,
                    "decision": payload_decision,
                    "new_state": new_state,
                    "ticket_message": {
                        "author": "system",
                        "body": f"evaluation decision: {decision}"
                        + (f" — {public_summary}" if public_summary else ""),
                        "timestamp": at,
                        "system": True,
                    },
                },
            )
            return self.state.requests[request_id]

    def reopen_evaluation(self, principal: Principal, request_id: str) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            self._check_transition(entry, StateValue.UNDER_EVALUATION.value)
            self._commit("evaluation_reopened", {"request_id": request_id, "at": self._now()})
            return self.state.requests[request_id]

    def escalate(self, principal: Principal, request_id: str, override: bool = False) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            if entry["case_id"] is not None:
                raise DuplicateCase(f"request {request_id} already has a case")
            current = self._request_value(entry)
            allowed = allowed_transitions(
                current,
                entry["request"]["objective"],
                history=entry["history"],
                override=override or entry.get("override", False),
            )
            if StateValue.ESCALATED.value not in allowed:
                raise InvalidState(f"cannot escalate a request in state {current}")
            at = self._now()
            case = {
                "case_id": str(uuid.uuid4()),
                "request_id": request_id,
                "opened_at": at,
                "status": "open",
                "participants": [
                    {"principal": principal.principal_id, "role": principal.role}
                ],
                "evidence_ids": [],
                "documents": [],
                "assignments": [],
                "audit": [
                    {
                        "seq": 0,
                        "case_id": None,  # filled below once the id is known
                        "actor": principal.principal_id,
                        "action": "case_opened",
                        "timestamp": at,
                        "details": f"escalated from request {request_id}",
                    }
                ],
                "closed_at": None,
            }
            case["audit"][0]["case_id"] = case["case_id"]
            self._commit(
                "request_escalated",
                {"request_id": request_id, "case": case, "override": override, "at": at},
            )
            return self.state.cases[case["case_id"]]

    def apply_action(self, principal: Principal, request_id: str, summary: str) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            self._check_transition(entry, StateValue.ACTION_APPLIED.value)
            self._commit(
                "action_applied",
                {"request_id": request_id, "summary": summary, "at": self._now()},
            )
            return self.state.requests[request_id]

    def issue_response(self, principal: Principal, request_id: str, body: str = "") -> dict:
        with self._lock:
            entry = self._entry(request_id)
            state_before = self._request_value(entry)
            self._check_transition(entry, StateValue.RESPONSE_ISSUED.value)
            request = entry["request"]
            data_class = "none"
            for decision in entry["decisions"]:
                if decision["decision"] == "approve":
                    data_class = decision["response_data_class"]
            kind, data_class = classify_response(state_before, request["objective"], data_class)
            if kind == "certificate":
                body = CERTIFICATE_TEMPLATE
            at = self._now()
            response = {
                "response_id": str(uuid.uuid4()),
                "kind": kind,
                "data_class": data_class,
                "body": body,
                "issued_at": at,
            }
            self._commit(
                "response_issued",
                {
                    "request_id": request_id,
                    "response": response,
                    "ticket_message": {
                        "author": "system",
                        "body": f"formal response issued ({kind})",
                        "timestamp": at,
                        "system": True,
                    },
                    "at": at,
                },
            )
            return self.state.requests[request_id]["response"]

    def acknowledge_response(self, principal: Principal, request_id: str) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            self._check_transition(entry, StateValue.CLOSED.value)
            self._commit(
                "request_closed",
                {
                    "request_id": request_id,
                    "at": self._now(),
                    "by": principal.principal_id,
                    "cause": "acknowledged",
                },
            )
            return self.state.requests[request_id]

    def timeout_response(self, principal: Principal, request_id: str, now: Optional[str] = None) -> dict:
        with self._lock:
            entry = self._entry(request_id)
            self._check_transition(entry, StateValue.CLOSED.value)
            now = now or self._now()
            deadline = canonical.ts_add_days(
                entry["response"]["issued_at"], self.ack_timeout_days
            )
            if now < deadline:
                raise InvalidState(f"acknowledgment window open until {deadline}")
            self._commit(
                "request_closed",
                {"request_id": request_id, "at": now, "by": None, "cause": "timeout"},
            )
            return self.state.requests[request_id]

    # ---- tickets -----------------------------------------------------------

    def add_ticket_message(self, principal: Principal, ticket_id: str, body: str) -> dict:
        with self._lock:
            ticket = self.state.tickets.get(ticket_id)
            if ticket is None:
                raise NotFound(f"no ticket {ticket_id}")
            message = {
                "author": principal.principal_id,
                "body": body,
                "timestamp": self._now(),
                "system": False,
            }
            self._commit(
                "ticket_message_added",
                {"ticket_id": ticket_id, "message": message, "status": None},
            )
            return self.state.tickets[ticket_id]

    # ---- cases -------------------------------------------------------------

    def link_evidence(self, principal: Principal, case_id: str, evidence_id: str) -> dict:
        with self._lock:
            case = self._open_case(case_id)
            if not self.store.exists(evidence_id):
                raise NotFound(f"no evidence {evidence_id}")
            check = self.store.verify_chain(evidence_id)
            if not check.ok:
                raise ChainBroken(check.broken_at)
            at = self._now()
            self.store.append_custody_event(
                evidence_id,
                "transferred",
                principal.principal_id,
                f"linked to case {case_id}",
                timestamp=at,
            )
            self._commit(
                "evidence_linked",
                {
                    "case_id": case_id,
                    "evidence_id": evidence_id,
                    "actor": principal.principal_id,
                    "at": at,
                    "custody_head": self.store.chain_head_hash(evidence_id),
                },
            )
            return self.state.cases[case_id]

    def add_report(self, principal: Principal, case_id: str, doc_id: str, kind: str) -> dict:
        with self._lock:
            case = self._open_case(case_id)
            if kind not in DOCUMENT_KINDS:
                raise UnsupportedFormat(f"unknown case document kind {kind!r}")
            if not self._document_exists(doc_id):
                raise UnknownDocument(f"document {doc_id} was never stored")
            at = self._now()
            document = {
                "doc_id": doc_id,
                "kind": kind,
                "uploaded_by": principal.principal_id,
                "uploaded_at": at,
            }
            ticket_message = None
            if kind == "forensic_report":
                ticket_message = {
                    "author": "system",
                    "body": "forensic examination report attached to the investigation",
                    "timestamp": at,
                    "system": True,
                }
            self._commit(
                "report_added",
                {
                    "case_id": case_id,
                    "document": document,
                    "actor": principal.principal_id,
                    "at": at,
                    "ticket_message": ticket_message,
                },
            )
            return self.state.cases[case_id]

    def assign_task(
        self,
        principal: Principal,
        case_id: str,
        description: str,
        assignee_role: str,
        due: Optional[str] = None,
    ) -> dict:
        with self._lock:
            self._open_case(case_id)
            if assignee_role not in ROLES:
                raise UnknownRecipient(f"no role {assignee_role!r}")
            at = self._now()
            task = {
                "task_id": str(uuid.uuid4()),
                "case_id": case_id,
                "description": description,
                "assignee_role": assignee_role,
                "due": due,
                "status": "open",
            }
            self._commit(
                "task_assigned",
                {"case_id": case_id, "task": task, "actor": principal.principal_id, "at": at},
            )
            return task

    def update_task(self, principal: Principal, case_id: str, task_id: str, status: str) -> dict:
        with self._lock:
            case = self._open_case(case_id)
            if status not in TERMINAL_TASK_STATUSES:
                raise UnsupportedFormat(f"task status must be done or cancelled, not {status!r}")
            task = next((t for t in case["assignments"] if t["task_id"] == task_id), None)
            if task is None:
                raise NotFound(f"no task {task_id} on case {case_id}")
            if task["status"] in TERMINAL_TASK_STATUSES:
                raise InvalidState(f"task {task_id} already {task['status']}")
            self._commit(
                "task_updated",
                {
                    "case_id": case_id,
                    "task_id": task_id,
                    "status": status,
                    "actor": principal.principal_id,
                    "at": self._now(),
                },
            )
            return next(t for t in case["assignments"] if t["task_id"] == task_id)

    def close_case(self, principal: Principal, case_id: str) -> dict:
        with self._lock:
            case = self._open_case(case_id)
            open_tasks = [t for t in case["assignments"] if t["status"] == "open"]
            if open_tasks:
                raise OpenTasks(f"{len(open_tasks)} assignment(s) still open")
            if case["evidence_ids"] and not any(
                d["kind"] == "forensic_report" for d in case["documents"]
            ):
                raise MissingForensicReport("evidence on file but no forensic report attached")
            chain_heads = []
            for evidence_id in case["evidence_ids"]:
                check = self.store.verify_chain(evidence_id)
                if not check.ok:
                    raise ChainBroken(check.broken_at)
                chain_heads.append(self.store.chain_head_hash(evidence_id))
            self._commit(
                "case_closed",
                {
                    "case_id": case_id,
                    "actor": principal.principal_id,
                    "at": self._now(),
                    "chain_heads": chain_heads,
                },
            )
            return self.state.cases[case_id]

    def export_case(self, principal: Principal, case_id: str, recipient: str) -> dict:
        with self._lock:
            case = self._case(case_id)
            manifest, archive = self.store.export_transport_package(
                case_id,
                case["evidence_ids"],
                recipient,
                principal.principal_id,
            )
            self._commit(
                "case_exported",
                {
                    "case_id": case_id,
                    "manifest": manifest.to_json(),
                    "actor": principal.principal_id,
                    "at": manifest.created_at,
                },
            )
            return {"manifest": manifest.to_json(), "archive": str(archive)}

    # ---- agents and flows ----------------------------------------------------

    def register_agent(
        self,
        hostname: str,
        os_name: str,
        labels: Optional[list] = None,
        agent_id: Optional[str] = None,
    ) -> dict:
        from .errors import MalformedHello

        with self._lock:
            if not isinstance(hostname, str) or not hostname.strip():
                raise MalformedHello("hostname must be non-empty")
            if os_name not in AGENT_OS_VALUES:
                raise MalformedHello(f"os must be one of {', '.join(AGENT_OS_VALUES)}")
            at = self._now()
            if agent_id is not None and agent_id in self.state.agents:
                agent = dict(self.state.agents[agent_id])
                agent.update(
                    hostname=hostname,
                    os=os_name,
                    labels=list(labels or agent["labels"]),
                    last_seen=max(agent["last_seen"], at),
                )
            else:
                agent = {
                    "agent_id": agent_id or str(uuid.uuid4()),
                    "hostname": hostname,
                    "os": os_name,
                    "labels": list(labels or []),
                    "last_seen": at,
                }
            self._commit("agent_registered", {"agent": agent, "at": at})
            return self.state.agents[agent["agent_id"]]

    def agent_seen(self, agent_id: str, at: Optional[str] = None) -> dict:
        with self._lock:
            agent = self.state.agents.get(agent_id)
            if agent is None:
                raise UnknownAgent(f"agent {agent_id} never registered")
            at = at or self._now()
            last = canonical.parse_ts(agent["last_seen"])
            if at > agent["last_seen"] and (canonical.parse_ts(at) - last).total_seconds() >= 1.0:
                self._commit("agent_seen", {"agent_id": agent_id, "at": at})
            return self.state.agents[agent_id]

    def launch_flow(
        self,
        principal: Principal,
        agent_id: str,
        kind: str,
        case_id: str,
        glob: Optional[str] = None,
        action: Optional[str] = None,
        device: Optional[str] = None,
    ) -> dict:
        from .domain import FieldError, SubmissionInvalid

        with self._lock:
            if principal.role == "le_agent":
                raise Forbidden("external requesters cannot run collection flows")
            if agent_id not in self.state.agents:
                raise UnknownAgent(f"agent {agent_id} never registered")
            self._open_case(case_id)
            if kind not in FLOW_KINDS:
                raise SubmissionInvalid(
                    [FieldError("InvalidFormat", "kind", f"must be one of {', '.join(FLOW_KINDS)}")]
                )
            if kind == "FileFinder":
                if not isinstance(glob, str) or not glob.strip():
                    raise SubmissionInvalid([FieldError("MissingField", "glob")])
                if action not in FILE_ACTIONS:
                    raise SubmissionInvalid(
                        [
                            FieldError(
                                "InvalidFormat",
                                "action",
                                f"must be one of {', '.join(FILE_ACTIONS)}",
                            )
                        ]
                    )
            if kind == "DiskImage" and (not isinstance(device, str) or not device.strip()):
                raise SubmissionInvalid([FieldError("MissingField", "device")])
            at = self._now()
            flow = {
                "flow_id": str(uuid.uuid4()),
                "agent_id": agent_id,
                "kind": kind,
                "glob": glob,
                "action": action,
                "device": device,
                "issued_by": principal.principal_id,
                "case_id": case_id,
                "issued_at": at,
                "status": "pending",
                "items": [],
                "error": None,
                "completed_at": None,
            }
            self._commit("flow_launched", {"flow": flow, "at": at})
            return self.state.flows[flow["flow_id"]]

    def poll_flows(self, agent_id: str) -> list:
        """Pending flows for the agent; marks them running (delivered)."""
        with self._lock:
            if agent_id not in self.state.agents:
                raise UnknownAgent(f"agent {agent_id} never registered")
            at = self._now()
            pending = list(self.state.flow_queues.get(agent_id, []))
            self.agent_seen(agent_id, at)
            if pending:
                self._commit(
                    "flows_delivered", {"agent_id": agent_id, "flow_ids": pending, "at": at}
                )
            return [self.state.flows[flow_id] for flow_id in pending]

    def complete_flow(
        self,
        flow_id: str,
        status: str,
        items: list,
        error: Optional[str] = None,
        fetched: Optional[list] = None,
    ) -> dict:
        """Record a FLOW_DONE. ``fetched`` carries (path, content, claimed_sha)
        tuples assembled from RESULT_CHUNK frames; each is stored as evidence
        and must hash to the agent's claimed sha."""
        from .errors import AgentIoError

        with self._lock:
            flow = self.state.flows.get(flow_id)
            if flow is None:
                raise NotFound(f"no flow {flow_id}")
            if flow["status"] in ("complete", "failed"):
                raise InvalidState(f"flow {flow_id} already {flow['status']}")
            at = self._now()
            if status == "complete" and flow["kind"] == "FileFinder":
                for item in items:
                    path = item.get("path", "")
                    if not path.startswith("/") or ".." in path.split("/"):
                        status, error, fetched = "failed", f"unconfined path {path!r}", None
                        items = []
                        break
            if status == "complete" and flow["kind"] == "ProcessList":
                for item in items:
                    if not isinstance(item.get("pid"), int) or item["pid"] <= 0:
                        status, error = "failed", f"bad process entry {item.get('pid')!r}"
                        items = []
                        break
            events = []
            if status == "complete" and fetched:
                by_path = {}
                for path, content, claimed_sha in fetched:
                    actual = canonical.sha256_hex(content)
                    if actual != claimed_sha:
                        raise AgentIoError(
                            f"trailer hash mismatch for {path}: {claimed_sha} != {actual}"
                        )
                    item = self.store.store(
                        content,
                        format="raw",
                        source={
                            "kind": "flow",
                            "agent_id": flow["agent_id"],
                            "path": path,
                            "flow_id": flow_id,
                        },
                        actor=flow["issued_by"],
                        created_at=at,
                    )
                    by_path[path] = item
                    events.append(
                        (
                            "evidence_registered",
                            {
                                "item": item.to_json(),
                                "custody_head": self.store.chain_head_hash(item.evidence_id),
                                "at": at,
                            },
                        )
                    )
                for item_doc in items:
                    stored = by_path.get(item_doc.get("path"))
                    if stored is not None:
                        item_doc["evidence_id"] = stored.evidence_id
            events.append(
                (
                    "flow_completed",
                    {
                        "flow_id": flow_id,
                        "status": status,
                        "items": items,
                        "error": error,
                        "completed_at": at,
                    },
                )
            )
            self._commit_many(events)
            return self.state.flows[flow_id]

    # ---- logs ---------------------------------------------------------------

    def ingest_logs(self, batch: list) -> dict:
        with self._lock:
            result = self.log_index.ingest(batch)
            if result.records:
                self._commit(
                    "logs_ingested",
                    {
                        "records": result.records,
                        "rejected": [e.to_json() for e in result.rejected],
                        "at": self._now(),
                    },
                )
            return result.to_json()

    def query_logs(self, client_ip=None, time_range=None, substring=None) -> list:
        return [
            r.to_json()
            for r in self.log_index.query(
                client_ip=client_ip, time_range=time_range, substring=substring
            )
        ]

    # ---- reporting and invoicing ----------------------------------------------

    def generate_report(self, principal: Principal, period_start: str, period_end: str) -> dict:
        with self._lock:
            entries = [
                {"request": entry["request"], "decisions": entry["decisions"]}
                for _, entry in sorted(self.state.requests.items())
            ]
            report = generate_transparency_report(
                entries,
                period_start,
                period_end,
                generated_at=self._now(),
                previous_period_ref=self.state.latest_report_id,
            )
            self._commit("report_generated", {"report": report.to_json(), "at": report.generated_at})
            return self.state.reports[report.report_id]

    def create_invoice(self, principal: Principal, document: dict) -> dict:
        with self._lock:
            case_id = document.get("case_id")
            if case_id is not None and case_id not in self.state.cases:
                raise NotFound(f"no case {case_id}")
            invoice = invoice_from_document(document)
            self._commit("invoice_created", {"invoice": invoice.to_json(), "at": self._now()})
            return self.state.invoices[invoice.invoice_id]

    # ---- evidence admin ---------------------------------------------------------

    def destroy_evidence(
        self, principal: Principal, evidence_id: str, second_authorizer: str, reason: str
    ) -> dict:
        with self._lock:
            at = self._now()
            record = self.store.destroy(
                evidence_id,
                [principal.principal_id, second_authorizer],
                reason,
                destroyed_at=at,
            )
            self._commit(
                "evidence_destroyed",
                {"evidence_id": evidence_id, "record": record.to_json(), "at": at},
            )
            return record.to_json()

    # ---- views -------------------------------------------------------------

    def view_request(self, principal: Principal, request_id: str) -> dict:
        entry = self._entry(request_id)
        if principal.role == "le_agent":
            return _requester_view(entry)
        return entry

    def list_requests(self, principal: Principal) -> list:
        entries = sorted(self.state.requests.values(), key=lambda e: e["request"]["request_id"])
        if principal.role == "le_agent":
            return [
                _requester_view(e) for e in entries if e["owner"] == principal.principal_id
            ]
        return entries


def _requester_view(entry: dict) -> dict:
    """What the external requester sees: no internal rationale, no case ids."""
    return {
        "request": entry["request"],
        "priority": entry["priority"],
        "history": entry["history"],
        "decisions": [
            {
                "decision": d["decision"],
                "decided_at": d["decided_at"],
                "response_data_class": d["response_data_class"],
                "public_summary": d.get("public_summary", ""),
            }
            for d in entry["decisions"]
        ],
        "provisional": entry["provisional"],
        "response": entry["response"],
        "documents": entry["documents"],
    }


def _state_from_json(doc: dict) -> ServiceState:
    state = ServiceState()
    for key, value in doc.items():
        setattr(state, key, value)
    return state

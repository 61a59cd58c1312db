"""Case dossiers: documents, evidence links, tasks, append-only audit trail."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

DOCUMENT_KINDS = (
    "request_scan",
    "evaluation_report",
    "briefing_memo",
    "forensic_report",
    "custody_export",
    "invoice",
    "response_letter",
)

TASK_STATUSES = ("open", "done", "cancelled")
TERMINAL_TASK_STATUSES = frozenset({"done", "cancelled"})


@dataclass
class CaseDocument:
    doc_id: str  # content-hash id in the evidence/document store
    kind: str
    uploaded_by: str
    uploaded_at: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "kind": self.kind,
            "uploaded_by": self.uploaded_by,
            "uploaded_at": self.uploaded_at,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CaseDocument":
        return cls(doc["doc_id"], doc["kind"], doc["uploaded_by"], doc["uploaded_at"])


@dataclass
class Assignment:
    task_id: str
    case_id: str
    description: str
    assignee_role: str
    due: Optional[str] = None
    status: str = "open"

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "case_id": self.case_id,
            "description": self.description,
            "assignee_role": self.assignee_role,
            "due": self.due,
            "status": self.status,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Assignment":
        return cls(
            task_id=doc["task_id"],
            case_id=doc["case_id"],
            description=doc["description"],
            assignee_role=doc["assignee_role"],
            due=doc.get("due"),
            status=doc["status"],
        )


@dataclass
class AuditEntry:
    seq: int
    case_id: str
    actor: str
    action: str
    timestamp: str
    details: str = ""

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "case_id": self.case_id,
            "actor": self.actor,
            "action": self.action,
            "timestamp": self.timestamp,
            "details": self.details,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AuditEntry":
        return cls(
            seq=doc["seq"],
            case_id=doc["case_id"],
            actor=doc["actor"],
            action=doc["action"],
            timestamp=doc["timestamp"],
            details=doc.get("details", ""),
        )


@dataclass
class Case:
    case_id: str
    request_id: str
    opened_at: str
    status: str = "open"  # open | closed
    participants: list = field(default_factory=list)  # [{principal, role}]
    evidence_ids: list = field(default_factory=list)
    documents: list = field(default_factory=list)  # [CaseDocument]
    assignments: list = field(default_factory=list)  # [Assignment]
    audit: list = field(default_factory=list)  # [AuditEntry]
    closed_at: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "request_id": self.request_id,
            "opened_at": self.opened_at,
            "status": self.status,
            "participants": list(self.participants),
            "evidence_ids": list(self.evidence_ids),
            "documents": [d.to_json() for d in self.documents],
            "assignments": [a.to_json() for a in self.assignments],
            "audit": [a.to_json() for a in self.audit],
            "closed_at": self.closed_at,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Case":
        return cls(
            case_id=doc["case_id"],
            request_id=doc["request_id"],
            opened_at=doc["opened_at"],
            status=doc["status"],
            participants=list(doc["participants"]),
            evidence_ids=list(doc["evidence_ids"]),
            documents=[CaseDocument.from_json(d) for d in doc["documents"]],
            assignments=[Assignment.from_json(a) for a in doc["assignments"]],
            audit=[AuditEntry.from_json(a) for a in doc["audit"]],
            closed_at=doc.get("closed_at"),
        )

    def has_forensic_report(self) -> bool:
        return any(d.kind == "forensic_report" for d in self.documents)

    def open_assignments(self) -> list:
        return [a for a in self.assignments if a.status == "open"]

    def record(self, actor: str, action: str, timestamp: str, details: str = "") -> AuditEntry:
        entry = AuditEntry(
            seq=len(self.audit),
            case_id=self.case_id,
            actor=actor,
            action=action,
            timestamp=timestamp,
            details=details,
        )
        self.audit.append(entry)
        return entry

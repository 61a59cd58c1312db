"""Principals and the role-based access matrix.

The matrix is total: every (action, role) pair is written out explicitly,
with ``own`` meaning "allowed only on the principal's own resource" (used
for external requesters reaching their requests and ticket threads).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from .errors import Forbidden, Unauthenticated

ROLES = ("le_agent", "crisis_manager", "forensic_expert", "legal_advisor", "admin")

ALLOW, DENY, OWN = "allow", "deny", "own"


@dataclass(frozen=True)
class Principal:
    principal_id: str
    role: str
    credential_ref: str = ""  # sha256 of the bearer token; never the token itself

    def to_json(self) -> dict:
        return {
            "principal_id": self.principal_id,
            "role": self.role,
            "credential_ref": self.credential_ref,
        }


def credential_ref(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


# action -> {role: allow|deny|own}; full five-role row for every action.
ROLE_MATRIX = {
    "request.submit":             {"le_agent": ALLOW, "crisis_manager": DENY,  "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "request.read":               {"le_agent": OWN,   "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "request.list":               {"le_agent": OWN,   "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "request.receive_documents":  {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "request.decide":             {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.reopen":             {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.escalate":           {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.provisional":        {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.extend_preservation":{"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.apply_action":       {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "request.respond":            {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "request.acknowledge":        {"le_agent": OWN,   "crisis_manager": DENY,  "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "ticket.read":                {"le_agent": OWN,   "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "ticket.message":             {"le_agent": OWN,   "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "document.upload":            {"le_agent": ALLOW, "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "case.read":                  {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "case.link_evidence":         {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "case.add_report":            {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": DENY},
    "case.assign_task":           {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "case.update_task":           {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "case.close":                 {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": DENY},
    "case.export":                {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "evidence.verify":            {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "evidence.destroy":           {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "agents.read":                {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": ALLOW},
    "flow.launch":                {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "flow.read":                  {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": ALLOW},
    "logs.ingest":                {"le_agent": DENY,  "crisis_manager": DENY,  "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": ALLOW},
    "logs.query":                 {"le_agent": DENY,  "crisis_manager": DENY,  "forensic_expert": ALLOW, "legal_advisor": DENY,  "admin": DENY},
    "report.transparency":        {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "invoice.create":             {"le_agent": DENY,  "crisis_manager": DENY,  "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "invoice.read":               {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "notification.read":          {"le_agent": DENY,  "crisis_manager": ALLOW, "forensic_expert": DENY,  "legal_advisor": DENY,  "admin": ALLOW},
    "workflow.read":              {"le_agent": ALLOW, "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
    "schema.read":                {"le_agent": ALLOW, "crisis_manager": ALLOW, "forensic_expert": ALLOW, "legal_advisor": ALLOW, "admin": ALLOW},
}

ACTIONS = tuple(sorted(ROLE_MATRIX))


def authorize(principal: Optional[Principal], action: str, owner_id: Optional[str] = None) -> bool:
    """Pure decision; deny is a value, not an exception."""
    if principal is None:
        return False
    row = ROLE_MATRIX.get(action)
    if row is None:
        return False
    verdict = row.get(principal.role, DENY)
    if verdict == ALLOW:
        return True
    if verdict == OWN:
        return owner_id is not None and owner_id == principal.principal_id
    return False


def require(principal: Optional[Principal], action: str, owner_id: Optional[str] = None) -> None:
    if principal is None:
        raise Unauthenticated("no principal")
    if not authorize(principal, action, owner_id):
        raise Forbidden(f"{principal.role} may not {action}")

"""Request lifecycle state machine: states, guards, transition table.

This module is pure — it knows nothing about storage or transport. The
stateful operations (submit, record_decision, escalate, ...) live on the
service, which consults the table here and appends events. The transition
table is exported machine-readably (state, guard, successor) so the portal
can render workflow timelines from the same source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import MissingCrisisManager
from . import canonical


class StateValue(str, Enum):
    PRE_SUBMITTED = "PreSubmitted"
    AWAITING_DOCUMENTS = "AwaitingDocuments"
    DOCUMENTS_RECEIVED = "DocumentsReceived"
    UNDER_EVALUATION = "UnderEvaluation"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    CHALLENGED = "Challenged"
    ESCALATED = "Escalated"
    ACTION_APPLIED = "ActionApplied"
    RESPONSE_ISSUED = "ResponseIssued"
    CLOSED = "Closed"


STATE_VALUES = frozenset(s.value for s in StateValue)

# Objectives/regimes are plain strings here so the machine stays import-free
# of the domain module.
ESCALATABLE_OBJECTIVES = frozenset({"disclosure", "preservation"})
PROVISIONAL_OBJECTIVES = frozenset({"preservation"})


@dataclass
class WorkflowState:
    """Current lifecycle position plus the provisional-measures flag."""

    value: str = StateValue.PRE_SUBMITTED.value
    provisional_active: bool = False

    def to_json(self) -> dict:
        return {"value": self.value, "provisional_active": self.provisional_active}

    @classmethod
    def from_json(cls, doc: dict) -> "WorkflowState":
        return cls(value=doc["value"], provisional_active=bool(doc["provisional_active"]))


@dataclass
class EvaluationDecision:
    decision: str  # approve | reject | challenge
    rationale: str
    decided_by: list  # [{"principal_id": ..., "role": ...}]
    decided_at: str
    response_data_class: str = "none"  # content | non_content | none

    DECISIONS = ("approve", "reject", "challenge")
    DATA_CLASSES = ("content", "non_content", "none")

    def require_crisis_manager(self) -> None:
        if not any(p.get("role") == "crisis_manager" for p in self.decided_by):
            raise MissingCrisisManager("decision lacks a crisis_manager signer")

    def to_json(self) -> dict:
        return {
            "decision": self.decision,
            "rationale": self.rationale,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
            "response_data_class": self.response_data_class,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EvaluationDecision":
        return cls(
            decision=doc["decision"],
            rationale=doc["rationale"],
            decided_by=list(doc["decided_by"]),
            decided_at=doc["decided_at"],
            response_data_class=doc.get("response_data_class", "none"),
        )


@dataclass
class PreservationOrder:
    request_id: str
    issued_at: str
    deadline: str
    extended: bool = False

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "issued_at": self.issued_at,
            "deadline": self.deadline,
            "extended": self.extended,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PreservationOrder":
        return cls(doc["request_id"], doc["issued_at"], doc["deadline"], bool(doc["extended"]))

    @classmethod
    def issue(cls, request_id: str, issued_at: str, delay_days: int) -> "PreservationOrder":
        return cls(request_id, issued_at, canonical.ts_add_days(issued_at, delay_days))


# Guard predicates get (objective, history, override); descriptions are what
# the exported table carries.

def _g_always(objective, history, override):
    return True


def _g_escalatable(objective, history, override):
    return objective in ESCALATABLE_OBJECTIVES or override


def _g_not_reopened(objective, history, override):
    return StateValue.UNDER_EVALUATION.value not in history


_GUARDS = {
    "always": (_g_always, "always"),
    "decision_approve": (_g_always, "evaluation decision = approve"),
    "decision_reject": (_g_always, "evaluation decision = reject"),
    "decision_challenge": (_g_always, "evaluation decision = challenge"),
    "escalatable": (
        _g_escalatable,
        "objective in {disclosure, preservation} or crisis-manager override",
    ),
    "not_reopened": (_g_not_reopened, "at most one re-evaluation of a challenge"),
    "ack_or_timeout": (_g_always, "requester acknowledgment or timeout"),
}

# (state, guard id, successor) — the single source of truth for transitions.
TRANSITION_TABLE = (
    (StateValue.PRE_SUBMITTED.value, "always", StateValue.AWAITING_DOCUMENTS.value),
    (StateValue.AWAITING_DOCUMENTS.value, "always", StateValue.DOCUMENTS_RECEIVED.value),
    (StateValue.DOCUMENTS_RECEIVED.value, "decision_approve", StateValue.APPROVED.value),
    (StateValue.DOCUMENTS_RECEIVED.value, "decision_reject", StateValue.REJECTED.value),
    (StateValue.DOCUMENTS_RECEIVED.value, "decision_challenge", StateValue.CHALLENGED.value),
    (StateValue.UNDER_EVALUATION.value, "decision_approve", StateValue.APPROVED.value),
    (StateValue.UNDER_EVALUATION.value, "decision_reject", StateValue.REJECTED.value),
    (StateValue.CHALLENGED.value, "not_reopened", StateValue.UNDER_EVALUATION.value),
    (StateValue.CHALLENGED.value, "always", StateValue.RESPONSE_ISSUED.value),
    (StateValue.APPROVED.value, "escalatable", StateValue.ESCALATED.value),
    (StateValue.APPROVED.value, "always", StateValue.ACTION_APPLIED.value),
    (StateValue.ESCALATED.value, "always", StateValue.ACTION_APPLIED.value),
    (StateValue.REJECTED.value, "always", StateValue.RESPONSE_ISSUED.value),
    (StateValue.ACTION_APPLIED.value, "always", StateValue.RESPONSE_ISSUED.value),
    (StateValue.RESPONSE_ISSUED.value, "ack_or_timeout", StateValue.CLOSED.value),
)


def transition_table() -> list:
    """Machine-readable transition table: [{state, guard, successor}, ...]."""
    return [
        {"state": s, "guard": _GUARDS[g][1], "successor": t}
        for s, g, t in TRANSITION_TABLE
    ]


def allowed_transitions(
    state: str,
    objective: str,
    history: Iterable[str] = (),
    override: bool = False,
) -> frozenset:
    """Guard-filtered successor set for a request in ``state``."""
    history = tuple(history)
    out = set()
    for s, g, t in TRANSITION_TABLE:
        if s == state and _GUARDS[g][0](objective, history, override):
            out.add(t)
    return frozenset(out)


def provisional_eligible(regime: str, objective: str) -> bool:
    """Provisional measures are for emergency requests or preservation objectives."""
    return regime == "emergency" or objective in PROVISIONAL_OBJECTIVES


# Response classification (issue_response semantics).

RESPONSE_KINDS = (
    "disclosure",
    "preservation_confirmation",
    "removal_confirmation",
    "certificate",
    "refusal",
    "challenge_notice",
)

CERTIFICATE_TEMPLATE = (
    "CERTIFICATE OF RECORDS\n"
    "In lieu of live testimony, the responder certifies that the records "
    "referenced by this request were produced and maintained in the ordinary "
    "course of business. No expert witness will be made available."
)


def classify_response(state_before: str, objective: str, data_class: str) -> tuple:
    """Response (kind, data_class) for a request leaving ``state_before``.

    Testimony is never answered with live testimony — only a certificate.
    """
    if state_before == StateValue.REJECTED.value:
        return "refusal", "none"
    if state_before == StateValue.CHALLENGED.value:
        return "challenge_notice", "none"
    # state_before == ActionApplied: an approved request's action was applied.
    if objective == "testimony":
        return "certificate", "none"
    if objective == "disclosure":
        return "disclosure", data_class
    if objective == "preservation":
        return "preservation_confirmation", "none"
    return "removal_confirmation", "none"

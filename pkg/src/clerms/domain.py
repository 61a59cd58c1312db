"""Core domain types, submission validation, and priority classification.

``validate_submission`` is the single entry point for turning an untrusted
key-value document into a typed request. It reports the *complete* list of
field errors (the portal shows them all to a human filer), and it is
idempotent: re-validating the canonical JSON of a valid request yields an
equal value.
"""

from __future__ import annotations

import ipaddress
import re
import uuid
from dataclasses import dataclass, field
from typing import Any, Optional
from urllib.parse import urlparse

from . import canonical
from .countries import ISO_3166_ALPHA2
from .errors import ClermsError
from .workflow import WorkflowState

OBJECTIVES = ("disclosure", "preservation", "removal", "testimony")
REGIMES = ("emergency", "routine")
ORIGINS = ("domestic", "foreign")
FOREIGN_CHANNELS = ("mlat", "rogatory", "cloud_act", "direct")
INSTRUMENT_KINDS = (
    "subpoena",
    "court_order",
    "search_warrant",
    "mlat_request",
    "rogatory_letter",
    "emergency_declaration",
    "other",
)
IDENTIFIER_KINDS = ("account", "email", "username", "ip")
PRIORITIES = ("p0_emergency", "p1_preservation", "p2_routine")

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


@dataclass
class FieldError:
    """One field-level problem: a MissingField or an InvalidFormat."""

    kind: str  # "MissingField" | "InvalidFormat"
    field: str
    reason: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "field": self.field, "reason": self.reason}


class SubmissionInvalid(ClermsError):
    """Carries the complete list of field errors for a rejected submission."""

    name = "ValidationErrors"
    http_status = 400

    def __init__(self, errors: list):
        self.errors = errors
        summary = "; ".join(f"{e.kind}({e.field})" for e in errors)
        super().__init__(summary)

    def to_json(self) -> dict:
        return {
            "error": self.name,
            "detail": self.detail,
            "errors": [e.to_json() for e in self.errors],
        }


@dataclass
class RequesterIdentity:
    agent_name: str
    agent_email: str
    agent_phone: str
    badge_id: str
    superior_name: str
    superior_contact: str
    agency_name: str
    agency_country: str  # ISO-3166 alpha-2
    jurisdiction: str

    FIELDS = (
        "agent_name", "agent_email", "agent_phone", "badge_id",
        "superior_name", "superior_contact",
        "agency_name", "agency_country", "jurisdiction",
    )

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def from_json(cls, doc: dict) -> "RequesterIdentity":
        return cls(**{name: doc[name] for name in cls.FIELDS})


@dataclass
class Identifier:
    kind: str  # account | email | username | ip
    value: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_json(cls, doc: dict) -> "Identifier":
        return cls(kind=doc["kind"], value=doc["value"])


@dataclass
class TargetSpec:
    identifiers: list  # [Identifier]
    service_uri: Optional[str] = None
    data_period: Optional[dict] = None  # {"start": ts, "end": ts}

    def to_json(self) -> dict:
        return {
            "identifiers": [i.to_json() for i in self.identifiers],
            "service_uri": self.service_uri,
            "data_period": self.data_period,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TargetSpec":
        return cls(
            identifiers=[Identifier.from_json(i) for i in doc["identifiers"]],
            service_uri=doc.get("service_uri"),
            data_period=doc.get("data_period"),
        )


@dataclass
class LegalInstrument:
    kind: str
    issuing_authority: str
    reference_number: str
    document_refs: list = field(default_factory=list)  # 64-char hex content ids
    qualifier: Optional[str] = None  # required free text when kind == "other"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "issuing_authority": self.issuing_authority,
            "reference_number": self.reference_number,
            "document_refs": list(self.document_refs),
            "qualifier": self.qualifier,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LegalInstrument":
        return cls(
            kind=doc["kind"],
            issuing_authority=doc["issuing_authority"],
            reference_number=doc["reference_number"],
            document_refs=list(doc.get("document_refs", [])),
            qualifier=doc.get("qualifier"),
        )


@dataclass
class LERequest:
    request_id: str
    requester: RequesterIdentity
    target: TargetSpec
    instruments: list  # [LegalInstrument]
    objective: str
    regime: str
    origin: dict  # {"kind": "domestic"|"foreign", "channel": None|str}
    narrative: str
    submitted_at: str
    state: WorkflowState

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "requester": self.requester.to_json(),
            "target": self.target.to_json(),
            "instruments": [i.to_json() for i in self.instruments],
            "objective": self.objective,
            "regime": self.regime,
            "origin": dict(self.origin),
            "narrative": self.narrative,
            "submitted_at": self.submitted_at,
            "state": self.state.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LERequest":
        """Load a stored request, re-checking every type invariant."""
        return validate_submission(doc)


def _is_email(value: Any) -> bool:
    return isinstance(value, str) and bool(_EMAIL_RE.match(value))


def _is_uri(value: Any) -> bool:
    if not isinstance(value, str):
        return False
    parsed = urlparse(value)
    return bool(parsed.scheme) and bool(parsed.netloc)


def _is_ip(value: Any) -> bool:
    try:
        ipaddress.ip_address(value)
        return True
    except ValueError:
        return False


class _Collector:
    def __init__(self):
        self.errors: list = []

    def missing(self, field_name: str) -> None:
        self.errors.append(FieldError("MissingField", field_name))

    def invalid(self, field_name: str, reason: str) -> None:
        self.errors.append(FieldError("InvalidFormat", field_name, reason))

    def require_text(self, doc: dict, key: str, prefix: str = "") -> Optional[str]:
        path = f"{prefix}{key}" if prefix else key
        value = doc.get(key)
        if value is None or (isinstance(value, str) and not value.strip()):
            self.missing(path)
            return None
        if not isinstance(value, str):
            self.invalid(path, "must be text")
            return None
        return value


def _validate_requester(raw: Any, errors: _Collector) -> Optional[RequesterIdentity]:
    if not isinstance(raw, dict) or not raw:
        errors.missing("requester")
        return None
    values = {}
    for name in RequesterIdentity.FIELDS:
        values[name] = errors.require_text(raw, name, "requester.")
    if values["agent_email"] is not None and not _is_email(values["agent_email"]):
        errors.invalid("requester.agent_email", "not a valid email address")
        values["agent_email"] = None
    if values["agency_country"] is not None:
        code = values["agency_country"].strip().upper()
        if code not in ISO_3166_ALPHA2:
            errors.invalid("requester.agency_country", "unknown ISO-3166 alpha-2 code")
            values["agency_country"] = None
        else:
            values["agency_country"] = code
    if any(v is None for v in values.values()):
        return None
    return RequesterIdentity(**values)


def _validate_target(raw: Any, errors: _Collector) -> Optional[TargetSpec]:
    if not isinstance(raw, dict) or not raw:
        errors.missing("target")
        return None
    ok = True
    identifiers = []
    raw_ids = raw.get("identifiers")
    if not isinstance(raw_ids, list) or not raw_ids:
        errors.missing("target.identifiers")
        ok = False
    else:
        for idx, rid in enumerate(raw_ids):
            path = f"target.identifiers[{idx}]"
            if not isinstance(rid, dict):
                errors.invalid(path, "must be an object with kind and value")
                ok = False
                continue
            kind, value = rid.get("kind"), rid.get("value")
            if kind not in IDENTIFIER_KINDS:
                errors.invalid(path, f"kind must be one of {', '.join(IDENTIFIER_KINDS)}")
                ok = False
                continue
            if not isinstance(value, str) or not value.strip():
                errors.missing(f"{path}.value")
                ok = False
                continue
            if kind == "ip" and not _is_ip(value):
                errors.invalid(path, "not an IP address")
                ok = False
                continue
            if kind == "email" and not _is_email(value):
                errors.invalid(path, "not a valid email address")
                ok = False
                continue
            identifiers.append(Identifier(kind, value))

    service_uri = raw.get("service_uri")
    if service_uri is not None and not _is_uri(service_uri):
        errors.invalid("target.service_uri", "not a valid URI")
        ok = False

    period = raw.get("data_period")
    if period is not None:
        if (
            not isinstance(period, dict)
            or not canonical.is_ts(period.get("start"))
            or not canonical.is_ts(period.get("end"))
        ):
            errors.invalid("target.data_period", "start/end must be UTC millisecond timestamps")
            ok = False
        elif period["start"] > period["end"]:
            errors.invalid("target.data_period", "start is after end")
            ok = False
        else:
            period = {"start": period["start"], "end": period["end"]}

    if not ok:
        return None
    return TargetSpec(identifiers=identifiers, service_uri=service_uri, data_period=period)


def _validate_instruments(raw: Any, errors: _Collector) -> Optional[list]:
    if not isinstance(raw, list) or not raw:
        errors.missing("instruments")
        return None
    ok = True
    instruments = []
    any_refs = False
    for idx, item in enumerate(raw):
        path = f"instruments[{idx}]"
        if not isinstance(item, dict):
            errors.invalid(path, "must be an object")
            ok = False
            continue
        kind = item.get("kind")
        if kind not in INSTRUMENT_KINDS:
            errors.invalid(f"{path}.kind", f"must be one of {', '.join(INSTRUMENT_KINDS)}")
            ok = False
            continue
        qualifier = item.get("qualifier")
        if kind == "other" and (not isinstance(qualifier, str) or not qualifier.strip()):
            errors.missing(f"{path}.qualifier")
            ok = False
        refs = item.get("document_refs", [])
        if not isinstance(refs, list):
            errors.invalid(f"{path}.document_refs", "must be a list of content-hash ids")
            ok = False
            refs = []
        for ridx, ref in enumerate(refs):
            if not canonical.is_hex64(ref):
                errors.invalid(
                    f"{path}.document_refs[{ridx}]", "not a 64-char lowercase hex id"
                )
                ok = False
        any_refs = any_refs or bool(refs)
        instruments.append(
            LegalInstrument(
                kind=kind,
                issuing_authority=str(item.get("issuing_authority", "")),
                reference_number=str(item.get("reference_number", "")),
                document_refs=list(refs),
                qualifier=qualifier,
            )
        )
    if ok and not any_refs:
        # Block (d): at least one supporting legal-document scan.
        errors.missing("instruments.document_refs")
        ok = False
    return instruments if ok else None


def validate_submission(raw_fields: Any) -> LERequest:
    """Validate a submission document into a typed request.

    Raises SubmissionInvalid carrying every field-level error rather than
    stopping at the first.
    """
    if not isinstance(raw_fields, dict):
        raise SubmissionInvalid([FieldError("InvalidFormat", "submission", "not a document")])
    errors = _Collector()

    requester = _validate_requester(raw_fields.get("requester"), errors)
    target = _validate_target(raw_fields.get("target"), errors)
    instruments = _validate_instruments(raw_fields.get("instruments"), errors)

    objective = raw_fields.get("objective")
    if objective not in OBJECTIVES:
        if objective is None:
            errors.missing("objective")
        else:
            errors.invalid("objective", f"must be one of {', '.join(OBJECTIVES)}")

    regime = raw_fields.get("regime")
    if regime not in REGIMES:
        if regime is None:
            errors.missing("regime")
        else:
            errors.invalid("regime", "must be emergency or routine")

    narrative = raw_fields.get("narrative", "")
    if not isinstance(narrative, str):
        errors.invalid("narrative", "must be text")
        narrative = ""
    if regime == "emergency" and not narrative.strip():
        errors.missing("narrative")

    origin_raw = raw_fields.get("origin")
    origin = None
    if not isinstance(origin_raw, dict) or origin_raw.get("kind") not in ORIGINS:
        if origin_raw is None:
            errors.missing("origin")
        else:
            errors.invalid("origin", "kind must be domestic or foreign")
    else:
        channel = origin_raw.get("channel")
        if origin_raw["kind"] == "foreign":
            if channel not in FOREIGN_CHANNELS:
                if channel is None:
                    errors.missing("origin.channel")
                else:
                    errors.invalid(
                        "origin.channel", f"must be one of {', '.join(FOREIGN_CHANNELS)}"
                    )
            else:
                origin = {"kind": "foreign", "channel": channel}
        else:
            if channel is not None:
                errors.invalid("origin.channel", "domestic requests carry no channel")
            else:
                origin = {"kind": "domestic", "channel": None}

    request_id = raw_fields.get("request_id")
    if request_id is None:
        request_id = str(uuid.uuid4())
    else:
        try:
            request_id = str(uuid.UUID(str(request_id)))
        except ValueError:
            errors.invalid("request_id", "not a UUID")

    submitted_at = raw_fields.get("submitted_at")
    if submitted_at is None:
        submitted_at = canonical.format_ts(canonical.utc_now())
    elif not canonical.is_ts(submitted_at):
        errors.invalid("submitted_at", "not a UTC millisecond timestamp")

    state_raw = raw_fields.get("state")
    if state_raw is None:
        state = WorkflowState()
    else:
        try:
            state = WorkflowState.from_json(state_raw)
            from .workflow import STATE_VALUES

            if state.value not in STATE_VALUES:
                raise KeyError(state.value)
        except (KeyError, TypeError):
            errors.invalid("state", "not a workflow state")
            state = WorkflowState()

    if errors.errors:
        raise SubmissionInvalid(errors.errors)

    return LERequest(
        request_id=request_id,
        requester=requester,
        target=target,
        instruments=instruments,
        objective=objective,
        regime=regime,
        origin=origin,
        narrative=narrative,
        submitted_at=submitted_at,
        state=state,
    )


def classify_priority(request: LERequest) -> str:
    """Deterministic priority from (regime, objective) only."""
    if request.regime == "emergency":
        return "p0_emergency"
    if request.objective == "preservation":
        return "p1_preservation"
    return "p2_routine"


def submission_schema() -> dict:
    """The field schema the portal derives its client-side validation from."""
    return {
        "version": 1,
        "blocks": [
            {
                "key": "agent_contact",
                "label": "Agent contact information",
                "fields": [
                    {"path": "requester.agent_name", "label": "Agent name", "type": "text", "required": True},
                    {"path": "requester.agent_email", "label": "Agent email", "type": "email", "required": True},
                    {"path": "requester.agent_phone", "label": "Agent phone", "type": "text", "required": True},
                    {"path": "requester.badge_id", "label": "Badge id", "type": "text", "required": True},
                ],
            },
            {
                "key": "superior_contact",
                "label": "Superior contact information",
                "fields": [
                    {"path": "requester.superior_name", "label": "Superior name", "type": "text", "required": True},
                    {"path": "requester.superior_contact", "label": "Superior contact", "type": "text", "required": True},
                ],
            },
            {
                "key": "agency_contact",
                "label": "Agency contact information",
                "fields": [
                    {"path": "requester.agency_name", "label": "Agency name", "type": "text", "required": True},
                    {"path": "requester.agency_country", "label": "Agency country (ISO-3166 alpha-2)", "type": "country", "required": True},
                    {"path": "requester.jurisdiction", "label": "Jurisdiction", "type": "text", "required": True},
                ],
            },
            {
                "key": "legal_documents",
                "label": "Legal documents",
                "fields": [
                    {
                        "path": "instruments",
                        "label": "Legal instruments with scanned documents",
                        "type": "instrument_list",
                        "required": True,
                        "kinds": list(INSTRUMENT_KINDS),
                    },
                ],
            },
            {
                "key": "target_information",
                "label": "Target information",
                "fields": [
                    {
                        "path": "target.identifiers",
                        "label": "Target identifiers",
                        "type": "identifier_list",
                        "required": True,
                        "kinds": list(IDENTIFIER_KINDS),
                    },
                    {"path": "target.service_uri", "label": "Service URI", "type": "uri", "required": False},
                    {"path": "target.data_period", "label": "Data period", "type": "period", "required": False},
                ],
            },
        ],
        "request_fields": [
            {"path": "objective", "type": "enum", "values": list(OBJECTIVES), "required": True},
            {"path": "regime", "type": "enum", "values": list(REGIMES), "required": True},
            {"path": "origin.kind", "type": "enum", "values": list(ORIGINS), "required": True},
            {
                "path": "origin.channel",
                "type": "enum",
                "values": list(FOREIGN_CHANNELS),
                "required": False,
                "required_if": {"origin.kind": "foreign"},
            },
            {"path": "narrative", "type": "text", "required": False, "required_if": {"regime": "emergency"}},
        ],
    }

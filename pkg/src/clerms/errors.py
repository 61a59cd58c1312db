"""Domain error hierarchy.

Every error a caller can observe is one of these named variants; the HTTP
layer and the CLI map them to status codes / exit codes by the ``name``
attribute, which is stable and machine-readable.
"""

from __future__ import annotations


class ClermsError(Exception):
    """Base class; ``name`` is the stable error identifier sent on the wire."""

    name = "Error"
    http_status = 400

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.name}: {detail}" if detail else self.name)

    def to_json(self) -> dict:
        return {"error": self.name, "detail": self.detail}


class Unauthenticated(ClermsError):
    name = "Unauthenticated"
    http_status = 401


class Forbidden(ClermsError):
    name = "Forbidden"
    http_status = 403


class NotFound(ClermsError):
    name = "NotFound"
    http_status = 404


class UnknownRequest(NotFound):
    name = "UnknownRequest"


class UnknownDocument(NotFound):
    name = "UnknownDocument"


class UnknownAgent(NotFound):
    name = "UnknownAgent"


class UnknownRecipient(NotFound):
    name = "UnknownRecipient"


class InvalidState(ClermsError):
    name = "InvalidState"
    http_status = 409


class DuplicateRequest(InvalidState):
    name = "DuplicateRequest"


class NotEligible(InvalidState):
    name = "NotEligible"


class MissingCrisisManager(ClermsError):
    name = "MissingCrisisManager"
    http_status = 400


class InvalidRequestState(InvalidState):
    name = "InvalidRequestState"


class DuplicateCase(InvalidState):
    name = "DuplicateCase"


class CaseClosed(InvalidState):
    name = "CaseClosed"


class OpenTasks(InvalidState):
    name = "OpenTasks"


class MissingForensicReport(InvalidState):
    name = "MissingForensicReport"


class EmptyCase(InvalidState):
    name = "EmptyCase"


# Evidence / custody

class StorageFull(ClermsError):
    name = "StorageFull"
    http_status = 507


class IoFailure(ClermsError):
    name = "IoFailure"
    http_status = 500


class Destroyed(InvalidState):
    name = "Destroyed"


class IntegrityViolation(ClermsError):
    name = "IntegrityViolation"
    http_status = 500


class ChainBroken(ClermsError):
    name = "ChainBroken"
    http_status = 409

    def __init__(self, seq: int, detail: str = ""):
        self.seq = seq
        super().__init__(detail or f"chain broken at seq {seq}")


class AfterDestruction(InvalidState):
    name = "AfterDestruction"


class InsufficientAuthorization(ClermsError):
    name = "InsufficientAuthorization"
    http_status = 403


# Wire protocol

class FrameTooLarge(ClermsError):
    name = "FrameTooLarge"


class MalformedFrame(ClermsError):
    name = "MalformedFrame"


class UnsupportedVersion(ClermsError):
    name = "UnsupportedVersion"


class MalformedHello(ClermsError):
    name = "MalformedHello"


# Collection flows

class PathEscape(ClermsError):
    name = "PathEscape"


class AgentIoError(ClermsError):
    name = "AgentIoError"
    http_status = 502


class MalformedRecord(ClermsError):
    name = "MalformedRecord"

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        super().__init__(detail or f"record {index} malformed")

    def to_json(self) -> dict:
        return {"error": self.name, "detail": self.detail, "index": self.index}


class EmptyFilter(ClermsError):
    name = "EmptyFilter"


# Reporting / costs

class InvalidPeriod(ClermsError):
    name = "InvalidPeriod"


class NegativeInput(ClermsError):
    name = "NegativeInput"


class UnsupportedFormat(ClermsError):
    name = "UnsupportedFormat"


# Event log

class CorruptLog(ClermsError):
    name = "CorruptLog"
    http_status = 500

    def __init__(self, seq: int, detail: str = ""):
        self.seq = seq
        super().__init__(detail or f"event log corrupt at seq {seq}")

"""Issue tracking: one ticket per request, append-only message thread."""

from __future__ import annotations

from dataclasses import dataclass, field

TICKET_STATUSES = ("open", "pending_requester", "resolved")


@dataclass
class TicketMessage:
    author: str  # principal id, or "system"
    body: str
    timestamp: str
    system: bool = False

    def to_json(self) -> dict:
        return {
            "author": self.author,
            "body": self.body,
            "timestamp": self.timestamp,
            "system": self.system,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TicketMessage":
        return cls(doc["author"], doc["body"], doc["timestamp"], bool(doc["system"]))


@dataclass
class Ticket:
    ticket_id: str
    request_id: str
    priority: str
    status: str = "open"
    messages: list = field(default_factory=list)  # [TicketMessage]

    def to_json(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "request_id": self.request_id,
            "priority": self.priority,
            "status": self.status,
            "messages": [m.to_json() for m in self.messages],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Ticket":
        return cls(
            ticket_id=doc["ticket_id"],
            request_id=doc["request_id"],
            priority=doc["priority"],
            status=doc["status"],
            messages=[TicketMessage.from_json(m) for m in doc["messages"]],
        )

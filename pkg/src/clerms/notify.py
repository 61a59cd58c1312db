"""Notifications: persisted first, delivered best-effort.

Delivery goes through a pluggable sender. The default sender just logs;
a failing sender leaves the notification persisted with delivered=false —
durability is never traded for delivery.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

logger = logging.getLogger("clerms.notify")


@dataclass
class Notification:
    notification_id: str
    recipient: str  # role name or principal id
    subject: str
    body: str
    created_at: str
    delivered: bool = False

    def to_json(self) -> dict:
        return {
            "notification_id": self.notification_id,
            "recipient": self.recipient,
            "subject": self.subject,
            "body": self.body,
            "created_at": self.created_at,
            "delivered": self.delivered,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Notification":
        return cls(
            notification_id=doc["notification_id"],
            recipient=doc["recipient"],
            subject=doc["subject"],
            body=doc["body"],
            created_at=doc["created_at"],
            delivered=bool(doc["delivered"]),
        )


class LogOnlySender:
    """Default sender: writes to the service log and reports success."""

    def send(self, notification: Notification) -> bool:
        logger.info(
            "notify %s: %s — %s",
            notification.recipient,
            notification.subject,
            notification.body,
        )
        return True


class FailingSender:
    """Test double for an outage: always reports failure."""

    def send(self, notification: Notification) -> bool:
        return False


def deliver(notification: Notification, sender) -> Notification:
    """Attempt delivery; never raises — failures only clear the flag."""
    try:
        notification.delivered = bool(sender.send(notification))
    except Exception:
        notification.delivered = False
    return notification

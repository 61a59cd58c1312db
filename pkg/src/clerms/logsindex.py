"""Server-side log index: ingest with dedup, conjunctive queries.

Functional stand-in for a log-analytics cluster at desk scale: records are
held in memory, appended to ``records.jsonl`` for persistence, and queried
by (client_ip, time range, substring) conjunction.
"""

from __future__ import annotations

import ipaddress
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import canonical
from .errors import EmptyFilter, InvalidPeriod, MalformedRecord


@dataclass
class LogRecord:
    source: str
    timestamp: str
    client_ip: str
    message: str
    attrs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "timestamp": self.timestamp,
            "client_ip": self.client_ip,
            "message": self.message,
            "attrs": dict(self.attrs),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LogRecord":
        return cls(
            source=doc["source"],
            timestamp=doc["timestamp"],
            client_ip=doc["client_ip"],
            message=doc["message"],
            attrs=dict(doc.get("attrs", {})),
        )

    def key(self) -> str:
        return canonical.digest_of(self.to_json())


@dataclass
class IngestResult:
    accepted: int
    rejected: list  # [MalformedRecord]
    records: list = field(default_factory=list)  # accepted records, normalized json

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [e.to_json() for e in self.rejected],
        }


def _parse_record(raw) -> LogRecord:
    if not isinstance(raw, dict):
        raise ValueError("not an object")
    source = raw.get("source")
    if not isinstance(source, str) or not source.strip():
        raise ValueError("source missing")
    timestamp = raw.get("timestamp")
    if not canonical.is_ts(timestamp):
        raise ValueError(f"timestamp not parseable: {timestamp!r}")
    try:
        client_ip = str(ipaddress.ip_address(raw.get("client_ip")))
    except ValueError:
        raise ValueError(f"client_ip not an IP address: {raw.get('client_ip')!r}")
    message = raw.get("message")
    if not isinstance(message, str):
        raise ValueError("message must be text")
    attrs = raw.get("attrs", {})
    if not isinstance(attrs, dict) or not all(isinstance(k, str) for k in attrs):
        raise ValueError("attrs must be a string-keyed map")
    return LogRecord(source, timestamp, client_ip, message, dict(attrs))


class LogIndex:
    """In-memory index with jsonl persistence. ``root=None`` keeps it memory-only."""

    def __init__(self, root=None):
        self._records: list = []
        self._keys: set = set()
        self._path: Optional[Path] = None
        if root is not None:
            directory = Path(root)
            directory.mkdir(parents=True, exist_ok=True)
            self._path = directory / "records.jsonl"
            if self._path.exists():
                with self._path.open("r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if not line:
                            continue
                        record = LogRecord.from_json(canonical_loads(line))
                        if record.key() not in self._keys:
                            self._keys.add(record.key())
                            self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def ingest(self, batch: list) -> IngestResult:
        """Out-of-order timestamps are fine; identical records deduplicate."""
        accepted = 0
        rejected = []
        accepted_records = []
        lines = []
        for index, raw in enumerate(batch):
            try:
                record = _parse_record(raw)
            except ValueError as exc:
                rejected.append(MalformedRecord(index, str(exc)))
                continue
            key = record.key()
            if key in self._keys:
                continue
            self._keys.add(key)
            self._records.append(record)
            accepted_records.append(record.to_json())
            lines.append(canonical.canonical_json(record.to_json()))
            accepted += 1
        if lines and self._path is not None:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return IngestResult(accepted, rejected, accepted_records)

    def record_keys(self) -> list:
        """Sorted dedup keys — a stable fingerprint of the indexed corpus."""
        return sorted(self._keys)

    def query(
        self,
        client_ip: Optional[str] = None,
        time_range: Optional[tuple] = None,
        substring: Optional[str] = None,
    ) -> list:
        """Conjunction of the provided filters, sorted by timestamp ascending."""
        if client_ip is None and time_range is None and substring is None:
            raise EmptyFilter("set at least one of client_ip, time_range, substring")
        if client_ip is not None:
            try:
                client_ip = str(ipaddress.ip_address(client_ip))
            except ValueError:
                raise EmptyFilter(f"not an IP address: {client_ip!r}")
        if time_range is not None:
            start, end = time_range
            if not canonical.is_ts(start) or not canonical.is_ts(end):
                raise InvalidPeriod("time_range bounds must be UTC millisecond timestamps")
            if start > end:
                raise InvalidPeriod("time_range start is after end")
        out = []
        for position, record in enumerate(self._records):
            if client_ip is not None and record.client_ip != client_ip:
                continue
            if time_range is not None and not (time_range[0] <= record.timestamp <= time_range[1]):
                continue
            if substring is not None and substring not in record.message:
                continue
            out.append((record.timestamp, position, record))
        out.sort(key=lambda t: (t[0], t[1]))
        return [record for _, _, record in out]


def canonical_loads(line: str):
    import json

    return json.loads(line)

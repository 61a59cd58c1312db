"""Append-only event log: the single source of truth for service state.

Commands capture every generated value (ids, timestamps) inside the event
payload, so replaying the log through the pure appliers reconstructs the
exact same state, digest-for-digest. Records are canonical JSON, one per
line, with dense sequence numbers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from . import canonical
from .errors import CorruptLog


@dataclass
class EventRecord:
    seq: int
    timestamp: str
    event_type: str
    payload: dict

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "event_type": self.event_type,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EventRecord":
        return cls(
            seq=doc["seq"],
            timestamp=doc["timestamp"],
            event_type=doc["event_type"],
            payload=doc["payload"],
        )


class EventLog:
    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._next_seq = 0
        try:
            for _ in self.scan():
                pass  # scan() advances _next_seq and validates density
        except CorruptLog:
            pass  # construction still succeeds; callers see it on their own scan()

    @property
    def next_seq(self) -> int:
        return self._next_seq

    def append(self, event_type: str, payload: dict, timestamp: Optional[str] = None) -> EventRecord:
        return self.append_many([(event_type, payload)], timestamp)[0]

    def append_many(self, events: list, timestamp: Optional[str] = None) -> list:
        """Append several records with one flush; all-or-nothing on the buffer."""
        timestamp = timestamp or canonical.format_ts(canonical.utc_now())
        records = []
        lines = []
        seq = self._next_seq
        for event_type, payload in events:
            record = EventRecord(seq=seq, timestamp=timestamp, event_type=event_type, payload=payload)
            lines.append(canonical.canonical_json(record.to_json()))
            records.append(record)
            seq += 1
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._next_seq = seq
        return records

    def scan(self) -> Iterator[EventRecord]:
        """Yield records in order; raise CorruptLog(seq) at the first bad line.

        Records before the corruption are yielded first, so a caller can keep
        the state built from the intact prefix.
        """
        if not self.path.exists():
            return
        next_seq = 0
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    record = EventRecord.from_json(doc)
                except (ValueError, KeyError, TypeError):
                    raise CorruptLog(next_seq, f"unreadable record at seq {next_seq}")
                if record.seq != next_seq or not isinstance(record.payload, dict):
                    raise CorruptLog(next_seq, f"sequence break at seq {next_seq}")
                next_seq += 1
                self._next_seq = max(self._next_seq, next_seq)
                yield record


class SnapshotStore:
    """Optional state snapshots: snapshots/<seq>.json, canonical JSON."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, seq: int, state_doc: dict) -> Path:
        path = self.directory / f"{seq:012d}.json"
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(
            canonical.canonical_json({"seq": seq, "state": state_doc}), encoding="utf-8"
        )
        os.replace(tmp, path)
        return path

    def latest(self) -> Optional[tuple]:
        candidates = sorted(self.directory.glob("*.json"))
        if not candidates:
            return None
        doc = json.loads(candidates[-1].read_text(encoding="utf-8"))
        return doc["seq"], doc["state"]

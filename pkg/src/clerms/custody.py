"""Content-addressed evidence store with a hash-chained chain of custody.

Evidence bytes live under ``objects/<2-hex>/<62-hex>`` (the full SHA-256 of
the content is the evidence id). Every item carries an append-only custody
chain at ``chains/<evidence_id>.jsonl`` — one canonical-JSON event per line,
each event hash covering the previous event's hash so any in-place edit of
history is detectable. Destruction removes the blob bytes only: metadata,
the chain, and the dual-signed destruction record stay readable forever.
"""

from __future__ import annotations

import os
import tarfile
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import canonical
from .errors import (
    AfterDestruction,
    ChainBroken,
    Destroyed,
    EmptyCase,
    InsufficientAuthorization,
    IntegrityViolation,
    IoFailure,
    NotFound,
    StorageFull,
    UnsupportedFormat,
)

FORMATS = ("raw", "aff4", "deb", "log_archive", "document")
CUSTODY_ACTIONS = ("collected", "stored", "transferred", "examined", "exported", "destroyed")


@dataclass
class EvidenceItem:
    evidence_id: str
    size_bytes: int
    format: str
    source: dict
    created_at: str

    def to_json(self) -> dict:
        return {
            "evidence_id": self.evidence_id,
            "size_bytes": self.size_bytes,
            "format": self.format,
            "source": dict(self.source),
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EvidenceItem":
        return cls(
            evidence_id=doc["evidence_id"],
            size_bytes=int(doc["size_bytes"]),
            format=doc["format"],
            source=dict(doc["source"]),
            created_at=doc["created_at"],
        )


@dataclass
class CustodyEvent:
    seq: int
    evidence_id: str
    action: str
    actor: str
    timestamp: str
    details: str
    prev_hash: str
    event_hash: str = ""

    def body(self) -> dict:
        """Every field except event_hash — the hashed portion."""
        return {
            "seq": self.seq,
            "evidence_id": self.evidence_id,
            "action": self.action,
            "actor": self.actor,
            "timestamp": self.timestamp,
            "details": self.details,
            "prev_hash": self.prev_hash,
        }

    def compute_hash(self) -> str:
        return canonical.sha256_hex(
            canonical.canonical_bytes(self.body()) + self.prev_hash.encode("ascii")
        )

    def sealed(self) -> "CustodyEvent":
        self.event_hash = self.compute_hash()
        return self

    def to_json(self) -> dict:
        doc = self.body()
        doc["event_hash"] = self.event_hash
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "CustodyEvent":
        return cls(
            seq=doc["seq"],
            evidence_id=doc["evidence_id"],
            action=doc["action"],
            actor=doc["actor"],
            timestamp=doc["timestamp"],
            details=doc["details"],
            prev_hash=doc["prev_hash"],
            event_hash=doc["event_hash"],
        )


@dataclass(frozen=True)
class ChainVerification:
    """Outcome of a chain verification: ok, or broken at a 0-based seq."""

    ok: bool
    broken_at: Optional[int] = None

    @classmethod
    def good(cls) -> "ChainVerification":
        return cls(True, None)

    @classmethod
    def broken(cls, seq: int) -> "ChainVerification":
        return cls(False, seq)

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True}
        return {"ok": False, "broken_at": self.broken_at}


@dataclass
class TransportManifest:
    manifest_id: str
    case_id: str
    entries: list  # [{evidence_id, size_bytes, chain_head_hash}]
    recipient: str
    created_at: str
    manifest_hash: str = ""

    def body(self) -> dict:
        return {
            "manifest_id": self.manifest_id,
            "case_id": self.case_id,
            "entries": self.entries,
            "recipient": self.recipient,
            "created_at": self.created_at,
        }

    def sealed(self) -> "TransportManifest":
        self.manifest_hash = canonical.digest_of(self.body())
        return self

    def to_json(self) -> dict:
        doc = self.body()
        doc["manifest_hash"] = self.manifest_hash
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TransportManifest":
        return cls(
            manifest_id=doc["manifest_id"],
            case_id=doc["case_id"],
            entries=list(doc["entries"]),
            recipient=doc["recipient"],
            created_at=doc["created_at"],
            manifest_hash=doc["manifest_hash"],
        )


@dataclass
class DestructionRecord:
    evidence_id: str
    authorized_by: list  # principal ids; dual control requires >= 2 distinct
    reason: str
    destroyed_at: str

    def to_json(self) -> dict:
        return {
            "evidence_id": self.evidence_id,
            "authorized_by": list(self.authorized_by),
            "reason": self.reason,
            "destroyed_at": self.destroyed_at,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DestructionRecord":
        return cls(
            evidence_id=doc["evidence_id"],
            authorized_by=list(doc["authorized_by"]),
            reason=doc["reason"],
            destroyed_at=doc["destroyed_at"],
        )


class EvidenceStore:
    """Filesystem-backed evidence storage. Not rebuilt from the event log:
    the chains themselves are the tamper-evident record."""

    def __init__(self, root, max_bytes: Optional[int] = None):
        self.root = Path(root)
        self.max_bytes = max_bytes
        for sub in ("objects", "chains", "meta", "manifests"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # ---- paths ----------------------------------------------------------

    def _blob_path(self, evidence_id: str) -> Path:
        return self.root / "objects" / evidence_id[:2] / evidence_id[2:]

    def _chain_path(self, evidence_id: str) -> Path:
        return self.root / "chains" / f"{evidence_id}.jsonl"

    def _meta_path(self, evidence_id: str) -> Path:
        return self.root / "meta" / f"{evidence_id}.json"

    def _destruction_path(self, evidence_id: str) -> Path:
        return self.root / "meta" / f"{evidence_id}.destruction.json"

    # ---- lookups --------------------------------------------------------

    def exists(self, evidence_id: str) -> bool:
        return self._meta_path(evidence_id).exists()

    def is_destroyed(self, evidence_id: str) -> bool:
        return self._destruction_path(evidence_id).exists()

    def get_item(self, evidence_id: str) -> EvidenceItem:
        path = self._meta_path(evidence_id)
        if not path.exists():
            raise NotFound(f"no evidence {evidence_id}")
        return EvidenceItem.from_json(_read_json(path))

    def list_ids(self) -> list:
        out = []
        for path in sorted((self.root / "meta").glob("*.json")):
            if path.name.endswith(".destruction.json"):
                continue
            out.append(path.stem)
        return out

    def destruction_record(self, evidence_id: str) -> Optional[DestructionRecord]:
        path = self._destruction_path(evidence_id)
        if not path.exists():
            return None
        return DestructionRecord.from_json(_read_json(path))

    # ---- store / retrieve -----------------------------------------------

    def store(
        self,
        content: bytes,
        format: str = "raw",
        source: Optional[dict] = None,
        actor: str = "system",
        created_at: Optional[str] = None,
    ) -> EvidenceItem:
        if format not in FORMATS:
            raise UnsupportedFormat(f"unknown evidence format {format!r}")
        source = dict(source or {"kind": "upload", "uploader": actor})
        created_at = created_at or canonical.format_ts(canonical.utc_now())
        evidence_id = canonical.sha256_hex(content)

        if self.exists(evidence_id):
            if self.is_destroyed(evidence_id):
                raise AfterDestruction(f"{evidence_id} was destroyed")
            self.append_custody_event(
                evidence_id, "stored", actor, "duplicate deposit of identical content",
                timestamp=created_at,
            )
            return self.get_item(evidence_id)

        if self.max_bytes is not None:
            used = sum(p.stat().st_size for p in (self.root / "objects").rglob("*") if p.is_file())
            if used + len(content) > self.max_bytes:
                raise StorageFull(f"store limited to {self.max_bytes} bytes")

        blob_path = self._blob_path(evidence_id)
        try:
            blob_path.parent.mkdir(parents=True, exist_ok=True)
            tmp = blob_path.with_name(blob_path.name + ".tmp")
            tmp.write_bytes(content)
            os.replace(tmp, blob_path)
        except OSError as exc:
            raise IoFailure(f"blob write failed: {exc}") from exc

        item = EvidenceItem(
            evidence_id=evidence_id,
            size_bytes=len(content),
            format=format,
            source=source,
            created_at=created_at,
        )
        _write_json(self._meta_path(evidence_id), item.to_json())

        if source.get("kind") == "flow":
            detail = f"collected from {source.get('agent_id', '?')}:{source.get('path', '?')}"
            self.append_custody_event(evidence_id, "collected", actor, detail, timestamp=created_at)
        self.append_custody_event(
            evidence_id, "stored", actor, f"{format} object of {len(content)} bytes",
            timestamp=created_at,
        )
        return item

    def retrieve(
        self,
        evidence_id: str,
        examiner: Optional[str] = None,
        timestamp: Optional[str] = None,
    ) -> bytes:
        if not self.exists(evidence_id):
            raise NotFound(f"no evidence {evidence_id}")
        if self.is_destroyed(evidence_id):
            raise Destroyed(f"{evidence_id} was destroyed")
        try:
            content = self._blob_path(evidence_id).read_bytes()
        except FileNotFoundError:
            raise IntegrityViolation(f"blob for {evidence_id} is missing")
        if canonical.sha256_hex(content) != evidence_id:
            raise IntegrityViolation(f"stored bytes no longer hash to {evidence_id}")
        if examiner is not None:
            self.append_custody_event(
                evidence_id, "examined", examiner, "content retrieved for examination",
                timestamp=timestamp,
            )
        return content

    # ---- custody chain ---------------------------------------------------

    def read_chain(self, evidence_id: str) -> list:
        path = self._chain_path(evidence_id)
        if not path.exists():
            raise NotFound(f"no custody chain for {evidence_id}")
        events = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(CustodyEvent.from_json(canonical_loads(line)))
        return events

    def chain_head_hash(self, evidence_id: str) -> str:
        events = self.read_chain(evidence_id)
        return events[-1].event_hash if events else canonical.ZERO_HASH

    def append_custody_event(
        self,
        evidence_id: str,
        action: str,
        actor: str,
        details: str = "",
        timestamp: Optional[str] = None,
    ) -> CustodyEvent:
        if action not in CUSTODY_ACTIONS:
            raise UnsupportedFormat(f"unknown custody action {action!r}")
        path = self._chain_path(evidence_id)
        events = self.read_chain(evidence_id) if path.exists() else []
        if events:
            check = self._verify_events(events)
            if not check.ok:
                raise ChainBroken(check.broken_at)
            if events[-1].action == "destroyed":
                raise AfterDestruction(f"{evidence_id} chain is closed by destruction")
        event = CustodyEvent(
            seq=len(events),
            evidence_id=evidence_id,
            action=action,
            actor=actor,
            timestamp=timestamp or canonical.format_ts(canonical.utc_now()),
            details=details,
            prev_hash=events[-1].event_hash if events else canonical.ZERO_HASH,
        ).sealed()
        try:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(canonical.canonical_json(event.to_json()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoFailure(f"chain append failed: {exc}") from exc
        return event

    def verify_chain(self, evidence_id: str) -> ChainVerification:
        path = self._chain_path(evidence_id)
        if not path.exists():
            raise NotFound(f"no custody chain for {evidence_id}")
        # Decode line by line so a corrupted byte (even one breaking UTF-8)
        # marks that line broken instead of aborting the whole scan.
        raw_lines = [line for line in path.read_bytes().split(b"\n") if line.strip()]
        events = []
        for idx, line in enumerate(raw_lines):
            try:
                events.append(CustodyEvent.from_json(canonical_loads(line.decode("utf-8"))))
            except (ValueError, KeyError, TypeError):
                return ChainVerification.broken(idx)
        return self._verify_events(events)

    @staticmethod
    def _verify_events(events: list) -> ChainVerification:
        prev_hash = canonical.ZERO_HASH
        for idx, event in enumerate(events):
            if event.seq != idx:
                return ChainVerification.broken(idx)
            if event.action not in CUSTODY_ACTIONS:
                return ChainVerification.broken(idx)
            if event.prev_hash != prev_hash:
                return ChainVerification.broken(idx)
            if event.compute_hash() != event.event_hash:
                return ChainVerification.broken(idx)
            if event.action == "destroyed" and idx != len(events) - 1:
                return ChainVerification.broken(idx + 1)
            prev_hash = event.event_hash
        return ChainVerification.good()

    # ---- transport export --------------------------------------------------

    def export_transport_package(
        self,
        case_id: str,
        evidence_ids: list,
        recipient: str,
        actor: str,
        manifest_id: Optional[str] = None,
        created_at: Optional[str] = None,
    ) -> tuple:
        """Returns (TransportManifest, archive path). The archive is a
        deterministic tar: fixed member order, zeroed timestamps and owners,
        so identical inputs produce identical bytes."""
        if not evidence_ids:
            raise EmptyCase("no evidence linked to the case")
        evidence_ids = sorted(set(evidence_ids))
        for evidence_id in evidence_ids:
            if not self.exists(evidence_id):
                raise NotFound(f"no evidence {evidence_id}")
            if self.is_destroyed(evidence_id):
                raise Destroyed(f"{evidence_id} was destroyed")
            check = self.verify_chain(evidence_id)
            if not check.ok:
                raise ChainBroken(check.broken_at, f"{evidence_id} broken at {check.broken_at}")

        created_at = created_at or canonical.format_ts(canonical.utc_now())
        for evidence_id in evidence_ids:
            self.append_custody_event(
                evidence_id, "exported", actor, f"transport package for {recipient}",
                timestamp=created_at,
            )

        entries = []
        for evidence_id in evidence_ids:
            item = self.get_item(evidence_id)
            entries.append(
                {
                    "evidence_id": evidence_id,
                    "size_bytes": item.size_bytes,
                    "chain_head_hash": self.chain_head_hash(evidence_id),
                }
            )
        manifest = TransportManifest(
            manifest_id=manifest_id or str(uuid.uuid4()),
            case_id=case_id,
            entries=entries,
            recipient=recipient,
            created_at=created_at,
        ).sealed()

        manifest_path = self.root / "manifests" / f"{manifest.manifest_id}.json"
        _write_json(manifest_path, manifest.to_json())
        archive_path = self.root / "manifests" / f"{manifest.manifest_id}.tar"
        members = [("manifest.json", canonical.canonical_bytes(manifest.to_json()))]
        for evidence_id in evidence_ids:
            members.append((f"blobs/{evidence_id}", self._blob_path(evidence_id).read_bytes()))
            members.append(
                (f"chains/{evidence_id}.jsonl", self._chain_path(evidence_id).read_bytes())
            )
        _write_deterministic_tar(archive_path, members)
        return manifest, archive_path

    def load_manifest(self, manifest_id: str) -> TransportManifest:
        path = self.root / "manifests" / f"{manifest_id}.json"
        if not path.exists():
            raise NotFound(f"no manifest {manifest_id}")
        return TransportManifest.from_json(_read_json(path))

    # ---- destruction ------------------------------------------------------

    def destroy(
        self,
        evidence_id: str,
        authorized_by: list,
        reason: str,
        destroyed_at: Optional[str] = None,
    ) -> DestructionRecord:
        if len(set(authorized_by)) < 2:
            raise InsufficientAuthorization(
                "destruction requires two distinct authorizing principals"
            )
        if not self.exists(evidence_id):
            raise NotFound(f"no evidence {evidence_id}")
        if self.is_destroyed(evidence_id):
            raise AfterDestruction(f"{evidence_id} already destroyed")
        check = self.verify_chain(evidence_id)
        if not check.ok:
            raise ChainBroken(check.broken_at)

        destroyed_at = destroyed_at or canonical.format_ts(canonical.utc_now())
        record = DestructionRecord(
            evidence_id=evidence_id,
            authorized_by=sorted(set(authorized_by)),
            reason=reason,
            destroyed_at=destroyed_at,
        )
        self.append_custody_event(
            evidence_id,
            "destroyed",
            record.authorized_by[0],
            f"dual-control destruction authorized by {', '.join(record.authorized_by)}: {reason}",
            timestamp=destroyed_at,
        )
        _write_json(self._destruction_path(evidence_id), record.to_json())
        blob = self._blob_path(evidence_id)
        if blob.exists():
            blob.unlink()
        return record

    # ---- full-store audit ---------------------------------------------------

    def audit(self) -> list:
        """Checks every item: blob hash matches id (unless destroyed) and the
        custody chain verifies. Returns a list of problems; empty = clean."""
        problems = []
        for evidence_id in self.list_ids():
            if not self.is_destroyed(evidence_id):
                blob = self._blob_path(evidence_id)
                if not blob.exists():
                    problems.append({"evidence_id": evidence_id, "problem": "blob missing"})
                elif canonical.sha256_hex(blob.read_bytes()) != evidence_id:
                    problems.append({"evidence_id": evidence_id, "problem": "content hash mismatch"})
            try:
                check = self.verify_chain(evidence_id)
            except NotFound:
                problems.append({"evidence_id": evidence_id, "problem": "chain missing"})
                continue
            if not check.ok:
                problems.append(
                    {"evidence_id": evidence_id, "problem": f"chain broken at {check.broken_at}"}
                )
        return problems


# ---- helpers ---------------------------------------------------------------


def canonical_loads(line: str) -> dict:
    """Parse one chain line, insisting on exact canonical form.

    Lines are always written canonically, so a line that parses but is not
    byte-identical to its own canonical serialization has been edited —
    even if the edit is only whitespace the JSON parser would forgive.
    """
    import json

    doc = json.loads(line)
    if not isinstance(doc, dict):
        raise ValueError("not an object")
    if line != canonical.canonical_json(doc):
        raise ValueError("line is not in canonical form")
    return doc


def _read_json(path: Path) -> dict:
    return canonical_loads(path.read_text(encoding="utf-8"))


def _write_json(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(canonical.canonical_json(doc), encoding="utf-8")
    os.replace(tmp, path)


def _write_deterministic_tar(path: Path, members: list) -> None:
    """Tar with fixed member order, zero mtime, zero uid/gid, fixed mode."""
    import io

    tmp = path.with_name(path.name + ".tmp")
    with tarfile.open(tmp, "w", format=tarfile.USTAR_FORMAT) as tar:
        for name, content in members:
            info = tarfile.TarInfo(name=name)
            info.size = len(content)
            info.mtime = 0
            info.uid = info.gid = 0
            info.uname = info.gname = ""
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(content))
    os.replace(tmp, path)

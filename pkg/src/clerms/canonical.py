"""Canonical JSON serialization, UTC timestamps, and hashing helpers.

Every persisted or hashed document in the system goes through
``canonical_json`` so that byte-for-byte reproducibility holds across
processes and platforms: UTF-8, lexicographically sorted keys, no
insignificant whitespace, ASCII-escaped.
"""

from __future__ import annotations

import hashlib
import json
import re
from datetime import datetime, timedelta, timezone
from typing import Any

ZERO_HASH = "0" * 64

_HEX64 = re.compile(r"^[0-9a-f]{64}$")

# Millisecond-precision UTC, e.g. 2026-08-17T09:30:00.000Z
_TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%f"
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$")


def canonical_json(obj: Any) -> str:
    """Serialize to the canonical JSON form shared by hashing and persistence."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_of(obj: Any) -> str:
    """SHA-256 of the canonical JSON of ``obj``."""
    return sha256_hex(canonical_bytes(obj))


def is_hex64(value: Any) -> bool:
    return isinstance(value, str) and bool(_HEX64.match(value))


def utc_now() -> datetime:
    """Current UTC time truncated to millisecond precision."""
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=(now.microsecond // 1000) * 1000)


def format_ts(dt: datetime) -> str:
    """Format as ISO-8601 UTC with exactly millisecond precision."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    dt = dt.replace(microsecond=(dt.microsecond // 1000) * 1000)
    return dt.strftime(_TS_FORMAT)[:-3] + "Z"


def parse_ts(value: str) -> datetime:
    """Parse a canonical millisecond UTC timestamp string."""
    if not isinstance(value, str) or not _TS_RE.match(value):
        raise ValueError(f"not a UTC millisecond timestamp: {value!r}")
    return datetime.strptime(value[:-1], _TS_FORMAT).replace(tzinfo=timezone.utc)


def is_ts(value: Any) -> bool:
    if not isinstance(value, str):
        return False
    try:
        parse_ts(value)
        return True
    except ValueError:
        return False


def ts_add_days(ts: str, days: int) -> str:
    return format_ts(parse_ts(ts) + timedelta(days=days))

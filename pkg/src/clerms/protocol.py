"""Framed wire protocol for the agent channel.

A frame is a 4-byte big-endian length prefix followed by a UTF-8 JSON body
``{"v": 1, "type": <message type>, "payload": {...}}``. The decoder is
total: any byte sequence either decodes to a message or raises one of the
declared protocol errors — it never crashes with anything else.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional

from .errors import FrameTooLarge, MalformedFrame, UnsupportedVersion

PROTOCOL_VERSION = 1
MAX_BODY_BYTES = 16 * 1024 * 1024
CHUNK_BYTES = 1024 * 1024  # fetch streaming chunk; keeps frames far below the cap

MESSAGE_TYPES = (
    "REGISTER",
    "POLL",
    "FLOW_ASSIGN",
    "RESULT_CHUNK",
    "FLOW_DONE",
    "LOG_BATCH",
    "ERROR",
)

_LEN = struct.Struct(">I")


@dataclass
class Message:
    type: str
    payload: dict = field(default_factory=dict)
    v: int = PROTOCOL_VERSION

    def to_json(self) -> dict:
        return {"v": self.v, "type": self.type, "payload": self.payload}


def encode_frame(message: Message) -> bytes:
    if message.type not in MESSAGE_TYPES:
        raise MalformedFrame(f"unknown message type {message.type!r}")
    if not isinstance(message.payload, dict):
        raise MalformedFrame("payload must be an object")
    body = json.dumps(
        message.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=True
    ).encode("utf-8")
    if len(body) > MAX_BODY_BYTES:
        raise FrameTooLarge(f"body of {len(body)} bytes exceeds {MAX_BODY_BYTES}")
    return _LEN.pack(len(body)) + body


def _parse_body(body: bytes) -> Message:
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedFrame(f"body is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"v", "type", "payload"}:
        raise MalformedFrame("body must be an object with v, type, payload")
    if doc["v"] != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"protocol version {doc['v']!r} not supported")
    if doc["type"] not in MESSAGE_TYPES:
        raise MalformedFrame(f"unknown message type {doc['type']!r}")
    if not isinstance(doc["payload"], dict):
        raise MalformedFrame("payload must be an object")
    return Message(type=doc["type"], payload=doc["payload"], v=doc["v"])


def decode_frame(data: bytes) -> Message:
    """Decode one complete frame; the input must be exactly one frame."""
    if not isinstance(data, (bytes, bytearray)) or len(data) < 4:
        raise MalformedFrame("frame shorter than the length prefix")
    (length,) = _LEN.unpack(bytes(data[:4]))
    if length > MAX_BODY_BYTES:
        raise FrameTooLarge(f"declared length {length} exceeds {MAX_BODY_BYTES}")
    if len(data) != 4 + length:
        raise MalformedFrame(f"declared length {length}, got {len(data) - 4} body bytes")
    return _parse_body(bytes(data[4:]))


def read_frame(reader: BinaryIO) -> Optional[Message]:
    """Read one frame from a blocking stream. Returns None on clean EOF."""
    prefix = _read_exact(reader, 4)
    if prefix is None:
        return None
    (length,) = _LEN.unpack(prefix)
    if length > MAX_BODY_BYTES:
        raise FrameTooLarge(f"declared length {length} exceeds {MAX_BODY_BYTES}")
    body = _read_exact(reader, length)
    if body is None:
        raise MalformedFrame("stream ended inside a frame body")
    return _parse_body(body)


def write_frame(writer: BinaryIO, message: Message) -> None:
    writer.write(encode_frame(message))
    writer.flush()


def _read_exact(reader: BinaryIO, count: int) -> Optional[bytes]:
    """None on EOF at a frame boundary; MalformedFrame mid-frame."""
    chunks = []
    remaining = count
    while remaining:
        chunk = reader.read(remaining)
        if not chunk:
            if remaining == count:
                return None
            raise MalformedFrame("stream ended inside a frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks) if chunks else b""


# Message constructors — the payload shapes both ends agree on.


def msg_register(hostname: str, os_name: str, labels: list, agent_id: Optional[str] = None) -> Message:
    payload = {"hostname": hostname, "os": os_name, "labels": labels}
    if agent_id is not None:
        payload["agent_id"] = agent_id
    return Message("REGISTER", payload)


def msg_poll(agent_id: str) -> Message:
    return Message("POLL", {"agent_id": agent_id})


def msg_flow_assign(flows: list) -> Message:
    return Message("FLOW_ASSIGN", {"flows": flows})


def msg_result_chunk(
    flow_id: str, path: str, offset: int, data_b64: str, total_size: int, sha256: str
) -> Message:
    return Message(
        "RESULT_CHUNK",
        {
            "flow_id": flow_id,
            "path": path,
            "offset": offset,
            "data": data_b64,
            "total_size": total_size,
            "sha256": sha256,
        },
    )


def msg_flow_done(
    flow_id: str, status: str, items: list, error: Optional[str] = None
) -> Message:
    payload = {"flow_id": flow_id, "status": status, "items": items}
    if error is not None:
        payload["error"] = error
    return Message("FLOW_DONE", payload)


def msg_log_batch(agent_id: str, records: list) -> Message:
    return Message("LOG_BATCH", {"agent_id": agent_id, "records": records})


def msg_error(name: str, detail: str = "") -> Message:
    return Message("ERROR", {"error": name, "detail": detail})

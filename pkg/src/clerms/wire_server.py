"""TCP server side of the agent protocol.

One thread per agent connection; each request frame gets exactly one reply
frame (the same type echoed back, or ERROR). Fetched file chunks are
buffered per (flow, path) and assembled into evidence when FLOW_DONE lands.
"""

from __future__ import annotations

import base64
import logging
import socketserver
import threading

from .errors import ClermsError
from .protocol import (
    Message,
    msg_error,
    read_frame,
    write_frame,
)

log = logging.getLogger(__name__)


class _ChunkBuffer:
    """Reassembles one file from RESULT_CHUNK frames (offset-ordered)."""

    def __init__(self, total_size: int, sha256: str):
        self.total_size = total_size
        self.sha256 = sha256
        self.parts = []
        self.received = 0

    def add(self, offset: int, data: bytes) -> None:
        if offset != self.received:
            raise ClermsError(f"chunk out of order: offset {offset}, expected {self.received}")
        self.parts.append(data)
        self.received += len(data)
        if self.received > self.total_size:
            raise ClermsError(f"chunks exceed declared size {self.total_size}")

    def assemble(self) -> bytes:
        content = b"".join(self.parts)
        if len(content) != self.total_size:
            raise ClermsError(
                f"file incomplete: {len(content)} of {self.total_size} bytes received"
            )
        return content


class AgentConnectionHandler(socketserver.BaseRequestHandler):
    def setup(self):
        self.reader = self.request.makefile("rb")
        self.writer = self.request.makefile("wb")
        self.buffers = {}  # (flow_id, path) -> _ChunkBuffer

    def finish(self):
        self.reader.close()
        self.writer.close()

    def handle(self):
        service = self.server.service
        while True:
            try:
                message = read_frame(self.reader)
            except ClermsError as exc:
                self._reply(msg_error(type(exc).__name__, str(exc)))
                return  # framing is broken; drop the connection
            if message is None:
                return
            try:
                reply = self._dispatch(service, message)
            except ClermsError as exc:
                reply = msg_error(type(exc).__name__, str(exc))
            except Exception:
                log.exception("agent connection handler failed")
                reply = msg_error("InternalError", "unexpected server failure")
            self._reply(reply)

    def _reply(self, message: Message) -> None:
        try:
            write_frame(self.writer, message)
        except (OSError, ValueError):
            pass  # peer went away mid-reply

    def _dispatch(self, service, message: Message) -> Message:
        payload = message.payload
        if message.type == "REGISTER":
            agent = service.register_agent(
                payload.get("hostname", ""),
                payload.get("os", ""),
                payload.get("labels", []),
                agent_id=payload.get("agent_id"),
            )
            return Message("REGISTER", {"agent": agent})

        if message.type == "POLL":
            flows = service.poll_flows(payload.get("agent_id", ""))
            return Message("FLOW_ASSIGN", {"flows": flows})

        if message.type == "RESULT_CHUNK":
            key = (payload["flow_id"], payload["path"])
            buffer = self.buffers.get(key)
            if buffer is None:
                buffer = self.buffers[key] = _ChunkBuffer(
                    payload["total_size"], payload["sha256"]
                )
            buffer.add(payload["offset"], base64.b64decode(payload["data"]))
            return Message(
                "RESULT_CHUNK",
                {"flow_id": payload["flow_id"], "path": payload["path"], "received": buffer.received},
            )

        if message.type == "FLOW_DONE":
            flow_id = payload["flow_id"]
            fetched = []
            for (buffered_flow, path), buffer in sorted(self.buffers.items()):
                if buffered_flow == flow_id:
                    fetched.append((path, buffer.assemble(), buffer.sha256))
            self.buffers = {
                key: buf for key, buf in self.buffers.items() if key[0] != flow_id
            }
            flow = service.complete_flow(
                flow_id,
                payload.get("status", "failed"),
                payload.get("items", []),
                error=payload.get("error"),
                fetched=fetched or None,
            )
            return Message("FLOW_DONE", {"flow_id": flow_id, "status": flow["status"]})

        if message.type == "LOG_BATCH":
            result = service.ingest_logs(payload.get("records", []))
            return Message(
                "LOG_BATCH", {"accepted": result["accepted"], "rejected": result["rejected"]}
            )

        return msg_error("MalformedFrame", f"unexpected message type {message.type}")


class AgentWireServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, service):
        super().__init__(address, AgentConnectionHandler)
        self.service = service

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_wire_server(service, host: str = "127.0.0.1", port: int = 0) -> AgentWireServer:
    """Start the agent endpoint on a background thread; port 0 picks a free one."""
    server = AgentWireServer((host, port), service)
    thread = threading.Thread(target=server.serve_forever, name="agent-wire", daemon=True)
    thread.start()
    return server

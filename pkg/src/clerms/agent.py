"""Endpoint agent simulator: executes collection flows against a sandbox.

The agent sees a directory as its filesystem root, so a flow glob like
``/var/lib/mysql/**`` resolves inside the sandbox while results report the
remote-style absolute paths. File contents leave the agent in 1 MiB chunks,
each carrying the file's full SHA-256 so the server can verify what landed.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import socket
from pathlib import Path
from typing import Iterator, Optional

from .errors import AgentIoError, PathEscape
from .protocol import (
    CHUNK_BYTES,
    Message,
    msg_flow_done,
    msg_log_batch,
    msg_poll,
    msg_register,
    msg_result_chunk,
    read_frame,
    write_frame,
)

DISK_IMAGE_ERROR = "DiskImage acquisition is not supported in prototype"


# ---- glob matching ----------------------------------------------------------


def compile_glob(pattern: str):
    """Regex for an absolute glob: ``*`` within a segment, ``**`` across."""
    if not isinstance(pattern, str) or not pattern.startswith("/"):
        raise PathEscape(f"glob must be absolute: {pattern!r}")
    segments = [s for s in pattern.split("/") if s]
    if ".." in segments:
        raise PathEscape(f"glob must not traverse upward: {pattern!r}")
    parts = []
    last = len(segments) - 1
    for index, segment in enumerate(segments):
        if segment == "**":
            # trailing ** swallows the rest of the path; a middle ** spans
            # zero or more whole segments
            parts.append("(?:[^/]+/)*[^/]+" if index == last else "(?:[^/]+/)*")
            continue
        escaped = re.escape(segment).replace(r"\*", "[^/]*")
        parts.append(escaped if index == last else escaped + "/")
    return re.compile("^/" + "".join(parts) + "$")


def match_glob(pattern: str, path: str) -> bool:
    return compile_glob(pattern).match(path) is not None


# ---- local flow execution ------------------------------------------------------


def iter_sandbox_files(root) -> Iterator[tuple]:
    """(remote_path, local_path) for every regular file under the sandbox."""
    root = Path(root).resolve()
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in sorted(filenames):
            local = Path(dirpath) / name
            if not local.is_file():  # broken link, fifo, device
                continue
            if local.is_symlink():
                resolved = local.resolve()
                if not str(resolved).startswith(str(root) + os.sep):
                    raise PathEscape(f"{local} escapes the sandbox")
            remote = "/" + str(local.relative_to(root)).replace(os.sep, "/")
            yield remote, local


def run_file_finder(root, glob: str, action: str):
    """Match files, produce items per the action; fetch also returns contents.

    Returns ``(items, fetches)`` where fetches is a list of (remote_path,
    bytes) pairs, non-empty only for action="fetch".
    """
    matcher = compile_glob(glob)
    items = []
    fetches = []
    for remote, local in iter_sandbox_files(root):
        if not matcher.match(remote):
            continue
        try:
            size = local.stat().st_size
        except OSError as exc:
            raise AgentIoError(f"cannot stat {remote}: {exc}")
        item = {"path": remote, "size_bytes": size}
        if action in ("hash", "fetch"):
            try:
                content = local.read_bytes()
            except OSError as exc:
                raise AgentIoError(f"cannot read {remote}: {exc}")
            item["sha256"] = hashlib.sha256(content).hexdigest()
            if action == "fetch":
                fetches.append((remote, content))
        items.append(item)
    items.sort(key=lambda i: i["path"])
    fetches.sort(key=lambda f: f[0])
    return items, fetches


def run_process_list(processes_file):
    """Process table from a JSON fixture: [{pid, name, cmdline, remote_endpoints}]."""
    try:
        table = json.loads(Path(processes_file).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise AgentIoError(f"cannot read process table: {exc}")
    if not isinstance(table, list):
        raise AgentIoError("process table must be a JSON array")
    items = []
    for row in table:
        items.append(
            {
                "pid": row.get("pid"),
                "name": row.get("name", ""),
                "cmdline": row.get("cmdline", ""),
                "remote_endpoints": list(row.get("remote_endpoints", [])),
            }
        )
    return items


# ---- the wire client ------------------------------------------------------------


class AgentSim:
    """Socket client: registers, polls for flows, executes, reports results."""

    def __init__(
        self,
        server: tuple,
        root,
        hostname: str = "sim-host",
        os_name: str = "linux",
        labels: Optional[list] = None,
        processes_file=None,
        agent_id: Optional[str] = None,
    ):
        self.server = server
        self.root = Path(root)
        self.hostname = hostname
        self.os_name = os_name
        self.labels = list(labels or [])
        self.processes_file = processes_file
        self.agent_id = agent_id
        self._sock = None
        self._reader = None
        self._writer = None

    # -- connection --

    def connect(self) -> None:
        self._sock = socket.create_connection(self.server)
        self._reader = self._sock.makefile("rb")
        self._writer = self._sock.makefile("wb")

    def close(self) -> None:
        for closable in (self._reader, self._writer, self._sock):
            if closable is not None:
                closable.close()
        self._sock = self._reader = self._writer = None

    def __enter__(self) -> "AgentSim":
        self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _call(self, message: Message) -> Message:
        write_frame(self._writer, message)
        reply = read_frame(self._reader)
        if reply is None:
            raise AgentIoError("server closed the connection")
        if reply.type == "ERROR":
            raise AgentIoError(
                f"server error {reply.payload.get('error')}: {reply.payload.get('detail')}"
            )
        return reply

    # -- protocol steps --

    def register(self) -> str:
        reply = self._call(
            msg_register(self.hostname, self.os_name, self.labels, agent_id=self.agent_id)
        )
        self.agent_id = reply.payload["agent"]["agent_id"]
        return self.agent_id

    def poll(self) -> list:
        reply = self._call(msg_poll(self.agent_id))
        return reply.payload.get("flows", [])

    def send_logs(self, records: list) -> dict:
        reply = self._call(msg_log_batch(self.agent_id, records))
        return reply.payload

    def execute_flow(self, flow: dict) -> dict:
        """Run one flow locally and stream results back; returns the DONE ack."""
        flow_id = flow["flow_id"]
        kind = flow["kind"]
        if kind == "DiskImage":
            return self._done(flow_id, "failed", [], error=DISK_IMAGE_ERROR)
        if kind == "ProcessList":
            if self.processes_file is None:
                return self._done(flow_id, "failed", [], error="no process table on this host")
            try:
                items = run_process_list(self.processes_file)
            except AgentIoError as exc:
                return self._done(flow_id, "failed", [], error=str(exc))
            return self._done(flow_id, "complete", items)
        if kind == "FileFinder":
            try:
                items, fetches = run_file_finder(self.root, flow["glob"], flow["action"])
            except (PathEscape, AgentIoError) as exc:
                return self._done(flow_id, "failed", [], error=str(exc))
            for path, content in fetches:
                self._stream_file(flow_id, path, content)
            return self._done(flow_id, "complete", items)
        return self._done(flow_id, "failed", [], error=f"unknown flow kind {kind!r}")

    def _stream_file(self, flow_id: str, path: str, content: bytes) -> None:
        total = len(content)
        digest = hashlib.sha256(content).hexdigest()
        offset = 0
        while True:
            chunk = content[offset : offset + CHUNK_BYTES]
            self._call(
                msg_result_chunk(
                    flow_id,
                    path,
                    offset,
                    base64.b64encode(chunk).decode("ascii"),
                    total,
                    digest,
                )
            )
            offset += len(chunk)
            if offset >= total:
                break

    def _done(self, flow_id: str, status: str, items: list, error: Optional[str] = None) -> dict:
        reply = self._call(msg_flow_done(flow_id, status, items, error=error))
        return reply.payload

    # -- top-level driving --

    def run_until_idle(self, max_polls: int = 3) -> int:
        """Register if needed, then poll and execute until a poll comes back empty."""
        if self._sock is None:
            self.connect()
        if self.agent_id is None:
            self.register()
        else:
            self.register()  # re-register keeps the same id, refreshes last_seen
        executed = 0
        for _ in range(max_polls):
            flows = self.poll()
            if not flows:
                break
            for flow in flows:
                self.execute_flow(flow)
                executed += 1
        return executed

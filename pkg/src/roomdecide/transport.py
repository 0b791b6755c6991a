"""Newline-delimited JSON messages between agents and a pronouncer.

Request::

    {"template": "heating", "bindings": {...}, "requester": "room-1"}

Response::

    {"action": "...", "eu": -8.9, "action_values": {...}, "filtered_out": [...]}

or ``{"error": "...", "kind": "UnknownTemplateError"}``. One message per
line, UTF-8. The same codec runs over any byte stream; :func:`serve_unix`
exposes a pronouncer on a local Unix socket.
"""
from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
from typing import BinaryIO

from .pronouncer import Advice, Pronouncer, PronouncerError, Query

log = logging.getLogger(__name__)


class ProtocolError(ValueError):
    pass


class RemoteError(RuntimeError):
    """The pronouncer answered with an error message."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


def _line(obj: dict) -> bytes:
    return (json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def _parse(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed message: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    return obj


def encode_request(q: Query) -> bytes:
    return _line({"template": q.template_id, "bindings": dict(q.bindings), "requester": q.requester})


def decode_request(line: bytes | str) -> Query:
    obj = _parse(line)
    try:
        template = obj["template"]
        bindings = obj["bindings"]
    except KeyError as exc:
        raise ProtocolError(f"request lacks {exc.args[0]!r}") from None
    if not isinstance(bindings, dict):
        raise ProtocolError("bindings must be an object")
    return Query(template, bindings, obj.get("requester", "anonymous"))


def encode_response(advice: Advice) -> bytes:
    return _line(advice.to_dict())


def encode_error(exc: BaseException) -> bytes:
    return _line({"error": str(exc), "kind": type(exc).__name__})


def decode_response(line: bytes | str) -> Advice:
    obj = _parse(line)
    if "error" in obj:
        raise RemoteError(obj.get("kind", "Error"), obj["error"])
    try:
        return Advice(obj["action"], float(obj["eu"]), dict(obj["action_values"]),
                      list(obj["filtered_out"]))
    except KeyError as exc:
        raise ProtocolError(f"response lacks {exc.args[0]!r}") from None


def answer(pronouncer: Pronouncer, line: bytes | str) -> bytes:
    """Handle one request line and produce one response line; never raises."""
    try:
        return encode_response(pronouncer.pronounce(decode_request(line)))
    except (ProtocolError, PronouncerError, ValueError) as exc:
        return encode_error(exc)


def handle_stream(pronouncer: Pronouncer, rfile: BinaryIO, wfile: BinaryIO) -> int:
    """Answer requests from ``rfile`` until EOF. Returns the number handled."""
    n = 0
    for line in rfile:
        if not line.strip():
            continue
        wfile.write(answer(pronouncer, line))
        wfile.flush()
        n += 1
    return n


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        handle_stream(self.server.pronouncer, self.rfile, self.wfile)


class PronouncerServer(socketserver.ThreadingMixIn, socketserver.UnixStreamServer):
    daemon_threads = True

    def __init__(self, path: str, pronouncer: Pronouncer):
        self.pronouncer = pronouncer
        super().__init__(path, _Handler)


def serve_unix(pronouncer: Pronouncer, path: str) -> tuple[PronouncerServer, threading.Thread]:
    """Start serving on a Unix socket in a background thread.

    Call ``server.shutdown(); server.server_close()`` to stop.
    """
    server = PronouncerServer(path, pronouncer)
    thread = threading.Thread(target=server.serve_forever, name="pronouncer", daemon=True)
    thread.start()
    log.info("pronouncer listening on %s", path)
    return server, thread


class PronouncerClient:
    """Blocking client for :func:`serve_unix`; one connection, one request at a time."""

    def __init__(self, path: str, timeout: float = 10.0):
        self._sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        self._sock.settimeout(timeout)
        self._sock.connect(path)
        self._r = self._sock.makefile("rb")
        self._lock = threading.Lock()

    def pronounce(self, q: Query) -> Advice:
        with self._lock:
            self._sock.sendall(encode_request(q))
            line = self._r.readline()
        if not line:
            raise ProtocolError("connection closed by pronouncer")
        return decode_response(line)

    def close(self) -> None:
        self._r.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

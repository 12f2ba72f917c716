"""Local HTTP server replaying a generated fixture store.

One server answers for every synthetic host in the store by routing on the
Host header; auditors reach it through the transport's resolve override.
Endpoint pages enforce their scripted auth behavior, and every request is
appended to an in-process log so tests can assert politeness and request
budgets.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qsl, urlsplit

from .errors import PortUnavailable
from .fixtures import HOSTS_FILE


@dataclass(frozen=True)
class LoggedRequest:
    timestamp: float
    host: str
    method: str
    path: str
    query: dict
    headers: dict

    @property
    def authorized(self) -> bool:
        return "authorization" in self.headers


class FixtureServer:
    """Serves a fixture store directory on 127.0.0.1.

    ``stall_seconds`` is how long hosts marked unresponsive sleep before
    answering; point an auditor at the server with a client timeout below
    that value to exercise its timeout handling.
    """

    def __init__(self, store_dir, port: int = 0, stall_seconds: float = 5.0):
        self.store_dir = Path(store_dir)
        with open(self.store_dir / HOSTS_FILE, encoding="utf-8") as handle:
            self.hosts = json.load(handle)
        self.stall_seconds = stall_seconds
        self._log: list = []
        self._log_lock = threading.Lock()
        self._counters: dict = {}
        self._counter_lock = threading.Lock()
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None
        self._requested_port = port

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> "FixtureServer":
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):  # quiet
                pass

            def do_GET(self):
                server._handle(self)

            def do_POST(self):
                server._handle(self)

        try:
            self._httpd = ThreadingHTTPServer(("127.0.0.1", self._requested_port), Handler)
        except OSError as exc:
            raise PortUnavailable(f"cannot bind port {self._requested_port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def __enter__(self) -> "FixtureServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    @property
    def port(self) -> int:
        if self._httpd is None:
            raise RuntimeError("server not started")
        return self._httpd.server_address[1]

    @property
    def address(self) -> str:
        return f"127.0.0.1:{self.port}"

    def resolve_map(self) -> dict:
        """Transport resolve override sending every host here."""
        return {"*": self.address}

    # -- request log ------------------------------------------------------------

    def request_log(self) -> list:
        with self._log_lock:
            return list(self._log)

    def clear_log(self) -> None:
        with self._log_lock:
            self._log.clear()

    def dump_log(self, path) -> None:
        entries = self.request_log()
        with open(path, "w", encoding="utf-8") as handle:
            for entry in entries:
                handle.write(json.dumps({
                    "timestamp": entry.timestamp,
                    "host": entry.host,
                    "method": entry.method,
                    "path": entry.path,
                    "query": entry.query,
                    "headers": entry.headers,
                }, sort_keys=True) + "\n")

    # -- request handling -------------------------------------------------------

    def _next_count(self, host: str, path: str) -> int:
        with self._counter_lock:
            key = (host, path)
            count = self._counters.get(key, 0)
            self._counters[key] = count + 1
            return count

    def _handle(self, handler: BaseHTTPRequestHandler) -> None:
        parts = urlsplit(handler.path)
        host = (handler.headers.get("Host") or "").split(":")[0].lower()
        headers = {k.lower(): v for k, v in handler.headers.items()}
        # Drain any request body so keep-alive connections stay in sync.
        length = int(headers.get("content-length") or 0)
        if length:
            handler.rfile.read(length)
        entry = LoggedRequest(
            timestamp=time.monotonic(),
            host=host,
            method=handler.command,
            path=parts.path,
            query=dict(parse_qsl(parts.query)),
            headers=headers,
        )
        with self._log_lock:
            self._log.append(entry)

        config = self.hosts.get(host)
        if config is None:
            self._send(handler, 404, "unknown host", "text/plain")
            return
        if config.get("timeout"):
            time.sleep(self.stall_seconds)
            self._send(handler, 504, "gateway timeout", "text/plain")
            return

        page = config.get("pages", {}).get(parts.path)
        if page is None:
            self._send(handler, 404, "not found", "text/plain")
            return

        gate = page.get("gate_token")
        if gate and headers.get("authorization") != f"Bearer {gate}":
            self._send(handler, 401, "unauthorized", "text/plain")
            return

        script = page.get("script")
        if script:
            # Cycle, so any window of >= 2 attempts sees the flapping
            # behavior regardless of how often the endpoint was hit before.
            count = self._next_count(host, parts.path)
            step = script[count % len(script)]
            self._send(handler, step.get("status", 200), step.get("body", ""),
                       step.get("content_type", "text/plain"))
            return

        if page.get("echo"):
            payload = {"ok": True, "echo": dict(sorted(entry.query.items()))}
            self._send(handler, 200, json.dumps(payload, sort_keys=True), "application/json")
            return

        self._send(handler, page.get("status", 200), page.get("body", ""),
                   page.get("content_type", "text/plain"))

    @staticmethod
    def _send(handler: BaseHTTPRequestHandler, status: int, body: str, content_type: str) -> None:
        data = body.encode("utf-8")
        try:
            handler.send_response(status)
            handler.send_header("Content-Type", content_type)
            handler.send_header("Content-Length", str(len(data)))
            handler.end_headers()
            handler.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client gave up (expected for stalled hosts)


def serve(store_dir, port: int = 0, stall_seconds: float = 5.0) -> FixtureServer:
    """Start a fixture server and return the running instance."""
    return FixtureServer(store_dir, port=port, stall_seconds=stall_seconds).start()

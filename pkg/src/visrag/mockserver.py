"""Standalone mock server speaking the generate protocol.

Serves POST /v1/generate with a deterministic behavior so end-to-end runs
and wire-level tests need no model weights. --fail-first N makes the first
N requests fail with 503 to exercise client retries.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .llm import GENERATE_PATH, EchoFirstContextSpecies, FixedText, Scripted


def behavior_from_args(name: str, text: str = "", scripted: dict | None = None):
    if name == "echo":
        return EchoFirstContextSpecies()
    if name == "fixed":
        return FixedText(text)
    if name == "scripted":
        return Scripted(scripted or {})
    raise ValueError(f"unknown mock behavior {name!r}")


class MockLlmServer:
    """Threaded HTTP server wrapping a mock behavior.

    Usable as a context manager in tests; .url is the base endpoint.
    """

    def __init__(self, behavior, host: str = "127.0.0.1", port: int = 0, fail_first: int = 0):
        self.behavior = behavior
        self._fail_remaining = fail_first
        self._lock = threading.Lock()
        self.request_count = 0
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # keep test output quiet
                pass

            def _send(self, status: int, payload: dict):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/healthz":
                    self._send(200, {"ok": True})
                else:
                    self._send(404, {"error": "not found"})

            def do_POST(self):
                # drain the body first: with keep-alive, unread bytes would
                # corrupt the next request on the same connection
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length)
                if self.path != GENERATE_PATH:
                    self._send(404, {"error": "not found"})
                    return
                with server._lock:
                    server.request_count += 1
                    if server._fail_remaining > 0:
                        server._fail_remaining -= 1
                        self._send(503, {"error": "transient failure"})
                        return
                try:
                    data = json.loads(body.decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    self._send(400, {"error": "body is not valid JSON"})
                    return
                prompt = data.get("prompt") if isinstance(data, dict) else None
                if not isinstance(prompt, str) or not prompt:
                    self._send(400, {"error": "prompt must be a non-empty string"})
                    return
                self._send(200, {"text": server.behavior.respond(prompt)})

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc_info):
        self.stop()

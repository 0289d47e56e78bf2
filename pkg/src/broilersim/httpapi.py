"""HTTP surface for the telemetry store.

Routes (JSON bodies unless noted; auth via the ``X-Auth-Token`` header,
checked before any state or parameter is touched):

    POST /v1/variables/{id}/values        {"value": <num>, "ts": <int>}
    GET  /v1/variables/{id}/values?start=&end=
    GET  /v1/variables/{id}/export.csv?start=&end=   (text/csv)
    GET  /v1/snapshot
    POST /v1/commands                     {"kind": <str>, "payload": ...}

Runs on the stdlib threading server so concurrent dashboard polls and
gateway posts are fine; the store's own lock serializes writers.
CORS is wide open so the operator dashboard can be served from anywhere.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import service

_VALUES_RE = re.compile(r"^/v1/variables/([^/]+)/values$")
_EXPORT_RE = re.compile(r"^/v1/variables/([^/]+)/export\.csv$")

_CORS_HEADERS = {
    "Access-Control-Allow-Origin": "*",
    "Access-Control-Allow-Headers": "Content-Type, X-Auth-Token",
    "Access-Control-Allow-Methods": "GET, POST, OPTIONS",
}

_INDEX_HTML = b"""<!doctype html>
<html><head><title>broilersim telemetry service</title></head>
<body><h1>broilersim telemetry service</h1>
<p>API under <code>/v1/</code>; authenticate with the
<code>X-Auth-Token</code> header. See the project README for the
operator dashboard.</p></body></html>
"""


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    store: service.TelemetryStore  # set by make_server

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for key, value in _CORS_HEADERS.items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload) -> None:
        self._send(status, json.dumps(payload).encode("utf-8"),
                   "application/json")

    def _fail(self, exc: Exception) -> None:
        if isinstance(exc, service.AuthError):
            self._send_json(401, {"error": str(exc)})
        elif isinstance(exc, service.NotFoundError):
            self._send_json(404, {"error": str(exc)})
        elif isinstance(exc, service.ValidationError):
            self._send_json(400, {"error": str(exc)})
        else:
            self._send_json(500, {"error": f"internal: {exc}"})

    def _token(self) -> str:
        return self.headers.get("X-Auth-Token", "")

    def _auth(self) -> bool:
        """Reject bad tokens up front, before any routing touches state."""
        try:
            self.store._check_token(self._token())
            return True
        except service.AuthError as exc:
            self._fail(exc)
            return False

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise service.ValidationError(f"body is not valid JSON: {exc}")
        if not isinstance(body, dict):
            raise service.ValidationError("body must be a JSON object")
        return body

    @staticmethod
    def _time_range(query: dict) -> tuple[float, float]:
        def pick(name, default):
            values = query.get(name)
            if not values:
                return default
            try:
                return float(values[0])
            except ValueError:
                raise service.ValidationError(
                    f"{name} must be numeric, got {values[0]!r}")
        return pick("start", float("-inf")), pick("end", float("inf"))

    # -- methods ------------------------------------------------------------

    def do_OPTIONS(self):
        self._send(204, b"", "text/plain")

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/":
            self._send(200, _INDEX_HTML, "text/html")
            return
        if not self._auth():
            return
        try:
            query = parse_qs(url.query)
            if url.path == "/v1/snapshot":
                self._send_json(200, self.store.latest_snapshot(self._token()))
                return
            match = _VALUES_RE.match(url.path)
            if match:
                t1, t2 = self._time_range(query)
                points = self.store.query_series(match.group(1), t1, t2)
                self._send_json(200, {
                    "variable_id": match.group(1),
                    "points": [{"ts": p.ts, "value": p.value} for p in points],
                })
                return
            match = _EXPORT_RE.match(url.path)
            if match:
                t1, t2 = self._time_range(query)
                body = self.store.export_csv(match.group(1), t1, t2)
                self._send(200, body, "text/csv")
                return
            self._send_json(404, {"error": f"no route for {url.path}"})
        except service.ServiceError as exc:
            self._fail(exc)

    def do_POST(self):
        url = urlparse(self.path)
        if not self._auth():
            return
        try:
            match = _VALUES_RE.match(url.path)
            if match:
                body = self._read_body()
                point = self.store.post_value(
                    self._token(), match.group(1),
                    body.get("value"), body.get("ts", 0))
                self._send_json(201, {
                    "variable_id": point.variable_id,
                    "ts": point.ts,
                    "value": point.value,
                    "seq": point.seq,
                })
                return
            if url.path == "/v1/commands":
                body = self._read_body()
                cmd = service.OperatorCommand(
                    kind=body.get("kind", ""),
                    payload=body.get("payload"),
                    issued_at=self.store.clock,
                )
                self._send_json(202, self.store.submit_command(
                    self._token(), cmd))
                return
            self._send_json(404, {"error": f"no route for {url.path}"})
        except service.ServiceError as exc:
            self._fail(exc)


def make_server(store: service.TelemetryStore, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server bound to ``host:port``."""
    handler = type("BoundHandler", (_Handler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


class ServiceServer:
    """Background-thread lifecycle wrapper around :func:`make_server`."""

    def __init__(self, store: service.TelemetryStore, host: str = "127.0.0.1",
                 port: int = 0):
        self.httpd = make_server(store, host, port)
        self._thread = threading.Thread(
            target=self.httpd.serve_forever, name="telemetry-http", daemon=True)

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "ServiceServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

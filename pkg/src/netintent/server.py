"""HTTP surface: JSON-RPC tool gateway plus the operator API.

Single ThreadingHTTPServer; handlers serialize domain access through the
stack lock. Intent traces stream as server-sent events with Last-Event-ID
resume so a reloaded console reconstructs the identical view.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from .bus import EventFilter, WebhookSink
from .errors import DomainError, NotFoundError, ValidationError
from .gateway import handle_rpc_bytes
from .stack import Stack

SSE_POLL_S = 0.25
_TERMINAL = ("done", "failed", "stopped")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".mjs": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class StackServer:
    def __init__(self, stack: Stack, host: str | None = None, port: int | None = None):
        self.stack = stack
        host = host if host is not None else stack.config.host
        port = port if port is not None else stack.config.port
        handler = _make_handler(stack)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self.host, self.port = self.httpd.server_address[0], self.httpd.server_address[1]
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


def _make_handler(stack: Stack):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args: Any) -> None:  # quiet by default
            pass

        # -- plumbing -------------------------------------------------------

        def _send_json(self, obj: Any, status: int = 200) -> None:
            body = json.dumps(obj, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, exc: Exception) -> None:
            status = 404 if isinstance(exc, NotFoundError) else 400
            if not isinstance(exc, DomainError):
                status = 500
            self._send_json({"error": f"{exc}"}, status=status)

        def _read_body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length) if length else b""

        def _read_json(self) -> Any:
            body = self._read_body()
            if not body:
                return {}
            try:
                return json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ValidationError(f"invalid JSON body: {exc}") from exc

        # -- routing --------------------------------------------------------

        def do_OPTIONS(self) -> None:  # CORS preflight for cross-origin consoles
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self) -> None:
            try:
                self._route_post()
            except DomainError as exc:
                self._send_error_json(exc)
            except Exception as exc:
                self._send_json({"error": f"internal: {exc}"}, status=500)

        def do_GET(self) -> None:
            try:
                self._route_get()
            except DomainError as exc:
                self._send_error_json(exc)
            except (BrokenPipeError, ConnectionResetError):
                pass
            except Exception as exc:
                self._send_json({"error": f"internal: {exc}"}, status=500)

        def do_DELETE(self) -> None:
            try:
                self._route_delete()
            except DomainError as exc:
                self._send_error_json(exc)
            except Exception as exc:
                self._send_json({"error": f"internal: {exc}"}, status=500)

        def _route_post(self) -> None:
            path = urlparse(self.path).path
            if path == "/rpc":
                response = handle_rpc_bytes(stack.registry, self._read_body())
                self._send_json(response)
                return
            if path == "/intents":
                payload = self._read_json()
                text = payload.get("text") if isinstance(payload, dict) else None
                if not isinstance(text, str) or not text.strip():
                    raise ValidationError("body must be {\"text\": \"<intent>\"}")
                run = stack.submit_intent(text)
                self._send_json({"intent_id": run.intent_id}, status=201)
                return
            m = re.fullmatch(r"/intents/([^/]+)/stop", path)
            if m:
                run = stack.stop_intent(m.group(1))
                self._send_json(run.status_obj())
                return
            m = re.fullmatch(r"/approvals/([^/]+)", path)
            if m:
                payload = self._read_json()
                decision = payload.get("decision") if isinstance(payload, dict) else None
                if decision not in ("approve", "deny"):
                    raise ValidationError("body must be {\"decision\": \"approve\"|\"deny\"}")
                with stack.lock:
                    token = stack.approvals.resolve(m.group(1), decision)
                self._send_json(token.to_json_obj())
                return
            if path == "/clock/advance":
                payload = self._read_json()
                duration = payload.get("duration_ms") if isinstance(payload, dict) else None
                if not isinstance(duration, int):
                    raise ValidationError("body must be {\"duration_ms\": <int>}")
                now = stack.advance_clock(duration)
                self._send_json({"now_ms": now, "now_iso": stack.clock.iso()})
                return
            if path == "/subscriptions":
                payload = self._read_json()
                sink_spec = payload.get("sink") if isinstance(payload, dict) else None
                if not isinstance(sink_spec, dict) or sink_spec.get("kind") != "webhook":
                    raise ValidationError("sink must be {\"kind\": \"webhook\", \"url\": ...}")
                sink = WebhookSink(sink_spec.get("url", ""))
                filt = EventFilter.from_json_obj(payload.get("filter", {}) or {})
                period = payload.get("batch_period_ms", stack.clock.tick_ms)
                with stack.lock:
                    sub_id = stack.bus.subscribe(filt, sink, period)
                self._send_json({"sub_id": sub_id}, status=201)
                return
            raise NotFoundError(f"no POST route {path}")

        def _route_delete(self) -> None:
            path = urlparse(self.path).path
            m = re.fullmatch(r"/subscriptions/([^/]+)", path)
            if m:
                with stack.lock:
                    stack.bus.unsubscribe(m.group(1))
                self._send_json({"unsubscribed": m.group(1)})
                return
            raise NotFoundError(f"no DELETE route {path}")

        def _route_get(self) -> None:
            parsed = urlparse(self.path)
            path, query = parsed.path, parse_qs(parsed.query)
            if path == "/healthz":
                self._send_json({"ok": True, "now_ms": stack.clock.now_ms})
                return
            if path == "/clock":
                self._send_json(
                    {
                        "now_ms": stack.clock.now_ms,
                        "now_iso": stack.clock.iso(),
                        "tick_ms": stack.clock.tick_ms,
                        "epoch": stack.clock.epoch.isoformat(),
                    }
                )
                return
            if path == "/collections":
                with stack.lock:
                    self._send_json(stack.store.list_collections())
                return
            m = re.fullmatch(r"/collections/([^/]+)/records", path)
            if m:
                dims: dict[str, Any] = {}
                if "slice" in query:
                    dims["slice"] = query["slice"][0]
                limit = int(query.get("limit", ["100"])[0])
                order = query.get("order", ["recent_first"])[0]
                with stack.lock:
                    records = stack.store.query(m.group(1), dims, limit=limit, order=order)
                self._send_json([r.to_json_obj() for r in records])
                return
            if path == "/schedules":
                with stack.lock:
                    self._send_json(stack.scheduler.describe())
                return
            if path == "/approvals":
                state = query.get("state", [None])[0]
                with stack.lock:
                    self._send_json(stack.approvals.describe(state))
                return
            if path == "/slices":
                with stack.lock:
                    self._send_json(stack.sim.slice_summaries())
                return
            m = re.fullmatch(r"/slices/([^/]+)", path)
            if m:
                with stack.lock:
                    self._send_json(stack.sim.get_slice(m.group(1)).to_json_obj())
                return
            if path == "/intents":
                self._send_json([r.status_obj() for r in stack.intents.values()])
                return
            m = re.fullmatch(r"/intents/([^/]+)", path)
            if m:
                self._send_json(stack.get_intent(m.group(1)).status_obj())
                return
            m = re.fullmatch(r"/intents/([^/]+)/trace", path)
            if m:
                run = stack.get_intent(m.group(1))
                self._send_json(
                    {"intent": run.status_obj(), "entries": run.transcript.snapshot()}
                )
                return
            m = re.fullmatch(r"/intents/([^/]+)/stream", path)
            if m:
                self._stream_intent(m.group(1), query)
                return
            if stack.config.ui_dir:
                if self._serve_static(path):
                    return
            raise NotFoundError(f"no GET route {path}")

        # -- SSE --------------------------------------------------------------

        def _stream_intent(self, intent_id: str, query: dict[str, list[str]]) -> None:
            run = stack.get_intent(intent_id)
            start = 0
            last_event_id = self.headers.get("Last-Event-ID")
            if last_event_id is not None:
                start = int(last_event_id) + 1
            elif "from" in query:
                start = int(query["from"][0])
            self.close_connection = True
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Connection", "close")
            self.end_headers()
            index = start
            while True:
                entries = run.transcript.wait_beyond(index, SSE_POLL_S)
                if not entries:
                    # heartbeat so dead connections surface as write errors
                    self.wfile.write(b": ping\n\n")
                for entry in entries:
                    data = json.dumps(entry, sort_keys=True)
                    chunk = f"id: {entry['index']}\nevent: entry\ndata: {data}\n\n"
                    self.wfile.write(chunk.encode("utf-8"))
                    index = entry["index"] + 1
                self.wfile.flush()
                if run.status in _TERMINAL and len(run.transcript.entries) <= index:
                    self.wfile.write(b"event: end\ndata: {}\n\n")
                    self.wfile.flush()
                    return

        # -- static UI ---------------------------------------------------------

        def _serve_static(self, path: str) -> bool:
            root = Path(stack.config.ui_dir).resolve()
            rel = path.lstrip("/") or "index.html"
            target = (root / rel).resolve()
            if not str(target).startswith(str(root)) or not target.is_file():
                return False
            body = target.read_bytes()
            self.send_response(200)
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return True

    return Handler

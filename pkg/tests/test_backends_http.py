import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from netintent.agent.backends import HttpChatBackend
from netintent.errors import BackendError


class FakeChatServer:
    """Minimal chat-completion endpoint recording request payloads."""

    def __init__(self, responses):
        self.requests = []
        self.responses = list(responses)
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                outer.requests.append(json.loads(self.rfile.read(length)))
                status, payload = outer.responses.pop(0) if outer.responses else (200, {})
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}/v1/chat/completions"
        threading.Thread(target=self.httpd.serve_forever, daemon=True).start()

    def shutdown(self):
        self.httpd.shutdown()
        self.httpd.server_close()


def chat_choice(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def test_request_shape_and_extraction():
    server = FakeChatServer([(200, chat_choice('{"thought":"hi"}'))])
    try:
        backend = HttpChatBackend(server.url, model="test-model", temperature=0.1)
        out = backend.complete([{"role": "system", "content": "s"}, {"role": "user", "content": "u"}])
        assert out == '{"thought":"hi"}'
        sent = server.requests[0]
        assert sent["model"] == "test-model"
        assert sent["temperature"] == 0.1
        assert sent["messages"][0] == {"role": "system", "content": "s"}
    finally:
        server.shutdown()


def test_legacy_text_field_accepted():
    server = FakeChatServer([(200, {"choices": [{"text": "plain"}]})])
    try:
        backend = HttpChatBackend(server.url, model="m")
        assert backend.complete([]) == "plain"
    finally:
        server.shutdown()


def test_retry_once_then_raise():
    server = FakeChatServer([(500, {}), (200, chat_choice("ok"))])
    try:
        backend = HttpChatBackend(server.url, model="m")
        assert backend.complete([]) == "ok"  # second attempt succeeded
        assert len(server.requests) == 2
    finally:
        server.shutdown()


def test_unreachable_raises_backend_error():
    backend = HttpChatBackend("http://127.0.0.1:1/nope", model="m", timeout_s=0.2)
    with pytest.raises(BackendError):
        backend.complete([])


def test_malformed_body_raises_backend_error():
    server = FakeChatServer([(200, {"nonsense": True}), (200, {"nonsense": True})])
    try:
        backend = HttpChatBackend(server.url, model="m")
        with pytest.raises(BackendError):
            backend.complete([])
    finally:
        server.shutdown()

"""A small HTTP server exposing any backend over the wire protocol.

Used to serve the simulator remotely and, with injected faults, to test
the client's retry policy.
"""

from __future__ import annotations

import base64
import json
import threading
import time
from collections import deque
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import DSLError, EditScriptError, MediaMismatch, UnparseableEditInstruction
from ..images import ImageRef
from .http import MEDIA_FROM_WIRE, WIRE_FORMATS


@dataclass
class Fault:
    """One injected misbehavior, consumed by the next matching request.

    ``delay_s`` stalls before answering; ``status`` replaces the answer
    with an error response. ``path`` limits the fault to one endpoint.
    """

    status: int | None = None
    delay_s: float = 0.0
    path: str | None = None
    code: str = "injected"


@dataclass
class SeenRequest:
    method: str
    path: str
    headers: dict
    body: dict | None


class StubServer:
    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0):
        self.backend = backend
        self.faults: deque[Fault] = deque()
        self.requests: list[SeenRequest] = []
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), _make_handler(self))
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def inject(self, *faults: Fault) -> None:
        with self._lock:
            self.faults.extend(faults)

    def _take_fault(self, path: str) -> Fault | None:
        with self._lock:
            for i, fault in enumerate(self.faults):
                if fault.path is None or fault.path == path:
                    del self.faults[i]
                    return fault
        return None

    def _record(self, req: SeenRequest) -> None:
        with self._lock:
            self.requests.append(req)

    def start(self) -> "StubServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def handle(self, method: str, path: str, body: dict | None) -> tuple[int, dict]:
        if method == "GET" and path == "/v1/health":
            return 200, {"status": "ok"}
        if method != "POST" or path not in ("/v1/generate", "/v1/understand", "/v1/edit"):
            return 404, _error("not_found", f"no route {method} {path}")
        if not isinstance(body, dict):
            return 400, _error("bad_request", "body must be a JSON object")
        try:
            if path == "/v1/generate":
                ref = self.backend.generate(_str(body, "prompt"), _seed(body))
                return 200, {"image": _wire(ref)}
            image = _image(body)
            if path == "/v1/understand":
                return 200, {"text": self.backend.understand(image, _str(body, "prompt"))}
            ref = self.backend.edit(image, _str(body, "instruction"), _seed(body))
            return 200, {"image": _wire(ref)}
        except _BadRequest as exc:
            return 400, _error("bad_request", str(exc))
        except (DSLError, EditScriptError) as exc:
            return 400, _error("bad_prompt", str(exc))
        except MediaMismatch as exc:
            return 415, _error("media_mismatch", str(exc))
        except UnparseableEditInstruction as exc:
            return 422, _error("unparseable_instruction", str(exc))
        except Exception as exc:  # noqa: BLE001 - mapped to a 500 for the client
            return 500, _error("internal", f"{type(exc).__name__}: {exc}")


class _BadRequest(ValueError):
    pass


def _error(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def _str(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value.strip():
        raise _BadRequest(f"{key!r} must be a non-empty string")
    return value


def _seed(body: dict) -> int:
    seed = body.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise _BadRequest("'seed' must be an unsigned 64-bit integer")
    return seed


def _image(body: dict) -> ImageRef:
    obj = body.get("image")
    if not isinstance(obj, dict):
        raise _BadRequest("'image' must be an object")
    kind = MEDIA_FROM_WIRE.get(obj.get("format"))
    if kind is None:
        raise _BadRequest(f"unknown image format {obj.get('format')!r}")
    try:
        payload = base64.b64decode(obj.get("data_b64", ""), validate=True)
    except (ValueError, TypeError) as exc:
        raise _BadRequest(f"bad base64: {exc}") from exc
    return ImageRef.from_payload(payload, kind)


def _wire(ref: ImageRef) -> dict:
    return {"format": WIRE_FORMATS[ref.media_kind],
            "data_b64": base64.b64encode(ref.payload).decode("ascii")}


def _make_handler(server: StubServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        disable_nagle_algorithm = True  # headers and body go out as separate writes

        def log_message(self, format, *args):  # silence per-request logging
            pass

        def _serve(self, method: str) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                body = json.loads(raw) if raw else None
            except ValueError:
                body = None
            path = self.path.split("?", 1)[0]
            server._record(SeenRequest(method, path, dict(self.headers), body))
            fault = server._take_fault(path)
            if fault is not None and fault.delay_s:
                time.sleep(fault.delay_s)
            if fault is not None and fault.status is not None:
                status, doc = fault.status, _error(fault.code, f"injected HTTP {fault.status}")
            else:
                status, doc = server.handle(method, path, body)
            data = json.dumps(doc).encode("utf-8")
            try:
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
            except (BrokenPipeError, ConnectionResetError):
                pass  # client gave up (timeout test)

        def do_GET(self):
            self._serve("GET")

        def do_POST(self):
            self._serve("POST")

    return Handler

"""HTTP client for a remote unified-model service.

Wire protocol (JSON, UTF-8)::

    POST /v1/generate   {"prompt", "seed", "width"?, "height"?} -> {"image": IMAGE}
    POST /v1/understand {"image": IMAGE, "prompt"}              -> {"text"}
    POST /v1/edit       {"image": IMAGE, "instruction", "seed"} -> {"image": IMAGE}
    GET  /v1/health                                              -> 200

    IMAGE = {"format": "png" | "scene-graph", "data_b64": str}

Errors are non-200 responses with ``{"error": {"code", "message"}}``.
"""

from __future__ import annotations

import base64
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable

import httpx

from ..errors import BackendFailure, MediaMismatch
from ..images import ImageRef
from .base import resolve_payload

TOKEN_ENV = "UIG_HTTP_TOKEN"
REQUEST_ID_HEADER = "X-Request-Id"

WIRE_FORMATS = {"raster-png": "png", "scene-graph": "scene-graph"}
MEDIA_FROM_WIRE = {v: k for k, v in WIRE_FORMATS.items()}


@dataclass(frozen=True)
class BackendEndpoint:
    base_url: str
    timeout_ms: int = 120_000
    max_retries: int = 3
    backoff_base_ms: int = 500
    auth_token: str | None = None

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("base_url is required")
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be >= 1")
        if not 0 <= self.max_retries <= 10:
            raise ValueError("max_retries must be in [0, 10]")
        if self.backoff_base_ms < 0:
            raise ValueError("backoff_base_ms must be >= 0")


@dataclass(frozen=True)
class RetryEvent:
    path: str
    request_id: str
    attempt: int
    reason: str
    delay_s: float


def encode_image(image: ImageRef, store=None) -> dict:
    return {
        "format": WIRE_FORMATS[image.media_kind],
        "data_b64": base64.b64encode(resolve_payload(image, store)).decode("ascii"),
    }


def decode_image(obj, accepted: tuple[str, ...]) -> tuple[bytes, str]:
    if not isinstance(obj, dict) or "data_b64" not in obj:
        raise BackendFailure("response carries no image")
    kind = MEDIA_FROM_WIRE.get(obj.get("format"))
    if kind is None:
        raise BackendFailure(f"unknown image format {obj.get('format')!r}")
    if kind not in accepted:
        raise MediaMismatch(f"backend returned {kind}, client accepts {', '.join(accepted)}")
    try:
        return base64.b64decode(obj["data_b64"], validate=True), kind
    except (ValueError, TypeError) as exc:
        raise BackendFailure(f"bad base64 image payload: {exc}") from exc


class HttpBackend:
    """Remote backend with bounded retries.

    Transport errors and 5xx responses are retried up to ``max_retries``
    times with full-jitter exponential backoff; 4xx responses are final.
    Every retry is appended to ``retry_log``.
    """

    def __init__(self, endpoint: BackendEndpoint, *, media_kinds: tuple[str, ...] = ("raster-png",),
                 store=None, width: int | None = None, height: int | None = None,
                 client: httpx.Client | None = None, sleep: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None):
        self.endpoint = endpoint
        self.media_kinds = tuple(media_kinds)
        self.store = store
        self.width = width
        self.height = height
        self._client = client or httpx.Client()
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        self.retry_log: list[RetryEvent] = []
        token = endpoint.auth_token or os.environ.get(TOKEN_ENV)
        self._headers = {"Authorization": f"Bearer {token}"} if token else {}

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _url(self, path: str) -> str:
        return self.endpoint.base_url.rstrip("/") + path

    def backoff_delay(self, attempt: int) -> float:
        cap = self.endpoint.backoff_base_ms * (2 ** attempt) / 1000.0
        with self._lock:
            return self._rng.uniform(0.0, cap)

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        request_id = uuid.uuid4().hex
        headers = {**self._headers, REQUEST_ID_HEADER: request_id}
        timeout = self.endpoint.timeout_ms / 1000.0
        attempts = 1 + self.endpoint.max_retries
        reason = ""
        status = None
        for attempt in range(attempts):
            try:
                resp = self._client.request(method, self._url(path), json=body,
                                            headers=headers, timeout=timeout)
            except httpx.TransportError as exc:
                reason = f"{type(exc).__name__}: {exc}"
                status = None
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json() if resp.content else {}
                    except ValueError as exc:
                        raise BackendFailure(f"{path}: response is not JSON",
                                             status=200, attempts=attempt + 1) from exc
                code, message = _error_fields(resp)
                if resp.status_code < 500:
                    raise BackendFailure(f"{path}: HTTP {resp.status_code} {code}: {message}",
                                         status=resp.status_code, code=code, attempts=attempt + 1)
                reason = f"HTTP {resp.status_code}"
                status = resp.status_code
            if attempt + 1 < attempts:
                delay = self.backoff_delay(attempt)
                with self._lock:
                    self.retry_log.append(RetryEvent(path, request_id, attempt + 1, reason, delay))
                self._sleep(delay)
        raise BackendFailure(f"{path}: giving up after {attempts} attempt(s): {reason}",
                             status=status, attempts=attempts)

    def _image(self, resp: dict) -> ImageRef:
        payload, kind = decode_image(resp.get("image"), self.media_kinds)
        if self.store is not None:
            return self.store.put(payload, kind)
        return ImageRef.from_payload(payload, kind)

    def _check_media(self, image: ImageRef) -> None:
        if image.media_kind not in self.media_kinds:
            raise MediaMismatch(f"remote backend accepts {', '.join(self.media_kinds)}, "
                                f"got {image.media_kind}")

    def probe(self) -> None:
        self._request("GET", "/v1/health")

    def generate(self, prompt: str, seed: int) -> ImageRef:
        body = {"prompt": prompt, "seed": seed}
        if self.width is not None:
            body["width"] = self.width
        if self.height is not None:
            body["height"] = self.height
        return self._image(self._request("POST", "/v1/generate", body))

    def understand(self, image: ImageRef, prompt: str) -> str:
        self._check_media(image)
        resp = self._request("POST", "/v1/understand",
                             {"image": encode_image(image, self.store), "prompt": prompt})
        text = resp.get("text")
        if not isinstance(text, str):
            raise BackendFailure("/v1/understand: response has no text")
        return text

    def edit(self, image: ImageRef, instruction: str, seed: int) -> ImageRef:
        self._check_media(image)
        body = {"image": encode_image(image, self.store), "instruction": instruction, "seed": seed}
        return self._image(self._request("POST", "/v1/edit", body))


def _error_fields(resp: httpx.Response) -> tuple[str, str]:
    try:
        err = resp.json().get("error", {})
        return str(err.get("code", "error")), str(err.get("message", ""))
    except (ValueError, AttributeError):
        return "error", resp.text[:200]

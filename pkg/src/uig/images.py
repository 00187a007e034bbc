"""Content-addressed image handles."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

MEDIA_KINDS = ("raster-png", "scene-graph")


def digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class ImageRef:
    """Opaque handle to an image payload.

    Equality is by address and media kind. ``payload`` may be left out when
    a reference is read back from a trace; resolve it through a store.
    """

    content_address: str
    media_kind: str
    payload: bytes | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.media_kind not in MEDIA_KINDS:
            raise ValueError(f"unknown media kind {self.media_kind!r}")
        if self.payload is not None and digest(self.payload) != self.content_address:
            raise ValueError("content address does not match payload digest")

    @classmethod
    def from_payload(cls, payload: bytes, media_kind: str) -> "ImageRef":
        return cls(digest(payload), media_kind, bytes(payload))

    def to_dict(self) -> dict:
        return {"content_address": self.content_address, "media_kind": self.media_kind}

    @classmethod
    def from_dict(cls, data: dict) -> "ImageRef":
        return cls(data["content_address"], data["media_kind"])

    def short(self) -> str:
        return self.content_address[:12]

"""The unified-model contract shared by every backend."""

from __future__ import annotations

import threading
from collections import Counter
from typing import Protocol, runtime_checkable

from ..errors import NotFound
from ..images import ImageRef

_MASK = (1 << 64) - 1


def derive_seed(base_seed: int, index: int) -> int:
    """Per-call seed from a run seed and a call index.

    SplitMix64 finalizer over ``base + (index + 1) * golden_gamma``; index 0
    is the initial generation, index i the edit of step i.
    """
    z = (base_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@runtime_checkable
class UnifiedModelBackend(Protocol):
    def generate(self, prompt: str, seed: int) -> ImageRef: ...

    def understand(self, image: ImageRef, prompt: str) -> str: ...

    def edit(self, image: ImageRef, instruction: str, seed: int) -> ImageRef: ...

    def probe(self) -> None:
        """Raise BackendFailure unless the backend is ready."""


def resolve_payload(image: ImageRef, store=None) -> bytes:
    if image.payload is not None:
        return image.payload
    if store is None:
        raise NotFound(f"image {image.content_address} has no payload and no store")
    return store.get(image.content_address)


class CountingBackend:
    """Wraps a backend and counts calls per operation."""

    def __init__(self, inner: UnifiedModelBackend):
        self.inner = inner
        self.calls: Counter[str] = Counter()
        self._lock = threading.Lock()

    def _tick(self, name: str) -> None:
        with self._lock:
            self.calls[name] += 1

    def generate(self, prompt: str, seed: int) -> ImageRef:
        self._tick("generate")
        return self.inner.generate(prompt, seed)

    def understand(self, image: ImageRef, prompt: str) -> str:
        self._tick("understand")
        return self.inner.understand(image, prompt)

    def edit(self, image: ImageRef, instruction: str, seed: int) -> ImageRef:
        self._tick("edit")
        return self.inner.edit(image, instruction, seed)

    def probe(self) -> None:
        self.inner.probe()

    def __getattr__(self, name):
        return getattr(self.inner, name)

"""Content-addressed image store, trace files and run records."""

from __future__ import annotations

import json
import os
import secrets
import tempfile
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import NotFound
from .images import ImageRef
from .records import ReasoningTrace, dumps_trace, loads_trace

STORE_ENV = "UIG_STORE_DIR"


class MemoryStore:
    def __init__(self):
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, payload: bytes, media_kind: str) -> ImageRef:
        ref = ImageRef.from_payload(payload, media_kind)
        with self._lock:
            self._blobs.setdefault(ref.content_address, ref.payload)
        return ref

    def get(self, address: str) -> bytes:
        try:
            return self._blobs[address]
        except KeyError:
            raise NotFound(f"unknown content address {address}") from None

    def __contains__(self, address: str) -> bool:
        return address in self._blobs

    def __len__(self) -> int:
        return len(self._blobs)


class FileStore:
    """SHA-256 addressed blobs under ``root/objects/ab/abcdef...``.

    Writes go to a temporary file and are renamed into place, so concurrent
    writers of the same payload race harmlessly.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)

    def path_for(self, address: str) -> Path:
        return self.root / "objects" / address[:2] / address

    def put(self, payload: bytes, media_kind: str) -> ImageRef:
        ref = ImageRef.from_payload(payload, media_kind)
        target = self.path_for(ref.content_address)
        if target.exists():
            return ref
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return ref

    def get(self, address: str) -> bytes:
        try:
            return self.path_for(address).read_bytes()
        except (FileNotFoundError, NotADirectoryError):
            raise NotFound(f"unknown content address {address}") from None

    def __contains__(self, address: str) -> bool:
        return self.path_for(address).exists()

    def __len__(self) -> int:
        return sum(1 for p in (self.root / "objects").glob("*/*") if not p.name.startswith("."))


def default_store(fallback: str | Path) -> FileStore:
    return FileStore(os.environ.get(STORE_ENV) or fallback)


# -- traces --------------------------------------------------------------------

def write_trace(trace: ReasoningTrace, path: str | Path) -> Path:
    """Write a trace once; an existing file is never overwritten."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "x", encoding="utf-8") as fh:
        fh.write(dumps_trace(trace))
    return path


def read_trace(path: str | Path) -> ReasoningTrace:
    return loads_trace(Path(path).read_text(encoding="utf-8"))


# -- run records -----------------------------------------------------------------

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def new_run_id(now_ms: int | None = None) -> str:
    """ULID-style id: 48-bit millisecond time then 80 random bits, base32."""
    ms = int(time.time() * 1000) if now_ms is None else now_ms
    value = (ms << 80) | secrets.randbits(80)
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 31])
        value >>= 5
    return "".join(reversed(chars))


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunRecord:
    run_id: str
    trace_path: str
    image_paths: list[str] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def record_run(out_dir: str | Path, trace: ReasoningTrace, store: FileStore,
               started_at: str | None = None) -> RunRecord:
    """Persist a finished trace in its own run directory."""
    run_id = new_run_id()
    run_dir = Path(out_dir) / "runs" / run_id
    trace_path = write_trace(trace, run_dir / "trace.json")
    images = []
    for ref in trace.images():
        images.append(str(store.path_for(ref.content_address)))
        if ref.content_address not in store:
            raise NotFound(f"trace references unstored image {ref.content_address}")
    record = RunRecord(run_id, str(trace_path), images, started_at or _utc_now(), _utc_now())
    with open(run_dir / "run.json", "x", encoding="utf-8") as fh:
        json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return record

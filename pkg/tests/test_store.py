from __future__ import annotations

import hashlib
import json
import subprocess
import threading

import pytest

from uig import PromptSpec, ReasoningConfig, run_reasoning
from uig.backends import SimulatorBackend
from uig.errors import NotFound, TraceSchemaError
from uig.records import dumps_trace, loads_trace
from uig.sim.world import NoiseConfig
from uig.store import FileStore, MemoryStore, new_run_id, read_trace, record_run, write_trace


@pytest.mark.parametrize("make", [MemoryStore, None])
def test_put_get_round_trip(tmp_path, make):
    store = make() if make else FileStore(tmp_path)
    ref = store.put(b"payload", "raster-png")
    assert store.get(ref.content_address) == b"payload"
    assert store.put(b"payload", "raster-png") == ref
    assert len(store) == 1
    with pytest.raises(NotFound):
        store.get("ab" * 32)


def test_address_matches_external_digest(tmp_path):
    store = FileStore(tmp_path)
    ref = store.put(b"some bytes", "raster-png")
    path = store.path_for(ref.content_address)
    out = subprocess.run(["sha256sum", str(path)], capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == ref.content_address == hashlib.sha256(b"some bytes").hexdigest()


def test_concurrent_writers_of_same_payload(tmp_path):
    store = FileStore(tmp_path)
    refs = []
    threads = [threading.Thread(target=lambda: refs.append(store.put(b"same", "raster-png")))
               for _ in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len({r.content_address for r in refs}) == 1
    assert len(store) == 1
    assert not list(tmp_path.glob("objects/*/.tmp-*"))


def _trace():
    backend = SimulatorBackend(NoiseConfig())
    return run_reasoning(PromptSpec("count(cat,2); color(cat,red)"), backend, ReasoningConfig())


def test_trace_round_trip(tmp_path):
    trace = _trace()
    path = write_trace(trace, tmp_path / "t.json")
    assert read_trace(path) == trace


def test_traces_are_never_overwritten(tmp_path):
    path = write_trace(_trace(), tmp_path / "t.json")
    with pytest.raises(FileExistsError):
        write_trace(_trace(), path)


def test_unknown_major_version_rejected():
    doc = json.loads(dumps_trace(_trace()))
    doc["version"] = "2.0"
    with pytest.raises(TraceSchemaError, match="unsupported trace version"):
        loads_trace(json.dumps(doc))
    doc["version"] = "1.3"
    assert loads_trace(json.dumps(doc)).version == "1.3"


def test_malformed_trace_rejected():
    with pytest.raises(TraceSchemaError):
        loads_trace("{not json")
    with pytest.raises(TraceSchemaError):
        loads_trace('{"version": "1.0"}')


def test_run_ids_sort_by_time_and_are_unique():
    a, b = new_run_id(1_000), new_run_id(2_000)
    assert a < b and len(a) == 26
    assert len({new_run_id() for _ in range(1000)}) == 1000


def test_record_run(tmp_path):
    store = FileStore(tmp_path / "store")
    backend = SimulatorBackend(NoiseConfig(), store=store)
    trace = run_reasoning(PromptSpec("count(cat,2); color(cat,red)"), backend)
    record = record_run(tmp_path, trace, store)
    assert read_trace(record.trace_path) == trace
    run = json.loads((tmp_path / "runs" / record.run_id / "run.json").read_text())
    assert run["run_id"] == record.run_id
    assert all(open(p, "rb").read() for p in run["image_paths"])


def test_record_run_requires_stored_images(tmp_path):
    with pytest.raises(NotFound):
        record_run(tmp_path, _trace(), FileStore(tmp_path / "empty"))

"""Executes pipelines over a suite and aggregates the results."""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..backends.base import derive_seed
from ..core import run_pipeline_variant
from ..errors import UiGError
from ..protocol import UnderstandingTemplate
from ..records import ReasoningConfig, ReasoningTrace
from ..store import write_trace
from .metrics import judge_alignment
from .report import REPORT_VERSION, BenchmarkReport, latency_stats
from .suite import Suite, SuiteEntry


def entry_seed(base_seed: int, entry_id: str) -> int:
    """Per-entry seed, independent of scheduling order."""
    h = int.from_bytes(hashlib.sha256(entry_id.encode("utf-8")).digest()[:8], "big")
    return derive_seed(base_seed, h)


@dataclass
class EntryResult:
    id: str
    seed: int
    status: str
    final_score: float | None = None
    curve: list[float] = field(default_factory=list)
    terminated_by: str | None = None
    calls: dict = field(default_factory=dict)
    error: str | None = None
    # stage latencies stay out of the deterministic row
    latency: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("latency")
        return d


class _JudgeCache:
    def __init__(self, backend, store):
        self.backend = backend
        self.store = store
        self._cache: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()

    def __call__(self, entry: SuiteEntry, image) -> float:
        key = (entry.id, image.content_address)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = judge_alignment(image, entry.judge, self.backend, self.store)
        with self._lock:
            self._cache[key] = value
        return value


def score_curve(trace: ReasoningTrace, judge) -> list[float]:
    """Score after each iteration, carrying the last image forward.

    Index 0 is the initial image. A run that stopped early keeps its final
    image for the remaining iterations; a baseline has one point.
    """
    scores = [judge(ref) for ref in trace.images()]
    if trace.config.pipeline == "baseline":
        return scores[:1]
    width = trace.config.max_iterations + 1
    return scores + [scores[-1]] * (width - len(scores))


def _run_one(entry: SuiteEntry, config: ReasoningConfig, backend, judge: _JudgeCache,
             template: UnderstandingTemplate | None, trace_dir: Path | None) -> EntryResult:
    seed = entry_seed(config.seed, entry.id)
    cfg = config.with_(seed=seed)
    try:
        trace = run_pipeline_variant(entry.prompt, backend, cfg, template=template)
        curve = score_curve(trace, lambda ref: judge(entry, ref))
    except UiGError as exc:
        result = EntryResult(entry.id, seed, "failed", error=f"{type(exc).__name__}: {exc}")
        if trace_dir is not None:
            path = trace_dir / config.label() / f"{entry.id}.error.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "x", encoding="utf-8") as fh:
                json.dump(result.row(), fh, indent=2, sort_keys=True)
        return result
    if trace_dir is not None:
        write_trace(trace, trace_dir / config.label() / f"{entry.id}.json")
    return EntryResult(
        entry.id, seed, "ok",
        final_score=judge(entry, trace.final_image),
        curve=curve,
        terminated_by=trace.terminated_by,
        calls=trace.call_counts(),
        latency={
            "generate": trace.latency_generate_ms,
            "understand": sum(s.latency_understand_ms for s in trace.steps),
            "edit": sum(s.latency_edit_ms for s in trace.steps),
            "total": trace.total_latency_ms,
            "stages": trace.recorded_stages(),
        },
    )


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _summarize(config: ReasoningConfig, results: list[EntryResult]) -> tuple[dict, dict]:
    ok = [r for r in results if r.status == "ok"]
    width = len(ok[0].curve) if ok else (1 if config.pipeline == "baseline"
                                        else config.max_iterations + 1)
    curve = [_mean([r.curve[i] for r in ok]) for i in range(width)] if ok else []
    calls = {k: sum(r.calls[k] for r in ok) for k in ("generate", "understand", "edit", "total")}
    run = {
        "pipeline": config.pipeline,
        "max_iterations": config.max_iterations,
        "seed": config.seed,
        "missing_edit_policy": config.missing_edit_policy,
        "n": len(results),
        "n_ok": len(ok),
        "n_failed": len(results) - len(ok),
        "mean_final_score": _mean([r.final_score for r in ok]),
        "curve": curve,
        "terminations": {
            "match": sum(1 for r in ok if r.terminated_by == "match"),
            "budget": sum(1 for r in ok if r.terminated_by == "budget"),
        },
        "calls": calls,
        "mean_calls": {k: (v / len(ok) if ok else 0.0) for k, v in calls.items()},
        "rows": [r.row() for r in results],
    }
    timing = {stage: latency_stats([r.latency[stage] for r in ok])
              for stage in ("generate", "understand", "edit", "total")}
    timing["recorded_stages"] = sum(r.latency["stages"] for r in ok)
    return run, timing


def run_benchmark(suite: Suite, backend, configs: Sequence[ReasoningConfig], *,
                  trace_dir: str | Path | None = None, parallelism: int = 4,
                  judge_backend=None, store=None,
                  template: UnderstandingTemplate | None = None) -> BenchmarkReport:
    """Run every (entry, config) pair and aggregate a report.

    Entries run on up to ``parallelism`` threads. Backend errors become
    failed rows; the report lists rows in suite order.
    """
    if not configs:
        raise ValueError("at least one config is required")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    labels = [c.label() for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"configs must have distinct labels, got {labels}")
    trace_dir = Path(trace_dir) if trace_dir is not None else None
    judge = _JudgeCache(judge_backend or backend, store)

    runs: dict[str, dict] = {}
    timing: dict[str, dict] = {}
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for config in configs:
            futures = [pool.submit(_run_one, e, config, backend, judge, template, trace_dir)
                       for e in suite]
            results = [f.result() for f in futures]
            runs[config.label()], timing[config.label()] = _summarize(config, results)

    metadata = {
        "suite": suite.name,
        "suite_digest": suite.digest(),
        "n_entries": len(suite),
        "seed": configs[0].seed,
        "configs": [asdict(c) for c in configs],
    }
    return BenchmarkReport(metadata, runs, timing, REPORT_VERSION)

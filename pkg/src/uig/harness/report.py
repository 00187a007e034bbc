"""Benchmark reports: aggregated scores, trends and latency statistics.

Everything outside ``timing`` is a pure function of the suite, configs,
backend and seeds; wall-clock numbers live only in ``timing``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import SchemaError

REPORT_VERSION = "1.0"
STAGES = ("generate", "understand", "edit", "total")


@dataclass
class BenchmarkReport:
    metadata: dict
    runs: dict
    timing: dict = field(default_factory=dict)
    version: str = REPORT_VERSION

    def labels(self) -> list[str]:
        return list(self.runs)

    def final_scores(self) -> dict[str, float | None]:
        return {label: run["mean_final_score"] for label, run in self.runs.items()}

    def to_dict(self, *, timing: bool = True) -> dict:
        doc = {"version": self.version, "metadata": self.metadata, "runs": self.runs}
        if timing:
            doc["timing"] = self.timing
        return doc

    def dumps(self, *, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing=timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkReport":
        if not isinstance(doc, dict) or str(doc.get("version", "")).split(".")[0] != "1":
            raise SchemaError(f"unsupported report version {doc.get('version')!r}"
                              if isinstance(doc, dict) else "report must be a JSON object")
        try:
            return cls(doc["metadata"], doc["runs"], doc.get("timing", {}), doc["version"])
        except KeyError as exc:
            raise SchemaError(f"report is missing {exc}") from exc


def percentile(values: list[float], q: float) -> float:
    """Nearest-rank percentile; ``q`` in (0, 100]."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return ordered[rank - 1]


def latency_stats(samples: list[int]) -> dict:
    n = len(samples)
    return {
        "n": n,
        "total_ms": sum(samples),
        "mean_ms": sum(samples) / n if n else 0.0,
        "p50_ms": percentile(samples, 50),
        "p95_ms": percentile(samples, 95),
    }


def write_report(report: BenchmarkReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.dumps(), encoding="utf-8")
    return path


def read_report(path: str | Path) -> BenchmarkReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"report is not valid JSON: {exc}") from exc
    return BenchmarkReport.from_dict(doc)


CSV_FIELDS = ("label", "pipeline", "max_iterations", "iteration", "mean_score", "n")


def render_trend_csv(report: BenchmarkReport, path: str | Path | None = None) -> str:
    """One row per (run, iteration 0..max_iterations).

    A baseline curve has a single point; it is repeated across the budget
    so every run contributes ``max_iterations + 1`` rows.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for label, run in report.runs.items():
        curve = run["curve"]
        width = run["max_iterations"] + 1
        n = run["n_ok"]
        for i in range(width):
            value = curve[min(i, len(curve) - 1)] if curve else None
            writer.writerow([label, run["pipeline"], run["max_iterations"], i,
                             "" if value is None else repr(value), n])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text

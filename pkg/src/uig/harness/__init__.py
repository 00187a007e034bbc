"""Benchmark suites, judges, metrics and reports."""

from .metrics import gned, judge_alignment, levenshtein
from .report import BenchmarkReport, read_report, render_trend_csv, write_report
from .runner import run_benchmark
from .suite import JudgeSpec, Suite, SuiteEntry, dump_suite, load_suite

__all__ = ["BenchmarkReport", "JudgeSpec", "Suite", "SuiteEntry", "dump_suite", "gned",
           "judge_alignment", "levenshtein", "load_suite", "read_report", "render_trend_csv",
           "run_benchmark", "write_report"]

from __future__ import annotations

import json
import random

import pytest

from uig.backends import SimulatorBackend
from uig.errors import BackendFailure, MediaMismatch, SchemaError
from uig.harness import (JudgeSpec, Suite, dump_suite, judge_alignment, load_suite,
                         read_report, render_trend_csv, run_benchmark, write_report)
from uig.harness.metrics import mechanical_questions
from uig.harness.report import percentile
from uig.harness.runner import entry_seed
from uig.images import ImageRef
from uig.records import ReasoningConfig
from uig.sim.dsl import parse_prompt_dsl
from uig.sim.prompts import random_constraints
from uig.sim.world import NoiseConfig, sample_scene, score
from uig.store import read_trace

from _support import random_any_constraints, random_scene


def _write(tmp_path, lines):
    p = tmp_path / "suite.jsonl"
    p.write_text("\n".join(lines) + "\n")
    return p


def small_suite(n=12, seed=0):
    rng = random.Random(seed)
    return Suite.from_constraint_sets([random_constraints(rng, 4) for _ in range(n)])


def test_load_three_records(tmp_path):
    p = _write(tmp_path, [
        '{"id": "a", "prompt": "count(ball,2)", "judge": {"kind": "constraints"}}',
        '',
        '{"id": "b", "prompt": "two balls", "judge": {"kind": "constraints", "dsl": "count(ball,2)"}}',
        '{"id": "c", "prompt": "two balls", "judge": {"kind": "questions", "questions": ["q1", "q2"]}}',
    ])
    suite = load_suite(p)
    assert [e.id for e in suite] == ["a", "b", "c"]
    assert suite.entries[1].judge.constraints == parse_prompt_dsl("count(ball,2)")
    assert suite.entries[2].judge.questions == ("q1", "q2")


def test_empty_file(tmp_path):
    with pytest.raises(SchemaError):
        load_suite(_write(tmp_path, [""]))


def test_duplicate_id_named(tmp_path):
    p = _write(tmp_path, ['{"id": "dup", "prompt": "count(ball,2)"}'] * 2)
    with pytest.raises(SchemaError, match="dup") as exc:
        load_suite(p)
    assert exc.value.index == 1


@pytest.mark.parametrize("line", [
    "not json", '["a"]', '{"id": "", "prompt": "count(ball,1)"}', '{"id": "a b", "prompt": "x"}',
    '{"id": "a", "prompt": ""}', '{"id": "a", "prompt": "count(ball,"}',
    '{"id": "a", "prompt": "x", "judge": {"kind": "vibes"}}',
    '{"id": "a", "prompt": "x", "judge": {"kind": "questions", "questions": []}}',
])
def test_schema_errors_carry_index(tmp_path, line):
    p = _write(tmp_path, ['{"id": "ok", "prompt": "count(ball,1)"}', line])
    with pytest.raises(SchemaError) as exc:
        load_suite(p)
    assert exc.value.index == 1


def test_dump_load_round_trip(tmp_path):
    suite = small_suite()
    assert load_suite(dump_suite(suite, tmp_path / "s.jsonl")) == suite
    assert load_suite(tmp_path / "s.jsonl").digest() == suite.digest()


def test_exact_judge_matches_score():
    rng = random.Random(11)
    for _ in range(1000):
        nouns = rng.sample(["ball", "cat", "cup", "dog"], 3)
        scene = random_scene(rng, nouns)
        cs = random_any_constraints(rng, nouns, rng.randint(1, 4))
        image = ImageRef.from_payload(scene.serialize(), "scene-graph")
        assert judge_alignment(image, JudgeSpec("constraints", cs)) == score(scene, cs)


def test_exact_judge_rejects_raster():
    with pytest.raises(MediaMismatch):
        judge_alignment(ImageRef.from_payload(b"png", "raster-png"),
                        JudgeSpec("constraints", parse_prompt_dsl("count(ball,1)")))


class Answers:
    def __init__(self, answers):
        self.answers = list(answers)

    def understand(self, image, prompt):
        return f"MATCH: {self.answers.pop(0)}"


def test_question_judge_fraction():
    judge = JudgeSpec("questions", questions=("a?", "b?", "c?", "d?"))
    image = ImageRef.from_payload(b"png", "raster-png")
    assert judge_alignment(image, judge, Answers(["Yes", "yes.", "No", "YES"])) == 0.75


def test_question_judge_agrees_with_exact_judge_on_simulator():
    rng = random.Random(12)
    backend = SimulatorBackend(NoiseConfig())
    for seed in range(300):
        cs = random_constraints(rng, rng.randint(1, 5), p_not=0.3)
        scene = sample_scene(cs, NoiseConfig(), seed)
        image = ImageRef.from_payload(scene.serialize(), "scene-graph")
        exact = JudgeSpec("constraints", cs)
        assert judge_alignment(image, mechanical_questions(exact), backend) == \
            judge_alignment(image, exact)


def test_percentile_nearest_rank():
    assert percentile([1, 2, 3, 4], 50) == 2
    assert percentile(list(range(1, 101)), 95) == 95
    assert percentile([7], 95) == 7
    assert percentile([], 50) == 0.0


def test_baseline_curve_length_one():
    suite = small_suite(1)
    report = run_benchmark(suite, SimulatorBackend(), [ReasoningConfig(pipeline="baseline")])
    assert len(report.runs["baseline@4"]["curve"]) == 1


def test_sweep_has_one_column_per_budget():
    configs = [ReasoningConfig(max_iterations=m) for m in range(1, 6)]
    report = run_benchmark(small_suite(), SimulatorBackend(), configs)
    assert report.labels() == [f"uig@{m}" for m in range(1, 6)]
    for m in range(1, 6):
        run = report.runs[f"uig@{m}"]
        assert len(run["curve"]) == m + 1
        assert all(0.0 <= v <= 1.0 for v in run["curve"])


def test_report_round_trip_and_csv_shape(tmp_path):
    configs = [ReasoningConfig(pipeline=p) for p in ("baseline", "nobridge", "uig")]
    report = run_benchmark(small_suite(), SimulatorBackend(), configs)
    assert read_report(write_report(report, tmp_path / "r.json")) == report
    rows = render_trend_csv(report, tmp_path / "t.csv").splitlines()
    assert len(rows) - 1 == 3 * (4 + 1)
    assert (tmp_path / "t.csv").read_text().splitlines() == rows


def test_unknown_report_version(tmp_path):
    (tmp_path / "r.json").write_text(json.dumps({"version": "9.0", "metadata": {}, "runs": {}}))
    with pytest.raises(SchemaError):
        read_report(tmp_path / "r.json")


def test_report_reproducible_and_schedule_independent():
    suite = small_suite(20)
    configs = [ReasoningConfig(pipeline="nobridge"), ReasoningConfig()]
    noise = NoiseConfig(p_edit_fail=0.2, p_collateral=0.3)
    a = run_benchmark(suite, SimulatorBackend(noise), configs, parallelism=1)
    b = run_benchmark(suite, SimulatorBackend(noise), configs, parallelism=4)
    assert a.dumps(timing=False) == b.dumps(timing=False)


def test_entry_seed_depends_on_id_not_position():
    assert entry_seed(42, "p1") == entry_seed(42, "p1")
    assert entry_seed(42, "p1") != entry_seed(42, "p2")
    assert entry_seed(42, "p1") != entry_seed(43, "p1")


def test_traces_persisted_and_latency_totals_match(tmp_path):
    suite = small_suite(8)
    report = run_benchmark(suite, SimulatorBackend(), [ReasoningConfig()], trace_dir=tmp_path)
    paths = sorted((tmp_path / "uig@4").glob("*.json"))
    assert [p.stem for p in paths] == sorted(e.id for e in suite)
    traces = [read_trace(p) for p in paths]
    timing = report.timing["uig@4"]
    assert timing["total"]["total_ms"] == sum(t.total_latency_ms for t in traces)
    assert timing["generate"]["total_ms"] == sum(t.latency_generate_ms for t in traces)
    assert timing["edit"]["total_ms"] == sum(s.latency_edit_ms for t in traces for s in t.steps)


class Flaky(SimulatorBackend):
    def generate(self, prompt, seed):
        if "cat" in prompt:
            raise BackendFailure("boom", status=503)
        return super().generate(prompt, seed)


def test_failed_entries_become_rows(tmp_path):
    lines = ['{"id": "ok", "prompt": "count(ball,2)"}', '{"id": "bad", "prompt": "count(cat,2)"}']
    suite = load_suite(_write(tmp_path, lines))
    report = run_benchmark(suite, Flaky(), [ReasoningConfig()], trace_dir=tmp_path / "t")
    run = report.runs["uig@4"]
    assert (run["n_ok"], run["n_failed"]) == (1, 1)
    bad = next(r for r in run["rows"] if r["id"] == "bad")
    assert bad["status"] == "failed" and "BackendFailure" in bad["error"]
    assert (tmp_path / "t" / "uig@4" / "bad.error.json").exists()


def test_configs_required():
    with pytest.raises(ValueError):
        run_benchmark(small_suite(1), SimulatorBackend(), [])
    with pytest.raises(ValueError):
        run_benchmark(small_suite(1), SimulatorBackend(), [ReasoningConfig(), ReasoningConfig()])

from __future__ import annotations

import json
import random
import subprocess
import sys

import httpx

import pytest

from uig.backends import SimulatorBackend
from uig.backends.server import StubServer
from uig.cli import UsageError, main, parse_sweep
from uig.harness import Suite, dump_suite, read_report
from uig.records import dumps_trace, loads_trace
from uig.sim.prompts import random_constraints
from uig.sim.world import NoiseConfig

PROMPT = "count(cat,2); color(cat,red); rel(cat,left_of,dog); style(glass,dog)"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _trace_path(out: str) -> str:
    return next(l.split(" ", 1)[1] for l in out.splitlines() if l.startswith("trace "))


def test_missing_prompt_is_usage_error(capsys):
    code, _, err = run(capsys, "run")
    assert code == 2 and "--prompt" in err


def test_max_iter_zero_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "run", "--prompt", PROMPT, "--max-iter", "0", "--out", str(tmp_path))
    assert code == 2 and "max_iterations" in err


def test_sim_run_records_defaults(capsys, tmp_path):
    code, out, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path))
    assert code == 0
    assert "final_image " in out and "terminated_by " in out
    trace = loads_trace(open(_trace_path(out)).read())
    assert (trace.config.max_iterations, trace.config.seed) == (4, 42)


def test_prompt_from_file(capsys, tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# one prompt\ncount(ball,2)\n")
    code, out, _ = run(capsys, "run", "--prompt", f"@{f}", "--out", str(tmp_path / "o"))
    assert code == 0
    f.write_text("count(ball,2)\ncount(cat,1)\n")
    assert run(capsys, "run", "--prompt", f"@{f}", "--out", str(tmp_path / "o"))[0] == 2


def test_non_dsl_prompt_on_sim_is_usage_error(capsys, tmp_path):
    assert run(capsys, "run", "--prompt", "two cats", "--out", str(tmp_path))[0] == 2


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 7, "max_iter": 2, "pipeline": "nobridge",
                               "p_violate": 1.0}))
    code, out, _ = run(capsys, "run", "--prompt", PROMPT, "--config", str(cfg), "--seed", "9",
                       "--out", str(tmp_path / "o"))
    assert code == 0
    trace = loads_trace(open(_trace_path(out)).read())
    assert (trace.config.seed, trace.config.max_iterations, trace.config.pipeline) == (
        9, 2, "nobridge")
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "run", "--prompt", PROMPT, "--config", str(cfg))[0] == 2


def test_http_backend_failure_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "run", "--prompt", PROMPT, "--backend", "http", "--base-url",
                       "http://127.0.0.1:9", "--max-retries", "0", "--out", str(tmp_path))
    assert code == 1 and "BackendFailure" in err


def test_http_backend_against_served_simulator(capsys, tmp_path):
    with StubServer(SimulatorBackend(NoiseConfig())) as server:
        code, out, _ = run(capsys, "run", "--prompt", PROMPT, "--backend", "http", "--base-url",
                           server.url, "--media-kind", "scene-graph", "--out", str(tmp_path / "h"))
    assert code == 0
    code2, out2, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path / "s"))
    remote = loads_trace(open(_trace_path(out)).read())
    local = loads_trace(open(_trace_path(out2)).read())
    assert dumps_trace(remote, timings=False) == dumps_trace(local, timings=False)


def test_unparseable_verdict_exits_1(capsys, tmp_path):
    t = tmp_path / "t.txt"
    t.write_text("Say anything.\n{{prompt}}\nMATCH: EDIT:\n")

    class Mumbler(SimulatorBackend):
        def understand(self, image, prompt):
            return "looks fine to me"

    with StubServer(Mumbler(NoiseConfig())) as server:
        code, _, err = run(capsys, "run", "--prompt", PROMPT, "--backend", "http", "--base-url",
                           server.url, "--media-kind", "scene-graph", "--understanding-template",
                           str(t), "--out", str(tmp_path))
    assert code == 1 and "UnparseableVerdict" in err


def test_inspect_valid_trace(capsys, tmp_path):
    _, out, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path))
    path = _trace_path(out)
    steps = len(loads_trace(open(path).read()).steps)
    code, text, _ = run(capsys, "inspect", path)
    assert code == 0
    header = next(i for i, l in enumerate(text.splitlines()) if l.strip().startswith("step"))
    rows = [l for l in text.splitlines()[header + 1:] if l[:4].strip().isdigit()]
    assert len(rows) == steps


def test_inspect_tampered_final_image(capsys, tmp_path):
    _, out, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path), "--p-violate", "1")
    doc = json.load(open(_trace_path(out)))
    assert doc["terminated_by"] == "match"
    doc["final_image"] = doc["initial_image"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "inspect", str(bad))
    assert code == 1 and "image the matching verdict inspected" in err


def test_inspect_budget_trace(capsys, tmp_path):
    _, out, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path), "--p-violate", "1",
                    "--p-edit-fail", "1", "--max-iter", "2")
    code, text, _ = run(capsys, "inspect", _trace_path(out))
    assert code == 0 and "terminated_by=budget" in text


def test_inspect_unknown_version(capsys, tmp_path):
    _, out, _ = run(capsys, "run", "--prompt", PROMPT, "--out", str(tmp_path))
    doc = json.load(open(_trace_path(out)))
    doc["version"] = "3.0"
    p = tmp_path / "v3.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(capsys, "inspect", str(p))
    assert code == 1 and "unsupported trace version" in err


def test_parse_sweep():
    assert parse_sweep("1..5") == [1, 2, 3, 4, 5]
    assert parse_sweep("2,4") == [2, 4]
    for bad in ("5..1", "a..b", ",", "x"):
        with pytest.raises(UsageError):
            parse_sweep(bad)


@pytest.fixture
def suite_file(tmp_path):
    rng = random.Random(3)
    return dump_suite(Suite.from_constraint_sets([random_constraints(rng, 4) for _ in range(10)]),
                      tmp_path / "suite.jsonl")


def test_bench_sweep(capsys, tmp_path, suite_file):
    report_path = tmp_path / "out" / "report.json"
    code, out, _ = run(capsys, "bench", "--suite", str(suite_file), "--pipelines", "uig",
                       "--sweep-max-iter", "1..5", "--report", str(report_path))
    assert code == 0
    report = read_report(report_path)
    assert report.labels() == [f"uig@{m}" for m in range(1, 6)]
    csv_rows = (tmp_path / "out" / "report.csv").read_text().splitlines()
    assert len(csv_rows) == 1 + sum(m + 1 for m in range(1, 6))


def test_bench_unknown_pipeline(capsys, tmp_path, suite_file):
    code, _, err = run(capsys, "bench", "--suite", str(suite_file), "--pipelines", "uig,best",
                       "--report", str(tmp_path / "r.json"))
    assert code == 2 and "best" in err


def test_bench_bad_suite(capsys, tmp_path):
    (tmp_path / "s.jsonl").write_text("")
    assert run(capsys, "bench", "--suite", str(tmp_path / "s.jsonl"), "--report",
               str(tmp_path / "r.json"))[0] == 2


def test_bench_report_round_trip(capsys, tmp_path, suite_file):
    report_path = tmp_path / "r.json"
    assert run(capsys, "bench", "--suite", str(suite_file), "--report", str(report_path))[0] == 0
    report = read_report(report_path)
    assert report_path.read_text() == report.dumps()
    assert set(report.labels()) == {"baseline@4", "nobridge@4", "uig@4"}


def test_serve_answers_health_checks():
    proc = subprocess.Popen([sys.executable, "-m", "uig", "serve", "--port", "0"],
                            stdout=subprocess.PIPE, text=True)
    try:
        url = proc.stdout.readline().split()[-1]
        assert httpx.get(url + "/v1/health", timeout=5).json() == {"status": "ok"}
        r = httpx.post(url + "/v1/generate", json={"prompt": "count(ball,2)", "seed": 1}, timeout=5)
        assert r.json()["image"]["format"] == "scene-graph"
    finally:
        proc.terminate()
        proc.wait(timeout=5)

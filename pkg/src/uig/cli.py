"""Command-line entry point: ``uig run | bench | inspect | serve``.

Exit codes: 0 on success, 1 on backend or trace failures, 2 on usage
errors. Options may also come from a JSON file given with ``--config``;
flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .backends.http import BackendEndpoint, HttpBackend
from .backends.server import StubServer
from .backends.sim import SimulatorBackend
from .core import run_pipeline_variant
from .errors import (BackendFailure, DSLError, MediaMismatch, MissingEditPrompt, SchemaError,
                     TraceSchemaError, UiGError, UnparseableEditInstruction, UnparseableVerdict)
from .harness.report import render_trend_csv, write_report
from .harness.runner import run_benchmark
from .harness.suite import load_suite
from .protocol import UnderstandingTemplate
from .records import (DEFAULT_MAX_ITERATIONS, DEFAULT_SEED, MISSING_EDIT_POLICIES, PIPELINES,
                      PromptSpec, ReasoningConfig, validate_trace)
from .sim.dsl import parse_prompt_dsl
from .sim.world import NoiseConfig
from .store import default_store, new_run_id, read_trace, record_run

# option name -> built-in default; None in argparse means "not given"
DEFAULTS = {
    "backend": "sim",
    "pipeline": "uig",
    "max_iter": DEFAULT_MAX_ITERATIONS,
    "seed": DEFAULT_SEED,
    "out": "uig-out",
    "missing_edit_policy": "error",
    "understanding_template": None,
    "p_violate": 0.5,
    "p_edit_fail": 0.0,
    "p_collateral": 0.0,
    "base_url": None,
    "timeout_ms": 120_000,
    "max_retries": 3,
    "backoff_base_ms": 500,
    "media_kind": "raster-png",
    "pipelines": "baseline,nobridge,uig",
    "sweep_max_iter": None,
    "parallelism": 4,
    "trace_dir": None,
    "trend_csv": None,
    "host": "127.0.0.1",
    "port": 8080,
}

FAILURES = (BackendFailure, MediaMismatch, UnparseableVerdict, MissingEditPrompt,
            UnparseableEditInstruction)


class UsageError(Exception):
    pass


def _add_noise(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulator noise")
    g.add_argument("--p-violate", type=float, help="chance each constraint is broken (0.5)")
    g.add_argument("--p-edit-fail", type=float, help="chance an edit op silently fails (0.0)")
    g.add_argument("--p-collateral", type=float, help="chance an edit op damages something else (0.0)")


def _add_backend(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("sim", "http"))
    g = p.add_argument_group("http backend")
    g.add_argument("--base-url")
    g.add_argument("--timeout-ms", type=int)
    g.add_argument("--max-retries", type=int)
    g.add_argument("--backoff-base-ms", type=int)
    g.add_argument("--media-kind", choices=("raster-png", "scene-graph"),
                   help="image format the remote service speaks (raster-png)")
    _add_noise(p)


def _add_loop(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help=f"run seed ({DEFAULT_SEED})")
    p.add_argument("--missing-edit-policy", choices=MISSING_EDIT_POLICIES)
    p.add_argument("--understanding-template", help="path to an understanding prompt template")
    p.add_argument("--config", help="JSON file with default option values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uig", description="Understanding-in-generation loop")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one prompt through a pipeline")
    run.add_argument("--prompt", required=True, help="prompt text, or @path to read it from a file")
    run.add_argument("--pipeline", choices=PIPELINES)
    run.add_argument("--max-iter", type=int, help=f"iteration budget ({DEFAULT_MAX_ITERATIONS})")
    run.add_argument("--out", help="output directory for traces and images (uig-out)")
    _add_loop(run)
    _add_backend(run)

    bench = sub.add_parser("bench", help="benchmark pipelines over a suite")
    bench.add_argument("--suite", required=True, help="line-delimited JSON suite")
    bench.add_argument("--pipelines", help="comma-separated pipelines (baseline,nobridge,uig)")
    bench.add_argument("--sweep-max-iter", help="budgets to sweep: '1..5', '2,4' or '4'")
    bench.add_argument("--max-iter", type=int, help="budget when not sweeping (4)")
    bench.add_argument("--report", required=True, help="report JSON output path")
    bench.add_argument("--trend-csv", help="trend CSV path (report path with .csv)")
    bench.add_argument("--trace-dir", help="where per-entry traces go")
    bench.add_argument("--parallelism", type=int)
    _add_loop(bench)
    _add_backend(bench)

    inspect = sub.add_parser("inspect", help="print and validate a trace")
    inspect.add_argument("trace")

    serve = sub.add_parser("serve", help="serve the simulator over HTTP")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--config", help="JSON file with default option values")
    _add_noise(serve)
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def _resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags."""
    merged = dict(DEFAULTS)
    merged.update(_load_config(getattr(args, "config", None)))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _noise(opts: dict) -> NoiseConfig:
    try:
        return NoiseConfig(float(opts["p_violate"]), float(opts["p_edit_fail"]),
                           float(opts["p_collateral"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _backend(opts: dict, store):
    if opts["backend"] == "sim":
        return SimulatorBackend(_noise(opts), store=store)
    if not opts["base_url"]:
        raise UsageError("--backend http needs --base-url")
    try:
        endpoint = BackendEndpoint(opts["base_url"], int(opts["timeout_ms"]),
                                   int(opts["max_retries"]), int(opts["backoff_base_ms"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return HttpBackend(endpoint, media_kinds=(opts["media_kind"],), store=store)


def _template(opts: dict) -> UnderstandingTemplate | None:
    path = opts["understanding_template"]
    if not path:
        return None
    try:
        return UnderstandingTemplate.from_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read template {path}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"bad template {path}: {exc}") from exc


def _prompt_text(raw: str) -> str:
    if not raw.startswith("@"):
        return raw
    path = Path(raw[1:])
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read prompt file {path}: {exc}") from exc
    prompts = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if len(prompts) != 1:
        raise UsageError(f"{path} holds {len(prompts)} prompts; expected exactly one")
    return prompts[0]


def _config(opts: dict, pipeline: str, max_iter) -> ReasoningConfig:
    try:
        return ReasoningConfig(max_iterations=int(max_iter), seed=int(opts["seed"]),
                               missing_edit_policy=opts["missing_edit_policy"],
                               pipeline=pipeline)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_run(args: argparse.Namespace) -> int:
    opts = _resolve(args)
    text = _prompt_text(args.prompt)
    try:
        prompt = PromptSpec(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    config = _config(opts, opts["pipeline"], opts["max_iter"])
    template = _template(opts)
    if opts["backend"] == "sim":
        try:
            parse_prompt_dsl(text)
        except DSLError as exc:
            raise UsageError(f"the simulator needs a constraint prompt: {exc}") from exc
    out = Path(opts["out"])
    store = default_store(out / "store")
    backend = _backend(opts, store)
    backend.probe()
    trace = run_pipeline_variant(prompt, backend, config, template=template)
    record = record_run(out, trace, store)
    print(f"final_image {trace.final_image.content_address}")
    print(f"terminated_by {trace.terminated_by}")
    print(f"trace {record.trace_path}")
    return 0


_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_sweep(text: str) -> list[int]:
    m = _RANGE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise UsageError(f"empty sweep {text!r}")
        return list(range(lo, hi + 1))
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad sweep {text!r}; use '1..5' or '1,2,3'") from None
    if not values:
        raise UsageError(f"bad sweep {text!r}")
    return values


def cmd_bench(args: argparse.Namespace) -> int:
    opts = _resolve(args)
    pipelines = [p.strip() for p in str(opts["pipelines"]).split(",") if p.strip()]
    unknown = [p for p in pipelines if p not in PIPELINES]
    if unknown or not pipelines:
        raise UsageError(f"unknown pipeline(s) {', '.join(unknown) or '(none)'}; "
                         f"choose from {', '.join(PIPELINES)}")
    sweep = opts["sweep_max_iter"]
    budgets = parse_sweep(str(sweep)) if sweep else [int(opts["max_iter"])]
    configs = []
    for pipeline in pipelines:
        for budget in budgets:
            cfg = _config(opts, pipeline, budget)
            if cfg not in configs:
                configs.append(cfg)
    try:
        suite = load_suite(args.suite)
    except OSError as exc:
        raise UsageError(f"cannot read suite {args.suite}: {exc}") from exc
    except SchemaError as exc:
        raise UsageError(f"bad suite {args.suite}: {exc}") from exc
    report_path = Path(args.report)
    trace_dir = Path(opts["trace_dir"]) if opts["trace_dir"] else (
        report_path.parent / f"{report_path.stem}-traces" / new_run_id())
    store = default_store(report_path.parent / "store")
    backend = _backend(opts, store)
    backend.probe()
    report = run_benchmark(suite, backend, configs, trace_dir=trace_dir,
                           parallelism=int(opts["parallelism"]), store=store,
                           template=_template(opts))
    write_report(report, report_path)
    csv_path = Path(opts["trend_csv"]) if opts["trend_csv"] else report_path.with_suffix(".csv")
    render_trend_csv(report, csv_path)
    print(f"{'run':<16} {'mean_final':>10} {'ok':>5} {'failed':>6} {'calls':>7}")
    for label, run in report.runs.items():
        mean = run["mean_final_score"]
        print(f"{label:<16} {'-' if mean is None else f'{mean:.4f}':>10} {run['n_ok']:>5} "
              f"{run['n_failed']:>6} {run['calls']['total']:>7}")
    print(f"report {report_path}")
    print(f"trend_csv {csv_path}")
    print(f"traces {trace_dir}")
    return 0


def _short(ref) -> str:
    return ref.content_address[:12] if ref is not None else "-"


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        trace = read_trace(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc}") from exc
    except TraceSchemaError as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    cfg = trace.config
    print(f"prompt        {trace.prompt.text}")
    print(f"pipeline      {cfg.pipeline}  max_iterations={cfg.max_iterations}  seed={cfg.seed}")
    print(f"initial_image {trace.initial_image.content_address}")
    print(f"{'step':>4}  {'verdict':<7}  {'input':<12}  {'output':<12}  "
          f"{'und_ms':>6}  {'edit_ms':>7}  edit_prompt")
    for s in trace.steps:
        verdict = "Yes" if s.verdict.matched else "No"
        print(f"{s.index:>4}  {verdict:<7}  {_short(s.input_image):<12}  "
              f"{_short(s.output_image):<12}  {s.latency_understand_ms:>6}  "
              f"{s.latency_edit_ms:>7}  {s.edit_prompt or ''}")
    print(f"final_image   {trace.final_image.content_address}")
    print(f"terminated_by={trace.terminated_by}")
    print(f"latency_ms    generate={trace.latency_generate_ms} total={trace.total_latency_ms}")
    problems = validate_trace(trace)
    for p in problems:
        print(f"INVALID: {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_serve(args: argparse.Namespace) -> int:
    opts = _resolve(args)
    try:
        server = StubServer(SimulatorBackend(_noise(opts)), opts["host"], int(opts["port"]))
    except OSError as exc:
        print(f"uig: cannot bind {opts['host']}:{opts['port']}: {exc}", file=sys.stderr)
        return 1
    print(f"serving simulator on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "inspect": cmd_inspect, "serve": cmd_serve}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"uig: error: {exc}", file=sys.stderr)
        return 2
    except FAILURES as exc:
        print(f"uig: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except UiGError as exc:
        print(f"uig: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Value types of a reasoning run and the version 1 trace document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import TraceSchemaError
from .images import ImageRef

PIPELINES = ("baseline", "nobridge", "uig")
MISSING_EDIT_POLICIES = ("error", "fallback-original-prompt")
TERMINATIONS = ("match", "budget")
TRACE_VERSION = "1.0"
MAX_ITERATIONS_LIMIT = 32
DEFAULT_MAX_ITERATIONS = 4
DEFAULT_SEED = 42
U64 = 2 ** 64


@dataclass(frozen=True)
class PromptSpec:
    text: str
    id: str = "prompt"

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("prompt text must be non-empty")
        if not self.id:
            raise ValueError("prompt id must be non-empty")


@dataclass(frozen=True)
class ReasoningConfig:
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    seed: int = DEFAULT_SEED
    missing_edit_policy: str = "error"
    pipeline: str = "uig"

    def __post_init__(self):
        if isinstance(self.max_iterations, bool) or not isinstance(self.max_iterations, int):
            raise ValueError("max_iterations must be an integer")
        if not 1 <= self.max_iterations <= MAX_ITERATIONS_LIMIT:
            raise ValueError(f"max_iterations must be in [1, {MAX_ITERATIONS_LIMIT}]")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.missing_edit_policy not in MISSING_EDIT_POLICIES:
            raise ValueError(f"unknown missing_edit_policy {self.missing_edit_policy!r}")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}")

    def label(self) -> str:
        return f"{self.pipeline}@{self.max_iterations}"

    def with_(self, **changes) -> "ReasoningConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Verdict:
    matched: bool
    raw_text: str


@dataclass(frozen=True)
class ReasoningStep:
    index: int
    input_image: ImageRef
    verdict: Verdict
    edit_prompt: str | None = None
    output_image: ImageRef | None = None
    latency_understand_ms: int = 0
    latency_edit_ms: int = 0


@dataclass(frozen=True)
class ReasoningTrace:
    prompt: PromptSpec
    config: ReasoningConfig
    initial_image: ImageRef
    steps: tuple[ReasoningStep, ...]
    final_image: ImageRef
    terminated_by: str
    latency_generate_ms: int = 0
    total_latency_ms: int = 0
    version: str = field(default=TRACE_VERSION, compare=False)

    def images(self) -> list[ImageRef]:
        """Image_0, Image_1, ... in production order."""
        out = [self.initial_image]
        out.extend(s.output_image for s in self.steps if s.output_image is not None)
        return out

    def call_counts(self) -> dict[str, int]:
        if self.config.pipeline == "baseline":
            gen, und, edit = 1, 0, 0
        else:
            gen = 1
            und = len(self.steps)
            edit = sum(1 for s in self.steps if s.output_image is not None)
        return {"generate": gen, "understand": und, "edit": edit, "total": gen + und + edit}

    def stage_latency_sum(self) -> int:
        return self.latency_generate_ms + sum(
            s.latency_understand_ms + s.latency_edit_ms for s in self.steps)

    def recorded_stages(self) -> int:
        return self.call_counts()["total"]


# -- validation ----------------------------------------------------------------

def validate_trace(trace: ReasoningTrace) -> list[str]:
    """Every invariant a finished trace must satisfy; empty when valid."""
    problems: list[str] = []
    steps = trace.steps
    cfg = trace.config
    if trace.terminated_by not in TERMINATIONS:
        problems.append(f"unknown termination reason {trace.terminated_by!r}")
    if cfg.pipeline == "baseline":
        if steps:
            problems.append("baseline trace must have no reasoning steps")
        if trace.final_image != trace.initial_image:
            problems.append("baseline final image must be the initial generation")
    else:
        if not 1 <= len(steps) <= cfg.max_iterations:
            problems.append(f"step count {len(steps)} outside [1, {cfg.max_iterations}]")
        for pos, step in enumerate(steps, 1):
            if step.index != pos:
                problems.append(f"step {pos} carries index {step.index}")
            expected_input = trace.initial_image if pos == 1 else steps[pos - 2].output_image
            if step.input_image != expected_input:
                problems.append(f"step {pos} input image is not the previous step's output")
            if step.verdict.matched:
                if step.output_image is not None or step.edit_prompt is not None:
                    problems.append(f"matched step {pos} must have no edit prompt or output image")
                if pos != len(steps):
                    problems.append(f"matched step {pos} is not the last step")
            else:
                if step.output_image is None or not step.edit_prompt:
                    problems.append(f"unmatched step {pos} needs an edit prompt and output image")
            if step.latency_understand_ms < 0 or step.latency_edit_ms < 0:
                problems.append(f"step {pos} has a negative latency")
        if steps:
            last = steps[-1]
            if trace.terminated_by == "match":
                if not last.verdict.matched:
                    problems.append("terminated by match but the last verdict is No")
                if trace.final_image != last.input_image:
                    problems.append(
                        "final image is not the image the matching verdict inspected")
            elif trace.terminated_by == "budget":
                if last.verdict.matched:
                    problems.append("terminated by budget but the last verdict is Yes")
                if len(steps) != cfg.max_iterations:
                    problems.append("terminated by budget before max_iterations steps")
                if trace.final_image != last.output_image:
                    problems.append("budget-terminated final image is not the last edit output")
    if trace.latency_generate_ms < 0 or trace.total_latency_ms < 0:
        problems.append("negative latency")
    stage_sum = trace.stage_latency_sum()
    if trace.total_latency_ms < stage_sum:
        problems.append(f"total latency {trace.total_latency_ms} ms below stage sum {stage_sum} ms")
    elif trace.total_latency_ms - stage_sum > trace.recorded_stages():
        problems.append(
            f"total latency {trace.total_latency_ms} ms exceeds stage sum {stage_sum} ms "
            f"by more than 1 ms per recorded stage")
    return problems


# -- serialization ---------------------------------------------------------------

LATENCY_KEYS = ("latency_generate_ms", "total_latency_ms", "latency_understand_ms", "latency_edit_ms")


def trace_to_dict(trace: ReasoningTrace, *, timings: bool = True) -> dict:
    steps = []
    for s in trace.steps:
        d = {
            "index": s.index,
            "input_image": s.input_image.to_dict(),
            "verdict": {"matched": s.verdict.matched, "raw_text": s.verdict.raw_text},
        }
        if s.edit_prompt is not None:
            d["edit_prompt"] = s.edit_prompt
        if s.output_image is not None:
            d["output_image"] = s.output_image.to_dict()
        if timings:
            d["latency_understand_ms"] = s.latency_understand_ms
            d["latency_edit_ms"] = s.latency_edit_ms
        steps.append(d)
    doc = {
        "version": trace.version,
        "prompt": {"id": trace.prompt.id, "text": trace.prompt.text},
        "config": {
            "max_iterations": trace.config.max_iterations,
            "seed": trace.config.seed,
            "missing_edit_policy": trace.config.missing_edit_policy,
            "pipeline": trace.config.pipeline,
        },
        "initial_image": trace.initial_image.to_dict(),
        "steps": steps,
        "final_image": trace.final_image.to_dict(),
        "terminated_by": trace.terminated_by,
    }
    if timings:
        doc["latency_generate_ms"] = trace.latency_generate_ms
        doc["total_latency_ms"] = trace.total_latency_ms
    return doc


def trace_from_dict(doc: dict) -> ReasoningTrace:
    if not isinstance(doc, dict) or "version" not in doc:
        raise TraceSchemaError("trace document has no version")
    version = str(doc["version"])
    if version.split(".")[0] != TRACE_VERSION.split(".")[0]:
        raise TraceSchemaError(f"unsupported trace version {version!r}")
    try:
        steps = tuple(
            ReasoningStep(
                index=int(s["index"]),
                input_image=ImageRef.from_dict(s["input_image"]),
                verdict=Verdict(bool(s["verdict"]["matched"]), s["verdict"]["raw_text"]),
                edit_prompt=s.get("edit_prompt"),
                output_image=ImageRef.from_dict(s["output_image"]) if "output_image" in s else None,
                latency_understand_ms=int(s.get("latency_understand_ms", 0)),
                latency_edit_ms=int(s.get("latency_edit_ms", 0)),
            )
            for s in doc["steps"]
        )
        return ReasoningTrace(
            prompt=PromptSpec(doc["prompt"]["text"], doc["prompt"]["id"]),
            config=ReasoningConfig(**doc["config"]),
            initial_image=ImageRef.from_dict(doc["initial_image"]),
            steps=steps,
            final_image=ImageRef.from_dict(doc["final_image"]),
            terminated_by=doc["terminated_by"],
            latency_generate_ms=int(doc.get("latency_generate_ms", 0)),
            total_latency_ms=int(doc.get("total_latency_ms", 0)),
            version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceSchemaError(f"malformed trace: {exc}") from exc


def dumps_trace(trace: ReasoningTrace, *, timings: bool = True) -> str:
    return json.dumps(trace_to_dict(trace, timings=timings), indent=2, sort_keys=True) + "\n"


def loads_trace(text: str) -> ReasoningTrace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceSchemaError(f"trace is not valid JSON: {exc}") from exc
    return trace_from_dict(doc)

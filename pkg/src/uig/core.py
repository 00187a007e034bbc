"""The generate / understand / edit reasoning loop."""

from __future__ import annotations

import time
from typing import Callable, Sequence

from .backends.base import UnifiedModelBackend, derive_seed
from .errors import InconsistentTrace
from .images import ImageRef
from .protocol import UnderstandingTemplate, build_understanding_prompt, parse_understanding_response
from .records import PromptSpec, ReasoningConfig, ReasoningStep, ReasoningTrace, Verdict

Clock = Callable[[], int]

_NS_PER_MS = 1_000_000


class _Stopwatch:
    """Per-stage durations in whole milliseconds.

    The total is the floor of the summed nanosecond durations, so it differs
    from the sum of floored stages by rounding only (under 1 ms per stage).
    Time spent in the loop itself, such as parsing, is not counted.
    """

    def __init__(self, clock: Clock):
        self.clock = clock
        self.total_ns = 0

    def time(self, fn, *args):
        t0 = self.clock()
        out = fn(*args)
        elapsed = max(0, self.clock() - t0)
        self.total_ns += elapsed
        return out, elapsed // _NS_PER_MS

    def total_ms(self) -> int:
        return self.total_ns // _NS_PER_MS


def finalize(steps: Sequence[ReasoningStep], initial_image: ImageRef,
             config: ReasoningConfig) -> tuple[ImageRef, str]:
    """Pick the final image and termination reason for a finished loop.

    On a Yes at step k the image that step inspected is returned; when the
    budget runs out the unverified output of the last edit is returned.
    """
    if not steps:
        raise InconsistentTrace("no reasoning steps to finalize")
    if len(steps) > config.max_iterations:
        raise InconsistentTrace(f"{len(steps)} steps exceed max_iterations={config.max_iterations}")
    expected_input = initial_image
    for pos, step in enumerate(steps, 1):
        if step.index != pos:
            raise InconsistentTrace(f"step {pos} carries index {step.index}")
        if step.input_image != expected_input:
            raise InconsistentTrace(f"step {pos} does not consume the previous image")
        if step.verdict.matched:
            if pos != len(steps):
                raise InconsistentTrace(f"matched step {pos} is followed by more steps")
            if step.output_image is not None or step.edit_prompt is not None:
                raise InconsistentTrace(f"matched step {pos} has an edit")
            return step.input_image, "match"
        if step.output_image is None:
            raise InconsistentTrace(f"unmatched step {pos} has no output image")
        expected_input = step.output_image
    if len(steps) != config.max_iterations:
        raise InconsistentTrace("loop stopped without a match before the budget ran out")
    return steps[-1].output_image, "budget"


def _loop(prompt: PromptSpec, backend: UnifiedModelBackend, config: ReasoningConfig, *,
          bridge: bool, template: UnderstandingTemplate | None, clock: Clock) -> ReasoningTrace:
    watch = _Stopwatch(clock)
    initial, latency_generate = watch.time(backend.generate, prompt.text,
                                           derive_seed(config.seed, 0))

    understanding_prompt = build_understanding_prompt(prompt, template)
    # without the bridge the diagnosis is discarded, so a missing EDIT is harmless
    policy = config.missing_edit_policy if bridge else "fallback-original-prompt"
    steps: list[ReasoningStep] = []
    current = initial
    for i in range(1, config.max_iterations + 1):
        raw, latency_understand = watch.time(backend.understand, current, understanding_prompt)
        parsed = parse_understanding_response(raw, policy)
        if parsed.verdict.matched:
            steps.append(ReasoningStep(i, current, parsed.verdict,
                                       latency_understand_ms=latency_understand))
            break
        if bridge and parsed.edit_prompt is not None:
            instruction = parsed.edit_prompt
        else:
            instruction = prompt.text
        edited, latency_edit = watch.time(backend.edit, current, instruction,
                                          derive_seed(config.seed, i))
        steps.append(ReasoningStep(i, current, parsed.verdict, instruction, edited,
                                   latency_understand, latency_edit))
        current = edited

    final, reason = finalize(steps, initial, config)
    return ReasoningTrace(prompt, config, initial, tuple(steps), final, reason,
                          latency_generate, watch.total_ms())


def run_reasoning(prompt: PromptSpec, backend: UnifiedModelBackend,
                  config: ReasoningConfig | None = None, *,
                  template: UnderstandingTemplate | None = None,
                  clock: Clock = time.perf_counter_ns) -> ReasoningTrace:
    """Run the full understanding-in-generation loop.

    Exactly one generate call, then up to ``max_iterations`` understand
    calls, each No verdict followed by an edit driven by the diagnosis.
    """
    return _loop(prompt, backend, config or ReasoningConfig(), bridge=True,
                 template=template, clock=clock)


def run_baseline(prompt: PromptSpec, backend: UnifiedModelBackend, config: ReasoningConfig,
                 *, clock: Clock = time.perf_counter_ns) -> ReasoningTrace:
    watch = _Stopwatch(clock)
    initial, latency = watch.time(backend.generate, prompt.text, derive_seed(config.seed, 0))
    return ReasoningTrace(prompt, config, initial, (), initial, "budget", latency, watch.total_ms())


def run_pipeline_variant(prompt: PromptSpec, backend: UnifiedModelBackend,
                         config: ReasoningConfig | None = None, *,
                         template: UnderstandingTemplate | None = None,
                         clock: Clock = time.perf_counter_ns) -> ReasoningTrace:
    """Dispatch on ``config.pipeline``.

    ``baseline`` is a single generation; ``nobridge`` runs the same loop but
    edits with the original prompt text, keeping only the verdict.
    """
    config = config or ReasoningConfig()
    if config.pipeline == "baseline":
        return run_baseline(prompt, backend, config, clock=clock)
    if config.pipeline == "nobridge":
        return _loop(prompt, backend, config, bridge=False, template=template, clock=clock)
    return run_reasoning(prompt, backend, config, template=template, clock=clock)


__all__ = ["finalize", "run_reasoning", "run_pipeline_variant", "run_baseline", "Verdict"]

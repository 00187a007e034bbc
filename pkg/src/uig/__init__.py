"""Understanding-in-generation reasoning loop for text-to-image backends."""

from .core import finalize, run_pipeline_variant, run_reasoning
from .records import PromptSpec, ReasoningConfig, ReasoningStep, ReasoningTrace, Verdict

__version__ = "0.1.0"

__all__ = ["PromptSpec", "ReasoningConfig", "ReasoningStep", "ReasoningTrace", "Verdict",
           "finalize", "run_pipeline_variant", "run_reasoning"]

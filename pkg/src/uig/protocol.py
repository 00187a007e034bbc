"""Understanding prompt construction and response parsing.

The understanding backend answers free-form but must end with a footer::

    MATCH: Yes|No
    EDIT: <single-line instruction>      (only when No)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MissingEditPrompt, UnparseableVerdict
from .records import MISSING_EDIT_POLICIES, PromptSpec, Verdict

PLACEHOLDER = "{{prompt}}"

QUESTION_TEMPLATE = (
    "Look at the image and answer the question on the next line.\n"
    "{question}\n"
    "Reply with exactly one line: MATCH: Yes if the answer is yes, MATCH: No otherwise."
)


@dataclass(frozen=True)
class UnderstandingTemplate:
    template_text: str
    version: int = 1

    def __post_init__(self):
        if self.template_text.count(PLACEHOLDER) != 1:
            raise ValueError(f"template must contain {PLACEHOLDER} exactly once")
        for anchor in ("MATCH:", "EDIT:"):
            if anchor not in self.template_text:
                raise ValueError(f"template must instruct the {anchor} response line")

    def render(self, prompt_text: str) -> str:
        return self.template_text.replace(PLACEHOLDER, prompt_text)

    @classmethod
    def from_file(cls, path: str | Path, version: int = 1) -> "UnderstandingTemplate":
        return cls(Path(path).read_text(encoding="utf-8"), version)


def default_template() -> UnderstandingTemplate:
    text = resources.files("uig").joinpath("templates/understanding_v1.txt").read_text("utf-8")
    return UnderstandingTemplate(text, version=1)


def build_understanding_prompt(original: PromptSpec,
                               template: UnderstandingTemplate | None = None) -> str:
    return (template or default_template()).render(original.text)


def build_question_prompt(question: str) -> str:
    return QUESTION_TEMPLATE.replace("{question}", question.strip())


@dataclass(frozen=True)
class ParsedResponse:
    verdict: Verdict
    edit_prompt: str | None = None


_MATCH_RE = re.compile(r"^[\s>*#_`-]*match\s*:(.*)$", re.IGNORECASE)
_EDIT_RE = re.compile(r"^[\s>*#_`-]*edit\s*:(.*)$", re.IGNORECASE)
_EDGE_PUNCT = " \t*_`'\".,;:!?()[]"


def parse_understanding_response(raw: str, policy: str = "error") -> ParsedResponse:
    """Extract the verdict and editing instruction from a model response.

    The first MATCH line decides; its first word must be yes or no, with
    case and surrounding punctuation ignored. The first non-empty EDIT
    line supplies the instruction and is ignored on a Yes.
    """
    if policy not in MISSING_EDIT_POLICIES:
        raise ValueError(f"unknown missing-edit policy {policy!r}")
    lines = raw.splitlines()
    matched = None
    for line in lines:
        m = _MATCH_RE.match(line)
        if m is None:
            continue
        words = m.group(1).strip().lstrip("*_`").split()
        token = words[0].strip(_EDGE_PUNCT).lower() if words else ""
        if token not in ("yes", "no"):
            raise UnparseableVerdict(f"MATCH value is not yes/no: {line.strip()!r}")
        matched = token == "yes"
        break
    if matched is None:
        raise UnparseableVerdict("response has no MATCH line")
    verdict = Verdict(matched, raw)
    if matched:
        return ParsedResponse(verdict)
    for line in lines:
        m = _EDIT_RE.match(line)
        if m is not None:
            edit = m.group(1).strip().lstrip("*_` \t").strip()
            if edit:
                return ParsedResponse(verdict, edit)
    if policy == "error":
        raise MissingEditPrompt("verdict is No but no EDIT line was given")
    return ParsedResponse(verdict, None)


def format_response(matched: bool, edit_prompt: str | None = None) -> str:
    """Render a verdict in the footer format (inverse of the parser)."""
    if matched:
        return "MATCH: Yes"
    if edit_prompt is None or not edit_prompt.strip() or "\n" in edit_prompt:
        raise ValueError("a No verdict needs a single-line edit prompt")
    return f"MATCH: No\nEDIT: {edit_prompt.strip()}"

"""Alignment judges and the GNED text metric."""

from __future__ import annotations

import re
import unicodedata

from ..backends.base import resolve_payload
from ..errors import MediaMismatch
from ..images import ImageRef
from ..protocol import build_question_prompt, parse_understanding_response
from ..sim.scene import SceneGraph
from ..sim.world import score
from .suite import JudgeSpec

_WS = re.compile(r"\s+")


def levenshtein(a, b) -> int:
    """Unit-cost edit distance over two sequences, two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize_text(s: str) -> str:
    return _WS.sub(" ", unicodedata.normalize("NFC", s)).strip()


def gned(reference: str, hypothesis: str) -> float:
    """Normalized edit similarity, 1 - Lev / max(len) over code points.

    Both strings are NFC-normalized and whitespace runs collapse to a single
    space. Two empty strings score 1.0.
    """
    ref, hyp = normalize_text(reference), normalize_text(hypothesis)
    longest = max(len(ref), len(hyp))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(ref, hyp) / longest


def judge_alignment(image: ImageRef, judge: JudgeSpec, backend=None, store=None) -> float:
    """Alignment of ``image`` under ``judge``, a fraction in [0, 1].

    Constraint judges check the scene graph exactly. Question judges ask
    ``backend.understand`` each question and count the Yes answers.
    """
    if judge.kind == "constraints":
        if image.media_kind != "scene-graph":
            raise MediaMismatch(f"exact judge needs a scene graph, got {image.media_kind}")
        scene = SceneGraph.deserialize(resolve_payload(image, store))
        return score(scene, judge.constraints)
    if backend is None:
        raise ValueError("a question judge needs an understanding backend")
    yes = 0
    for q in judge.questions:
        raw = backend.understand(image, build_question_prompt(q))
        if parse_understanding_response(raw, "fallback-original-prompt").verdict.matched:
            yes += 1
    return yes / len(judge.questions)


def mechanical_questions(judge: JudgeSpec) -> JudgeSpec:
    """One question per constraint, answerable by the simulator."""
    return JudgeSpec("questions", questions=tuple(c.render() for c in judge.constraints))

"""Prompt suites stored as line-delimited JSON.

One record per line::

    {"id": "p001", "prompt": "count(balloon,4); color(balloon,black)",
     "judge": {"kind": "constraints"}}
    {"id": "p002", "prompt": "four black balloons",
     "judge": {"kind": "questions", "questions": ["Are there four balloons?"]}}

A constraints judge uses the prompt itself unless it carries its own
``"dsl"`` field.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DSLError, SchemaError
from ..records import PromptSpec
from ..sim.dsl import ConstraintSet, parse_prompt_dsl

ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
JUDGE_KINDS = ("constraints", "questions")


@dataclass(frozen=True)
class JudgeSpec:
    kind: str
    constraints: ConstraintSet | None = None
    questions: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in JUDGE_KINDS:
            raise ValueError(f"unknown judge kind {self.kind!r}")
        if self.kind == "constraints" and self.constraints is None:
            raise ValueError("constraints judge needs a constraint set")
        if self.kind == "questions" and not self.questions:
            raise ValueError("questions judge needs at least one question")

    def to_dict(self) -> dict:
        if self.kind == "constraints":
            return {"kind": "constraints", "dsl": self.constraints.render()}
        return {"kind": "questions", "questions": list(self.questions)}


@dataclass(frozen=True)
class SuiteEntry:
    prompt: PromptSpec
    judge: JudgeSpec

    @property
    def id(self) -> str:
        return self.prompt.id

    def to_dict(self) -> dict:
        return {"id": self.prompt.id, "prompt": self.prompt.text, "judge": self.judge.to_dict()}


@dataclass(frozen=True)
class Suite:
    entries: tuple[SuiteEntry, ...]
    name: str = field(default="suite", compare=False)

    def __post_init__(self):
        if not self.entries:
            raise SchemaError("suite has no entries")
        seen: set[str] = set()
        for i, e in enumerate(self.entries):
            if e.id in seen:
                raise SchemaError(f"duplicate id {e.id!r}", index=i)
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.entries)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()

    @classmethod
    def from_constraint_sets(cls, sets, prefix: str = "p") -> "Suite":
        width = max(3, len(str(len(sets))))
        return cls(tuple(
            SuiteEntry(PromptSpec(cs.render(), f"{prefix}{i:0{width}d}"),
                       JudgeSpec("constraints", cs))
            for i, cs in enumerate(sets)))


def _entry(record, index: int) -> SuiteEntry:
    if not isinstance(record, dict):
        raise SchemaError("record must be a JSON object", index=index)
    rid = record.get("id")
    if not isinstance(rid, str) or not ID_RE.match(rid):
        raise SchemaError(f"bad id {rid!r}", index=index)
    text = record.get("prompt")
    if not isinstance(text, str) or not text.strip():
        raise SchemaError(f"record {rid!r} has no prompt text", index=index)
    judge = record.get("judge", {"kind": "constraints"})
    if not isinstance(judge, dict):
        raise SchemaError(f"record {rid!r}: judge must be an object", index=index)
    kind = judge.get("kind")
    if kind == "constraints":
        try:
            cs = parse_prompt_dsl(judge.get("dsl", text))
        except DSLError as exc:
            raise SchemaError(f"record {rid!r}: {exc}", index=index) from exc
        spec = JudgeSpec("constraints", cs)
    elif kind == "questions":
        qs = judge.get("questions")
        if (not isinstance(qs, list) or not qs
                or not all(isinstance(q, str) and q.strip() for q in qs)):
            raise SchemaError(f"record {rid!r}: questions must be a non-empty list of strings",
                              index=index)
        spec = JudgeSpec("questions", questions=tuple(q.strip() for q in qs))
    else:
        raise SchemaError(f"record {rid!r}: unknown judge kind {kind!r}", index=index)
    return SuiteEntry(PromptSpec(text, rid), spec)


def parse_suite(text: str, name: str = "suite") -> Suite:
    entries = []
    seen: dict[str, int] = {}
    index = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", index=index) from exc
        entry = _entry(record, index)
        if entry.id in seen:
            raise SchemaError(f"duplicate id {entry.id!r} (first at record {seen[entry.id]})",
                              index=index)
        seen[entry.id] = index
        entries.append(entry)
        index += 1
    if not entries:
        raise SchemaError("suite file has no records")
    return Suite(tuple(entries), name)


def load_suite(path: str | Path) -> Suite:
    path = Path(path)
    return parse_suite(path.read_text(encoding="utf-8"), path.stem)


def dump_suite(suite: Suite, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(suite.to_jsonl(), encoding="utf-8")
    return path

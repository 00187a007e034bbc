"""Edit scripts: the machine-readable editing instructions of the simulator.

Canonical rendering is a single line of ``;``-separated operations::

    SET_COLOR(balloon,black); ADD(banana,yellow); SET_REL(cup,behind,woman)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..errors import EditScriptError
from . import vocab


@dataclass(frozen=True)
class Add:
    noun: str
    color: str | None = None

    def render(self) -> str:
        if self.color is None:
            return f"ADD({self.noun})"
        return f"ADD({self.noun},{self.color})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class Remove:
    """Remove one entity; ``entity_id`` pins a specific one (``ball#3``)."""

    noun: str
    entity_id: int | None = None

    def render(self) -> str:
        if self.entity_id is None:
            return f"REMOVE({self.noun})"
        return f"REMOVE({self.noun}#{self.entity_id})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class SetColor:
    noun: str
    color: str

    def render(self) -> str:
        return f"SET_COLOR({self.noun},{self.color})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class SetStyle:
    """Set the style of every entity of ``noun``; ``None`` clears it."""

    noun: str
    style: str | None

    def render(self) -> str:
        return f"SET_STYLE({self.noun},{self.style or 'none'})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class SetRel:
    subject: str
    relation: str
    object: str

    def render(self) -> str:
        return f"SET_REL({self.subject},{self.relation},{self.object})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.subject, self.object)


@dataclass(frozen=True)
class SetCount:
    noun: str
    n: int

    def render(self) -> str:
        return f"SET_COUNT({self.noun},{self.n})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


EditOp = Union[Add, Remove, SetColor, SetStyle, SetRel, SetCount]

OP_NAMES = ("ADD", "REMOVE", "SET_COLOR", "SET_STYLE", "SET_REL", "SET_COUNT")


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]

    def __post_init__(self):
        if not self.ops:
            raise ValueError("an edit script needs at least one operation")

    def render(self) -> str:
        return "; ".join(op.render() for op in self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @classmethod
    def parse(cls, text: str) -> "EditScript":
        parts = text.split(";")
        if not text.strip():
            raise EditScriptError("empty edit script")
        return cls(tuple(parse_op(p) for p in parts))


_OP_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\(([^()]*)\)\s*$")
_SALVAGE_RE = re.compile(
    r"\b(ADD|REMOVE|SET_COLOR|SET_STYLE|SET_REL|SET_COUNT)\s*\(([^()]*)\)",
    re.IGNORECASE,
)
# bare form, e.g. "ADD ball" or "set_color cup red"
_BARE_RE = re.compile(
    r"\b(ADD|REMOVE|SET_COLOR|SET_STYLE|SET_REL|SET_COUNT)\s+([\w#]+(?:[\s,]+[\w#]+){0,2})",
    re.IGNORECASE,
)


def _noun(word: str) -> str:
    if word not in vocab.NOUN_SET:
        raise EditScriptError(f"unknown noun {word!r}")
    return word


def _color(word: str) -> str:
    if word not in vocab.COLOR_SET:
        raise EditScriptError(f"unknown color {word!r}")
    return word


def _build(name: str, args: list[str]) -> EditOp:
    name = name.upper()
    n = len(args)
    if name == "ADD" and n in (1, 2):
        return Add(_noun(args[0]), _color(args[1]) if n == 2 else None)
    if name == "REMOVE" and n == 1:
        noun, sep, ident = args[0].partition("#")
        if not sep:
            return Remove(_noun(noun))
        if not ident.isdigit():
            raise EditScriptError(f"bad entity selector {args[0]!r}")
        return Remove(_noun(noun), int(ident))
    if name == "SET_COLOR" and n == 2:
        return SetColor(_noun(args[0]), _color(args[1]))
    if name == "SET_STYLE" and n == 2:
        if args[1] == "none":
            return SetStyle(_noun(args[0]), None)
        if args[1] not in vocab.STYLE_SET:
            raise EditScriptError(f"unknown style {args[1]!r}")
        return SetStyle(_noun(args[0]), args[1])
    if name == "SET_REL" and n == 3:
        if args[1] not in vocab.RELATION_SET:
            raise EditScriptError(f"unknown relation {args[1]!r}")
        return SetRel(_noun(args[0]), args[1], _noun(args[2]))
    if name == "SET_COUNT" and n == 2:
        if not args[1].isdigit() or int(args[1]) > vocab.MAX_COUNT:
            raise EditScriptError(f"bad count {args[1]!r}")
        return SetCount(_noun(args[0]), int(args[1]))
    if name not in OP_NAMES:
        raise EditScriptError(f"unknown operation {name!r}")
    raise EditScriptError(f"{name} does not take {n} argument(s)")


def parse_op(text: str) -> EditOp:
    m = _OP_RE.match(text)
    if m is None:
        raise EditScriptError(f"not an edit operation: {text.strip()!r}")
    args = [a.strip() for a in m.group(2).split(",")]
    return _build(m.group(1), args)


def _candidates(text: str):
    found = [(m.start(), m.group(1), [a.strip() for a in m.group(2).split(",")])
             for m in _SALVAGE_RE.finditer(text)]
    for m in _BARE_RE.finditer(text):
        words = re.split(r"[\s,]+", m.group(2).strip())
        # longest argument list first, so trailing prose is dropped only when needed
        for k in range(len(words), 0, -1):
            found.append((m.start(), m.group(1), words[:k]))
    found.sort(key=lambda c: c[0])
    return found


def salvage(text: str) -> EditScript | None:
    """Extract the first recognizable operation from free text."""
    for _, name, args in _candidates(text):
        try:
            op = _build(name, args)
        except EditScriptError:
            continue
        return EditScript((op,))
    return None

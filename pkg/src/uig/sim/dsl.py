"""Constraint DSL for simulator prompts.

Grammar (whitespace-insensitive)::

    prompt  := clause (';' clause)*
    clause  := count | color | rel | style | 'not(' clause ')'
    count   := 'count(' NOUN ',' INT ')'
    color   := 'color(' NOUN ',' COLOR ')'
    rel     := 'rel(' NOUN ',' RELATION ',' NOUN ')'
    style   := 'style(' ADJECTIVE ',' NOUN ')'

``not`` nests at most one level and a prompt may not repeat a clause.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

from ..errors import DSLSyntaxError, VocabularyError
from . import vocab


@dataclass(frozen=True)
class Count:
    noun: str
    n: int

    def render(self) -> str:
        return f"count({self.noun},{self.n})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class Color:
    noun: str
    color: str

    def render(self) -> str:
        return f"color({self.noun},{self.color})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class Rel:
    subject: str
    relation: str
    object: str

    def render(self) -> str:
        return f"rel({self.subject},{self.relation},{self.object})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.subject, self.object)


@dataclass(frozen=True)
class Style:
    adjective: str
    noun: str

    def render(self) -> str:
        return f"style({self.adjective},{self.noun})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return (self.noun,)


@dataclass(frozen=True)
class Not:
    inner: Union[Count, Color, Rel, Style]

    def render(self) -> str:
        return f"not({self.inner.render()})"

    @property
    def nouns(self) -> tuple[str, ...]:
        return self.inner.nouns


Constraint = Union[Count, Color, Rel, Style, Not]


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        if len(set(self.constraints)) != len(self.constraints):
            raise ValueError("duplicate constraints")
        for c in self.constraints:
            if isinstance(c, Not) and isinstance(c.inner, Not):
                raise ValueError("not() nests at most one level")

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __bool__(self) -> bool:
        return bool(self.constraints)

    def render(self) -> str:
        return "; ".join(c.render() for c in self.constraints)

    def nouns(self) -> tuple[str, ...]:
        """Mentioned nouns in order of first appearance."""
        seen: dict[str, None] = {}
        for c in self.constraints:
            for n in c.nouns:
                seen.setdefault(n, None)
        return tuple(seen)


_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|(\d+)|([(),;])|(\S))")


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | int | punct | eof
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None:  # only trailing whitespace remains
            break
        ident, number, punct, other = m.groups()
        start = m.start(m.lastindex)
        if ident is not None:
            tokens.append(_Token("ident", ident, start))
        elif number is not None:
            tokens.append(_Token("int", number, start))
        elif punct is not None:
            tokens.append(_Token("punct", punct, start))
        else:
            raise DSLSyntaxError(f"unexpected character {other!r}",
                                 **_position(text, start))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _position(text: str, offset: int) -> dict[str, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return {"line": line, "column": column}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message: str, tok: _Token | None = None, cls=DSLSyntaxError):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise cls(f"{message}, found {found}", **_position(self.text, tok.offset))

    def expect(self, punct: str) -> None:
        if self.tok.kind != "punct" or self.tok.text != punct:
            self.fail(f"expected {punct!r}")
        self.i += 1

    def word(self, what: str, allowed: frozenset[str]) -> str:
        tok = self.tok
        if tok.kind != "ident":
            self.fail(f"expected {what}")
        if tok.text not in allowed:
            raise VocabularyError(f"unknown {what} {tok.text!r}",
                                  **_position(self.text, tok.offset))
        self.i += 1
        return tok.text

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "int":
            self.fail("expected a count")
        value = int(tok.text)
        if value > vocab.MAX_COUNT:
            self.fail(f"count exceeds {vocab.MAX_COUNT}")
        self.i += 1
        return value

    def prompt(self) -> ConstraintSet:
        clauses: list[Constraint] = []
        while True:
            start = self.tok
            c = self.clause(depth=0)
            if c in clauses:
                self.fail(f"duplicate constraint {c.render()}", start)
            clauses.append(c)
            if self.tok.kind == "punct" and self.tok.text == ";":
                self.i += 1
                continue
            if self.tok.kind != "eof":
                self.fail("expected ';' or end of input")
            return ConstraintSet(tuple(clauses))

    def clause(self, depth: int) -> Constraint:
        tok = self.tok
        if tok.kind != "ident":
            self.fail("expected a clause")
        name = tok.text
        self.i += 1
        self.expect("(")
        if name == "count":
            noun = self.word("noun", vocab.NOUN_SET)
            self.expect(",")
            c: Constraint = Count(noun, self.integer())
        elif name == "color":
            noun = self.word("noun", vocab.NOUN_SET)
            self.expect(",")
            c = Color(noun, self.word("color", vocab.COLOR_SET))
        elif name == "rel":
            subject = self.word("noun", vocab.NOUN_SET)
            self.expect(",")
            relation = self.word("relation", vocab.RELATION_SET)
            self.expect(",")
            c = Rel(subject, relation, self.word("noun", vocab.NOUN_SET))
        elif name == "style":
            adjective = self.word("style", vocab.STYLE_SET)
            self.expect(",")
            c = Style(adjective, self.word("noun", vocab.NOUN_SET))
        elif name == "not":
            if depth > 0:
                self.fail("not() nests at most one level", tok)
            c = Not(self.clause(depth + 1))
        else:
            self.fail("unknown clause", tok)
        self.expect(")")
        return c


def parse_prompt_dsl(text: str) -> ConstraintSet:
    """Parse prompt text into a :class:`ConstraintSet`.

    Raises DSLSyntaxError or VocabularyError with a line/column position.
    """
    return _Parser(text).prompt()


def try_parse_prompt_dsl(text: str) -> ConstraintSet | None:
    try:
        return parse_prompt_dsl(text)
    except (DSLSyntaxError, VocabularyError):
        return None


def read_prompt_file(path: str | Path) -> list[ConstraintSet]:
    """One prompt per line; blank lines and '#' comments are skipped."""
    prompts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            prompts.append(parse_prompt_dsl(body))
        except (DSLSyntaxError, VocabularyError) as exc:
            raise type(exc)(f"{path}: {exc.args[0]}", line=lineno, column=exc.column) from None
    return prompts

"""Random coherent prompts for suites and Monte-Carlo tests.

A set is coherent when its constraints can all hold at once and touch
disjoint slices of scene state: per noun at most one count-kind, one
color-kind and one style-kind constraint, and per ordered noun pair at
most one relation-kind constraint.
"""

from __future__ import annotations

import random

from . import vocab
from .dsl import Color, Constraint, ConstraintSet, Count, Not, Rel, Style

KINDS = ("count", "color", "style", "rel")


def _one(kind: str, rng: random.Random, nouns: list[str], max_count: int) -> tuple:
    if kind == "rel":
        s, o = rng.sample(nouns, 2)
        return ("rel", s, o), Rel(s, rng.choice(vocab.RELATIONS), o)
    noun = rng.choice(nouns)
    if kind == "count":
        return ("count", noun), Count(noun, rng.randint(1, max_count))
    if kind == "color":
        return ("color", noun), Color(noun, rng.choice(vocab.COLORS))
    return ("style", noun), Style(rng.choice(vocab.STYLES), noun)


def random_constraints(rng: random.Random, size: int = 4, *, p_not: float = 0.0,
                       max_count: int = 4, noun_pool: int = 4) -> ConstraintSet:
    """A coherent set of ``size`` constraints over ``noun_pool`` random nouns.

    ``p_not`` is the chance each constraint is wrapped in ``not(...)``.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    nouns = rng.sample(vocab.NOUNS, max(2, noun_pool))
    capacity = len(nouns) * 3 + len(nouns) * (len(nouns) - 1)
    if size > capacity:
        raise ValueError(f"cannot fit {size} coherent constraints over {len(nouns)} nouns")
    slots: set[tuple] = set()
    out: list[Constraint] = []
    while len(out) < size:
        slot, c = _one(rng.choice(KINDS), rng, nouns, max_count)
        if slot in slots:
            continue
        slots.add(slot)
        if rng.random() < p_not:
            c = Not(c)
        out.append(c)
    return ConstraintSet(tuple(out))

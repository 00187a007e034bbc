"""Generator, judge, diagnoser and editor of the simulator world.

Constraint semantics (exact):

=====================  ==================================================
``count(n,k)``         exactly k entities of noun n
``color(n,c)``         every entity of noun n has color c (vacuous if none)
``style(a,n)``         every entity of noun n has style a (vacuous if none)
``rel(s,r,o)``         some edge (x, r, y) with noun(x)=s and noun(y)=o
``not(c)``             c is violated
=====================  ==================================================

Violation perturbations, used by the generator and by regeneration:

=====================  ==================================================
``count``              SET_COUNT to k +/- 1 or 2, never below what other
                       constraints on the noun need
``color``              SET_COLOR to a random other color
``style``              SET_STYLE none (the style is dropped)
``rel``                SET_REL with the opposite relation
``not(c)``             the fix of c
=====================  ==================================================

Every fix and perturbation touches one slice of state only (the entity set
of a noun, the colors of a noun, the styles of a noun, or the edges of one
ordered noun pair), so constraints in a coherent set are realized
independently and one script fixes all of them at once.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import EditScriptError, UnparseableEditInstruction
from ..protocol import format_response
from . import vocab
from .dsl import Color, Constraint, ConstraintSet, Count, Not, Rel, Style, try_parse_prompt_dsl
from .edits import (Add, EditOp, EditScript, Remove, SetColor, SetCount, SetRel, SetStyle,
                    salvage)
from .scene import Draft, SceneGraph


@dataclass(frozen=True)
class NoiseConfig:
    p_violate: float = 0.5
    p_edit_fail: float = 0.0
    p_collateral: float = 0.0

    def __post_init__(self):
        for name in ("p_violate", "p_edit_fail", "p_collateral"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class Violation:
    constraint: Constraint
    witness: str


# -- judging -----------------------------------------------------------------

class _Index:
    """Per-noun lookups over a scene, built once per check."""

    def __init__(self, ents: dict[int, list], rels):
        self.by_noun: dict[str, list[list]] = {}
        for attrs in ents.values():
            self.by_noun.setdefault(attrs[0], []).append(attrs)
        self.edges = {(ents[s][0], r, ents[o][0]) for s, r, o in rels}

    @classmethod
    def of(cls, scene: SceneGraph | Draft) -> "_Index":
        if isinstance(scene, Draft):
            return cls(scene.ents, scene.rels)
        ents = {e.id: [e.noun, e.color, e.style] for e in scene.entities}
        rels = [(r.subject, r.relation, r.object) for r in scene.relations]
        return cls(ents, rels)


def _holds(c: Constraint, idx: _Index) -> tuple[bool, str]:
    if isinstance(c, Not):
        ok, why = _holds(c.inner, idx)
        return (not ok, f"not: {why}")
    if isinstance(c, Count):
        found = len(idx.by_noun.get(c.noun, ()))
        return found == c.n, f"{found} {c.noun} present, {c.n} required"
    if isinstance(c, Color):
        wrong = sorted({a[1] or "uncolored" for a in idx.by_noun.get(c.noun, ()) if a[1] != c.color})
        return not wrong, f"{c.noun} colored {', '.join(wrong) or c.color}"
    if isinstance(c, Style):
        wrong = sorted({a[2] or "plain" for a in idx.by_noun.get(c.noun, ()) if a[2] != c.adjective})
        return not wrong, f"{c.noun} styled {', '.join(wrong) or c.adjective}"
    if isinstance(c, Rel):
        present = sorted(r for s, r, o in idx.edges if s == c.subject and o == c.object)
        ok = c.relation in present
        return ok, f"{c.subject}->{c.object} relations: {', '.join(present) or 'none'}"
    raise TypeError(f"not a constraint: {c!r}")


def check_constraints(scene: SceneGraph | Draft, constraints: ConstraintSet) -> tuple[Violation, ...]:
    """Violated constraints, in constraint order, each with a witness."""
    idx = _Index.of(scene)
    out = []
    for c in constraints:
        ok, why = _holds(c, idx)
        if not ok:
            out.append(Violation(c, why))
    return tuple(out)


def score(scene: SceneGraph, constraints: ConstraintSet) -> float:
    """Fraction of satisfied constraints; an empty set scores 1.0."""
    if not constraints:
        return 1.0
    return (len(constraints) - len(check_constraints(scene, constraints))) / len(constraints)


# -- fixes and perturbations --------------------------------------------------

def _min_needed(noun: str, constraints: ConstraintSet) -> int:
    """Entities of ``noun`` that non-count constraints rely on."""
    for c in constraints:
        inner = c.inner if isinstance(c, Not) else c
        if not isinstance(inner, Count) and noun in inner.nouns:
            return 1
    return 0


def fix_op(c: Constraint, scene: Draft, constraints: ConstraintSet) -> EditOp:
    """The single operation that repairs violated constraint ``c``."""
    if isinstance(c, Count):
        present = len(scene.ids_of(c.noun))
        if present == c.n - 1 and present >= 1:
            color = next((k.color for k in constraints
                          if isinstance(k, Color) and k.noun == c.noun), None)
            return Add(c.noun, color)
        if present == c.n + 1:
            return Remove(c.noun)
        return SetCount(c.noun, c.n)
    if isinstance(c, Color):
        return SetColor(c.noun, c.color)
    if isinstance(c, Style):
        return SetStyle(c.noun, c.adjective)
    if isinstance(c, Rel):
        return SetRel(c.subject, c.relation, c.object)
    inner = c.inner
    if isinstance(inner, Count):
        return Add(inner.noun)
    if isinstance(inner, Color):
        return SetColor(inner.noun, vocab.alternate_color(inner.color))
    if isinstance(inner, Style):
        return SetStyle(inner.noun, None)
    return SetRel(inner.subject, vocab.OPPOSITE[inner.relation], inner.object)


def break_op(c: Constraint, scene: Draft, constraints: ConstraintSet,
             rng: random.Random) -> EditOp:
    """A minimal perturbation that violates satisfied constraint ``c``."""
    if isinstance(c, Count):
        floor = _min_needed(c.noun, constraints)
        options = [c.n + d for d in (-2, -1, 1, 2) if floor <= c.n + d <= vocab.MAX_COUNT]
        return SetCount(c.noun, rng.choice(options))
    if isinstance(c, Color):
        return SetColor(c.noun, rng.choice([k for k in vocab.COLORS if k != c.color]))
    if isinstance(c, Style):
        return SetStyle(c.noun, None)
    if isinstance(c, Rel):
        return SetRel(c.subject, vocab.OPPOSITE[c.relation], c.object)
    inner = c.inner
    if isinstance(inner, Count):
        return SetCount(inner.noun, inner.n)
    if isinstance(inner, Color):
        return SetColor(inner.noun, inner.color)
    if isinstance(inner, Style):
        return SetStyle(inner.noun, inner.adjective)
    return SetRel(inner.subject, inner.relation, inner.object)


def apply_op(scene: Draft, op: EditOp) -> None:
    """Apply one operation faithfully, in place."""
    if isinstance(op, Add):
        scene.add_like(op.noun, op.color)
    elif isinstance(op, Remove):
        if op.entity_id is not None:
            if scene.ents.get(op.entity_id, [None])[0] == op.noun:
                scene.remove(op.entity_id)
        else:
            victim = scene.removal_victim(op.noun)
            if victim is not None:
                scene.remove(victim)
    elif isinstance(op, SetCount):
        while len(scene.ids_of(op.noun)) < op.n:
            scene.add_like(op.noun)
        while len(scene.ids_of(op.noun)) > op.n:
            scene.remove(scene.removal_victim(op.noun))
    elif isinstance(op, SetColor):
        for i in scene.ids_of(op.noun):
            scene.ents[i][1] = op.color
    elif isinstance(op, SetStyle):
        for i in scene.ids_of(op.noun):
            scene.ents[i][2] = op.style
    elif isinstance(op, SetRel):
        subjects = scene.ids_of(op.subject) or [scene.add(op.subject)]
        if op.subject == op.object:
            if len(subjects) < 2:
                subjects.append(scene.add_like(op.subject))
            objects = subjects[1:]
        else:
            objects = scene.ids_of(op.object) or [scene.add(op.object)]
        s_set, o_set = set(subjects), set(objects)
        scene.rels = {r for r in scene.rels if not (r[0] in s_set and r[2] in o_set)}
        scene.rels.add((subjects[0], op.relation, objects[0]))
    else:
        raise TypeError(f"not an edit operation: {op!r}")


def _collateral(scene: Draft, rng: random.Random, spared: tuple[str, ...]) -> None:
    """One random mutation of an element unrelated to ``spared`` nouns."""
    free = sorted(i for i, a in scene.ents.items() if a[0] not in spared)
    edges = sorted(r for r in scene.rels
                   if scene.ents[r[0]][0] not in spared and scene.ents[r[2]][0] not in spared)
    kinds = []
    if free:
        kinds += ["recolor", "restyle", "drop", "duplicate"]
    if edges:
        kinds.append("flip")
    if not kinds:
        return
    kind = rng.choice(kinds)
    if kind == "flip":
        s, r, o = rng.choice(edges)
        scene.rels.discard((s, r, o))
        scene.rels.add((s, vocab.OPPOSITE[r], o))
        return
    eid = rng.choice(free)
    noun, color, style = scene.ents[eid]
    if kind == "recolor":
        scene.ents[eid][1] = rng.choice([c for c in vocab.COLORS if c != color])
    elif kind == "restyle":
        scene.ents[eid][2] = rng.choice(vocab.STYLES) if style is None else None
    elif kind == "drop":
        scene.remove(eid)
    else:
        scene.add(noun, color, style)


# -- generation ---------------------------------------------------------------

def sample_scene(constraints: ConstraintSet, noise: NoiseConfig, seed: int) -> SceneGraph:
    """Imperfect text-to-image generation.

    Each constraint is independently violated with probability
    ``noise.p_violate``; the result depends only on the arguments.
    """
    if not constraints:
        raise ValueError("cannot generate from an empty constraint set")
    rng = random.Random(seed)
    violate = [rng.random() < noise.p_violate for _ in constraints]
    draft = Draft()
    for noun in constraints.nouns():
        count = max(1, _min_needed(noun, constraints))
        for c in constraints:
            if isinstance(c, Count) and c.noun == noun:
                count = c.n
            elif isinstance(c, Not) and isinstance(c.inner, Count) and c.inner.noun == noun:
                count = 1 if c.inner.n != 1 else 2
        color = rng.choice(vocab.COLORS)
        for _ in range(count):
            draft.add(noun, color)
    for c in constraints:
        if isinstance(c, (Color, Style, Rel)):
            apply_op(draft, fix_op(c, draft, constraints))
        elif isinstance(c, Not) and isinstance(c.inner, Color):
            if not _holds(c, _Index.of(draft))[0]:
                apply_op(draft, fix_op(c, draft, constraints))
    for c, bad in zip(constraints, violate):
        if bad:
            apply_op(draft, break_op(c, draft, constraints, rng))
    return draft.freeze()


# -- understanding ------------------------------------------------------------

def diagnose(scene: SceneGraph, constraints: ConstraintSet) -> tuple[str, EditScript | None]:
    """Verdict text plus a minimal script fixing every violation.

    One operation per violated constraint, in constraint order.
    """
    violations = check_constraints(scene, constraints)
    if not violations:
        return format_response(True), None
    draft = Draft(scene)
    script = EditScript(tuple(fix_op(v.constraint, draft, constraints) for v in violations))
    return format_response(False, script.render()), script


# -- editing ------------------------------------------------------------------

def apply_edits(scene: SceneGraph, script: EditScript | str, noise: NoiseConfig,
                seed: int) -> SceneGraph:
    """Edit ``scene`` with a script or with a free-text instruction.

    Each operation succeeds with probability ``1 - p_edit_fail`` and, with
    probability ``p_collateral``, also mutates one element unrelated to it.
    Free text is parsed as a canonical script, then salvaged for its first
    recognizable operation; failing both, text that parses as a prompt
    triggers regeneration of every element that prompt names.
    """
    if isinstance(script, str):
        text = script
        try:
            script = EditScript.parse(text)
        except EditScriptError:
            script = salvage(text)
        if script is None:
            constraints = try_parse_prompt_dsl(text)
            if constraints is None or not constraints:
                raise UnparseableEditInstruction(f"cannot interpret instruction: {text!r}")
            return regenerate(scene, constraints, noise, seed)
    rng = random.Random(seed)
    draft = Draft(scene)
    damaged: list[tuple[str, ...]] = []
    for op in script:
        fails = rng.random() < noise.p_edit_fail
        if rng.random() < noise.p_collateral:
            damaged.append(op.nouns)
        if not fails:
            apply_op(draft, op)
    # side effects land after the edit itself, so later ops cannot undo them
    for spared in damaged:
        _collateral(draft, rng, spared)
    return draft.freeze()


def regenerate(scene: SceneGraph, constraints: ConstraintSet, noise: NoiseConfig,
               seed: int) -> SceneGraph:
    """Re-draw every element named by ``constraints`` with a fresh seed.

    The editor is not told which elements are wrong, so each constraint is
    re-realized as the generator would: satisfied with probability
    ``1 - p_violate``. Each re-drawn element counts as one operation for
    the failure and collateral-damage draws.
    """
    rng = random.Random(seed)
    draft = Draft(scene)
    damaged: list[tuple[str, ...]] = []
    for c in constraints:
        fails = rng.random() < noise.p_edit_fail
        if rng.random() < noise.p_collateral:
            damaged.append(c.nouns)
        violate = rng.random() < noise.p_violate
        if not fails:
            ok = _holds(c, _Index.of(draft))[0]
            if violate and ok:
                apply_op(draft, break_op(c, draft, constraints, rng))
            elif not violate and not ok:
                apply_op(draft, fix_op(c, draft, constraints))
    for spared in damaged:
        _collateral(draft, rng, spared)
    return draft.freeze()

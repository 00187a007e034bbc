"""Scene graphs: the simulator's stand-in for an image."""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import vocab


@dataclass(frozen=True, order=True)
class Entity:
    id: int
    noun: str
    color: str | None = None
    style: str | None = None


@dataclass(frozen=True, order=True)
class Relation:
    subject: int
    relation: str
    object: int


@dataclass(frozen=True)
class SceneGraph:
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()

    def __post_init__(self):
        ents = tuple(sorted(self.entities))
        rels = tuple(sorted(set(self.relations)))
        ids = [e.id for e in ents]
        if len(ids) != len(set(ids)):
            raise ValueError("entity ids must be unique")
        known = set(ids)
        for r in rels:
            if r.subject not in known or r.object not in known:
                raise ValueError(f"relation endpoint missing: {r}")
            if r.relation not in vocab.RELATION_SET:
                raise ValueError(f"unknown relation {r.relation!r}")
        object.__setattr__(self, "entities", ents)
        object.__setattr__(self, "relations", rels)

    def of_noun(self, noun: str) -> list[Entity]:
        return [e for e in self.entities if e.noun == noun]

    def to_dict(self) -> dict:
        entities = []
        for e in self.entities:
            attrs = {}
            if e.color is not None:
                attrs["color"] = e.color
            if e.style is not None:
                attrs["style"] = e.style
            entities.append({"attributes": attrs, "id": e.id, "noun": e.noun})
        return {
            "entities": entities,
            "relations": [[r.subject, r.relation, r.object] for r in self.relations],
        }

    def serialize(self) -> bytes:
        """Canonical bytes: equal scenes always serialize identically."""
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "SceneGraph":
        entities = tuple(
            Entity(int(e["id"]), e["noun"], e.get("attributes", {}).get("color"),
                   e.get("attributes", {}).get("style"))
            for e in data.get("entities", [])
        )
        relations = tuple(Relation(int(s), r, int(o)) for s, r, o in data.get("relations", []))
        return cls(entities, relations)

    @classmethod
    def deserialize(cls, payload: bytes) -> "SceneGraph":
        return cls.from_dict(json.loads(payload.decode("utf-8")))


class Draft:
    """Mutable working copy of a scene used while applying edits."""

    def __init__(self, scene: SceneGraph | None = None):
        self.ents: dict[int, list] = {}
        self.rels: set[tuple[int, str, int]] = set()
        if scene is not None:
            for e in scene.entities:
                self.ents[e.id] = [e.noun, e.color, e.style]
            self.rels = {(r.subject, r.relation, r.object) for r in scene.relations}
        self.next_id = max(self.ents, default=0) + 1

    def ids_of(self, noun: str) -> list[int]:
        return sorted(i for i, (n, _, _) in self.ents.items() if n == noun)

    def add(self, noun: str, color: str | None = None, style: str | None = None) -> int:
        eid = self.next_id
        self.next_id += 1
        self.ents[eid] = [noun, color, style]
        return eid

    def add_like(self, noun: str, color: str | None = None) -> int:
        """Add an entity copying the attributes of its first sibling."""
        siblings = self.ids_of(noun)
        if siblings:
            _, sib_color, sib_style = self.ents[siblings[0]]
            return self.add(noun, color if color is not None else sib_color, sib_style)
        return self.add(noun, color)

    def remove(self, eid: int) -> None:
        del self.ents[eid]
        self.rels = {r for r in self.rels if r[0] != eid and r[2] != eid}

    def referenced(self) -> set[int]:
        return {r[0] for r in self.rels} | {r[2] for r in self.rels}

    def removal_victim(self, noun: str) -> int | None:
        """Highest-id entity of ``noun``, preferring ones outside any relation."""
        ids = self.ids_of(noun)
        if not ids:
            return None
        refs = self.referenced()
        free = [i for i in ids if i not in refs]
        return max(free) if free else max(ids)

    def freeze(self) -> SceneGraph:
        return SceneGraph(
            tuple(Entity(i, n, c, s) for i, (n, c, s) in self.ents.items()),
            tuple(Relation(*r) for r in self.rels),
        )

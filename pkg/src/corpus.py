"""
Unified in-memory corpus model shared by parsers, alignment, dataset building and evaluation.
All types are frozen; build new instances with dataclasses.replace instead of mutating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator


class Perspective(str, Enum):
    SCI = "SCI"
    SEM = "SEM"

    @property
    def other(self) -> "Perspective":
        return Perspective.SEM if self is Perspective.SCI else Perspective.SCI


class Source(str, Enum):
    SEMEVAL = "SEMEVAL"
    SCIERC = "SCIERC"
    SCIREX = "SCIREX"


class Agreement(str, Enum):
    HIGH = "HIGH"
    MEDIUM = "MEDIUM"
    LOW = "LOW"


class Head(str, Enum):
    HEAD_1 = "HEAD_1"  # SciERC perspective
    HEAD_2 = "HEAD_2"  # SemEval perspective

    @property
    def perspective(self) -> Perspective:
        return Perspective.SCI if self is Head.HEAD_1 else Perspective.SEM

    @classmethod
    def for_perspective(cls, perspective: Perspective) -> "Head":
        return cls.HEAD_1 if perspective is Perspective.SCI else cls.HEAD_2


class Direction(str, Enum):
    SEM_TO_SCI = "SEM_TO_SCI"
    SCI_TO_SEM = "SCI_TO_SEM"

    def reverse(self) -> "Direction":
        return Direction.SCI_TO_SEM if self is Direction.SEM_TO_SCI else Direction.SEM_TO_SCI


UNTYPED_ENTITY = "ENTITY"
SEM_TRANSFER_TYPE = "OtherScientificTerm_2"

SCIERC_ENTITY_TYPES = ("Method", "Metric", "Task", "Material", "Generic", "OtherScientificTerm")
SCIERC_RELATION_TYPES = (
    "Used-for", "Evaluate-for", "Feature-of", "Part-of", "Compare", "Hyponym-of", "Conjunction",
)
SEMEVAL_RELATION_TYPES = ("Usage", "Result", "Model", "Part-whole", "Topic", "Comparison")
SCIREX_ENTITY_TYPES = ("Method", "Task", "Metric", "Material")

# (SemEval, SciERC) pairs; the SciERC order is the soft-label class order.
COMMON_RELATION_PAIRS = (
    ("Usage", "Used-for"),
    ("Comparison", "Compare"),
    ("Model", "Feature-of"),
    ("Part-whole", "Part-of"),
    ("Result", "Evaluate-for"),
)
COMMON_SCI_RELATIONS = tuple(sci for _, sci in COMMON_RELATION_PAIRS)
COMMON_SEM_RELATIONS = tuple(sem for sem, _ in COMMON_RELATION_PAIRS)

_SEM_TO_SCI = dict(COMMON_RELATION_PAIRS)
_SCI_TO_SEM = {sci: sem for sem, sci in COMMON_RELATION_PAIRS}


def map_relation_label(label: str, direction: Direction) -> str | None:
    """Translate one of the five common relation labels across perspectives; None when unmapped."""
    table = _SEM_TO_SCI if direction is Direction.SEM_TO_SCI else _SCI_TO_SEM
    return table.get(label)


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True, order=True)
class Span:
    """Token span, half-open [start, end)."""

    start: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.start

    def overlap(self, other: "Span") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))


@dataclass(frozen=True)
class EntityMention:
    id: str
    span: Span
    entity_type: str
    perspective: Perspective


@dataclass(frozen=True)
class RelationMention:
    head: str
    tail: str
    relation_type: str
    perspective: Perspective


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    entities: tuple[EntityMention, ...] = ()
    relations: tuple[RelationMention, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def char_range(self) -> tuple[int, int] | None:
        if not self.tokens:
            return None
        return self.tokens[0].char_start, self.tokens[-1].char_end

    def entity(self, entity_id: str) -> EntityMention | None:
        for entity in self.entities:
            if entity.id == entity_id:
                return entity
        return None


@dataclass(frozen=True)
class Document:
    doc_id: str
    source: Source
    raw_text: str
    sentences: tuple[Sentence, ...]

    def entity_count(self) -> int:
        return sum(len(s.entities) for s in self.sentences)

    def relation_count(self) -> int:
        return sum(len(s.relations) for s in self.sentences)

    def iter_entities(self) -> Iterator[tuple[int, EntityMention]]:
        for i, sentence in enumerate(self.sentences):
            for entity in sentence.entities:
                yield i, entity


@dataclass(frozen=True)
class LabelSchema:
    entity_types: tuple[str, ...]
    relation_types: tuple[str, ...]
    relation_mapping: tuple[tuple[str, str], ...] = field(default=COMMON_RELATION_PAIRS)

    def __post_init__(self):
        if set(self.relation_mapping) != set(COMMON_RELATION_PAIRS):
            raise ValueError("relation_mapping must be exactly the five common relation pairs")
        sems = [a for a, _ in self.relation_mapping]
        scis = [b for _, b in self.relation_mapping]
        if len(set(sems)) != len(sems) or len(set(scis)) != len(scis):
            raise ValueError("relation_mapping is not a bijection")

    @property
    def typed(self) -> bool:
        return self.entity_types != (UNTYPED_ENTITY,)

    def entity_index(self, entity_type: str) -> int:
        """Class index for the entity classifier; 0 is reserved for NONE."""
        return self.entity_types.index(entity_type) + 1

    def relation_index(self, relation_type: str) -> int:
        return self.relation_types.index(relation_type)


# Types each perspective may legitimately carry after parsing or type transfer.
PERSPECTIVE_SCHEMAS: dict[Perspective, LabelSchema] = {
    Perspective.SCI: LabelSchema(
        entity_types=SCIERC_ENTITY_TYPES + (UNTYPED_ENTITY,),
        relation_types=SCIERC_RELATION_TYPES,
    ),
    Perspective.SEM: LabelSchema(
        entity_types=(UNTYPED_ENTITY, SEM_TRANSFER_TYPE) + SCIERC_ENTITY_TYPES,
        relation_types=SEMEVAL_RELATION_TYPES,
    ),
}


def validate_document(
    doc: Document, schemas: dict[Perspective, LabelSchema] | None = None
) -> list[str]:
    """Return one description per violated invariant; an empty list means the document is well formed."""
    schemas = schemas or PERSPECTIVE_SCHEMAS
    violations: list[str] = []
    seen_ids: set[str] = set()
    entity_sentence: dict[str, int] = {}
    for i, sentence in enumerate(doc.sentences):
        for entity in sentence.entities:
            entity_sentence.setdefault(entity.id, i)

    previous_end = 0
    for i, sentence in enumerate(doc.sentences):
        where = f"{doc.doc_id} sentence {i}"
        for k, token in enumerate(sentence.tokens):
            if token.index != k:
                violations.append(f"{where}: token {k} carries index {token.index}")
            if not 0 <= token.char_start < token.char_end:
                violations.append(f"{where}: token {k} has empty or negative range")
            if token.char_start < previous_end:
                violations.append(f"{where}: token {k} overlaps the preceding text")
            if token.char_end > len(doc.raw_text):
                violations.append(f"{where}: token {k} lies outside raw_text")
            previous_end = max(previous_end, token.char_end)

        n = len(sentence)
        for entity in sentence.entities:
            if entity.id in seen_ids:
                violations.append(f"{where}: duplicate entity id {entity.id}")
            seen_ids.add(entity.id)
            span = entity.span
            if not 0 <= span.start < span.end <= n:
                violations.append(
                    f"{where}: entity {entity.id} span [{span.start},{span.end}) out of bounds for length {n}"
                )
            schema = schemas[entity.perspective]
            if entity.entity_type not in schema.entity_types:
                violations.append(
                    f"{where}: entity {entity.id} type {entity.entity_type!r} not in {entity.perspective.value} schema"
                )

        local = {e.id for e in sentence.entities}
        for relation in sentence.relations:
            name = f"relation {relation.head}->{relation.tail} ({relation.relation_type})"
            if relation.head == relation.tail:
                violations.append(f"{where}: {name} has identical endpoints")
            missing = [e for e in (relation.head, relation.tail) if e not in local]
            if missing:
                if all(e in entity_sentence for e in missing):
                    violations.append(f"{where}: {name} crosses a sentence boundary")
                else:
                    violations.append(f"{where}: {name} references unknown entity {missing[0]}")
            schema = schemas[relation.perspective]
            if relation.relation_type not in schema.relation_types:
                violations.append(
                    f"{where}: {name} type not in {relation.perspective.value} schema"
                )
    return violations

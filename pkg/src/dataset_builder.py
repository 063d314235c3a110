"""
Training-set construction from aligned corpora: independent, concatenated, mixed and multi-task
variants, the standard SciERC split, data-quantity caps and the built-set manifest.

Abstracts are exploded into sentence-level examples here; the extractor never sees documents.
"""
from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field

from src.alignment import AlignedDocument, align_corpora, entity_agreement, transfer_entity_types, verdict_for
from src.corpus import (
    COMMON_SCI_RELATIONS,
    COMMON_SEM_RELATIONS,
    SCIERC_ENTITY_TYPES,
    SCIERC_RELATION_TYPES,
    SEM_TRANSFER_TYPE,
    SEMEVAL_RELATION_TYPES,
    UNTYPED_ENTITY,
    Agreement,
    Direction,
    Document,
    EntityMention,
    Head,
    LabelSchema,
    Perspective,
    RelationMention,
    Sentence,
    Source,
    Span,
    Token,
    map_relation_label,
)
from src.errors import ConfigError, MissingDataError
from src.format_io import EntityRecord, RelationRecord, SoftLabelRecord, TokenRecord, dump_record
from src.softlabel import SoftLabel, make_soft_label

logger = logging.getLogger(__name__)

EXPECTED_OVERLAP_SENTENCES = 1400
EXPECTED_OVERLAP_DOCUMENTS = 307


class Strategy(str, Enum):
    INDEPENDENT_SEM = "INDEPENDENT_SEM"
    INDEPENDENT_SCI = "INDEPENDENT_SCI"
    CONCAT = "CONCAT"
    CONCAT_PLUS_SCI = "CONCAT_PLUS_SCI"
    CONCAT_PLUS_SEM = "CONCAT_PLUS_SEM"
    MIXED = "MIXED"
    MIXED_SCI = "MIXED_SCI"
    MIXED_SEM = "MIXED_SEM"
    MTL = "MTL"
    MTL_SOFT = "MTL_SOFT"
    SCIERC_STANDARD = "SCIERC_STANDARD"


class ConflictPolicy(str, Enum):
    KEEP_BOTH = "KEEP_BOTH"
    KEEP_SCI = "KEEP_SCI"
    KEEP_SEM = "KEEP_SEM"


class LabelSpace(str, Enum):
    # five common relations, entity types erased on both heads
    COMMON_UNTYPED = "COMMON_UNTYPED"
    # all SciERC labels on HEAD_1; all SemEval relations and transferred entity types on HEAD_2
    FULL_TYPED = "FULL_TYPED"


class HeldOutSet(str, Enum):
    SEM = "SEM"
    SCI = "SCI"


_SINGLE_HEAD_SPACE = {Strategy.CONCAT, Strategy.CONCAT_PLUS_SCI, Strategy.CONCAT_PLUS_SEM,
                      Strategy.MIXED, Strategy.MIXED_SCI, Strategy.MIXED_SEM}

_DEFAULT_POLICY = {
    Strategy.MIXED: ConflictPolicy.KEEP_BOTH,
    Strategy.MIXED_SCI: ConflictPolicy.KEEP_SCI,
    Strategy.MIXED_SEM: ConflictPolicy.KEEP_SEM,
}


def head_schemas(label_space: LabelSpace) -> dict[Head, LabelSchema]:
    if LabelSpace(label_space) is LabelSpace.COMMON_UNTYPED:
        return {
            Head.HEAD_1: LabelSchema((UNTYPED_ENTITY,), COMMON_SCI_RELATIONS),
            Head.HEAD_2: LabelSchema((UNTYPED_ENTITY,), COMMON_SEM_RELATIONS),
        }
    return {
        Head.HEAD_1: LabelSchema(SCIERC_ENTITY_TYPES, SCIERC_RELATION_TYPES),
        Head.HEAD_2: LabelSchema(SCIERC_ENTITY_TYPES + (SEM_TRANSFER_TYPE,), SEMEVAL_RELATION_TYPES),
    }


class SplitSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    strategy: Strategy
    label_space: LabelSpace = LabelSpace.COMMON_UNTYPED
    conflict_policy: ConflictPolicy | None = Field(default=None, description="MIXED* only; defaults per strategy")
    soft_labels: bool = Field(default=False, description="Attach agreement soft labels (implied by MTL_SOFT)")
    soft_entities: bool = Field(default=False, description="Extend soft labels to entity heads")
    data_cap: int | None = Field(default=None, ge=0, description="Keep this many sentence examples")
    seed: int = 0

    @property
    def policy(self) -> ConflictPolicy:
        return self.conflict_policy or _DEFAULT_POLICY.get(self.strategy, ConflictPolicy.KEEP_BOTH)

    @property
    def uses_soft_labels(self) -> bool:
        return self.strategy is Strategy.MTL_SOFT or self.soft_labels

    def forbidden_test_sets(self) -> set[HeldOutSet]:
        """Test sets whose abstracts were consumed as extra training data."""
        if self.strategy is Strategy.CONCAT_PLUS_SCI:
            return {HeldOutSet.SCI}
        if self.strategy is Strategy.CONCAT_PLUS_SEM:
            return {HeldOutSet.SEM}
        return set()


@dataclass(frozen=True)
class HeadAnnotation:
    entities: tuple[EntityMention, ...] = ()
    relations: tuple[RelationMention, ...] = ()


@dataclass(frozen=True)
class SoftTarget:
    head: Head
    kind: Literal["relation", "entity"]
    index: int
    label: SoftLabel


@dataclass(frozen=True)
class TrainingExample:
    doc_id: str
    sentence_index: int
    sentence: Sentence
    annotations: Mapping[Head, HeadAnnotation]
    soft_labels: tuple[SoftTarget, ...] = ()

    def __post_init__(self):
        if not self.annotations:
            raise ValueError(f"{self.key}: no head carries annotations")
        for target in self.soft_labels:
            annotation = self.annotations.get(target.head)
            items = () if annotation is None else (
                annotation.relations if target.kind == "relation" else annotation.entities
            )
            if not 0 <= target.index < len(items):
                raise ValueError(f"{self.key}: soft label points at missing {target.kind} {target.index}")

    @property
    def key(self) -> str:
        return f"{self.doc_id}#{self.sentence_index}"

    def soft_targets(self, head: Head, kind: str = "relation") -> list[SoftTarget]:
        return [t for t in self.soft_labels if t.head is head and t.kind == kind]


# --------------------------------------------------------------------------- projection helpers


def _tokens_only(sentence: Sentence) -> Sentence:
    return Sentence(tokens=sentence.tokens)


def _project(
    sentence: Sentence, schema: LabelSchema, to_space: Direction | None = None
) -> tuple[HeadAnnotation, list[RelationMention]]:
    """Restrict a sentence's annotations to one head's label space.

    Entities sharing a span collapse onto the first one; relations are relabeled (when `to_space` is
    set), filtered to the schema and deduplicated. Returns the originals of the kept relations in
    the same order so callers can look up their alignment verdicts.
    """
    canonical: dict[str, str] = {}
    by_span: dict[Span, str] = {}
    entities = []
    for entity in sentence.entities:
        entity_type = entity.entity_type if schema.typed else UNTYPED_ENTITY
        if entity_type not in schema.entity_types:
            continue
        if entity.span in by_span:
            canonical[entity.id] = by_span[entity.span]
            continue
        by_span[entity.span] = canonical[entity.id] = entity.id
        entities.append(replace(entity, entity_type=entity_type))

    relations, originals, seen = [], [], set()
    for relation in sentence.relations:
        label = map_relation_label(relation.relation_type, to_space) if to_space else relation.relation_type
        if label is None or label not in schema.relation_types:
            continue
        head, tail = canonical.get(relation.head), canonical.get(relation.tail)
        if head is None or tail is None or head == tail or (head, tail, label) in seen:
            continue
        seen.add((head, tail, label))
        relations.append(replace(relation, head=head, tail=tail, relation_type=label))
        originals.append(relation)
    entities.sort(key=lambda e: (e.span.start, e.span.end))
    return HeadAnnotation(tuple(entities), tuple(relations)), originals


def _relation_soft_targets(
    head: Head, annotation: HeadAnnotation, originals: list[RelationMention], schema: LabelSchema, agreement_of
) -> list[SoftTarget]:
    k = len(schema.relation_types)
    return [
        SoftTarget(head, "relation", i, make_soft_label(schema.relation_index(r.relation_type), agreement_of(o), k))
        for i, (r, o) in enumerate(zip(annotation.relations, originals))
    ]


def _entity_soft_targets(head: Head, annotation: HeadAnnotation, schema: LabelSchema, agreement_of) -> list[SoftTarget]:
    k = len(schema.entity_types) + 1
    return [
        SoftTarget(head, "entity", i, make_soft_label(schema.entity_index(e.entity_type), agreement_of(e), k))
        for i, e in enumerate(annotation.entities)
    ]


def _require_verdicts(aligned: list[AlignedDocument]) -> None:
    for pair in aligned:
        relations = pair.sci_doc.relation_count() + pair.sem_doc.relation_count()
        if relations and not pair.relation_verdicts:
            raise ValueError(f"{pair.sci_doc.doc_id}: agreements have not been assigned")


def _perspective_of(doc: Document) -> Perspective:
    return Perspective.SEM if doc.source is Source.SEMEVAL else Perspective.SCI


# --------------------------------------------------------------------------- per-strategy builders


def _single_head_examples(doc: Document, head: Head, schema: LabelSchema, to_space: Direction | None = None):
    for si, sentence in enumerate(doc.sentences):
        annotation, _ = _project(sentence, schema, to_space)
        yield TrainingExample(doc.doc_id, si, _tokens_only(sentence), {head: annotation})


def _sem_view(pair: AlignedDocument, label_space: LabelSpace) -> Document:
    return transfer_entity_types(pair) if label_space is LabelSpace.FULL_TYPED else pair.sem_doc


def _mtl_examples(pair: AlignedDocument, spec: SplitSpec, schemas: dict[Head, LabelSchema]):
    sem_doc = _sem_view(pair, spec.label_space)
    for si, sci_s in enumerate(pair.sci_doc.sentences):
        sci_ann, sci_orig = _project(sci_s, schemas[Head.HEAD_1])
        sem_ann, sem_orig = _project(sem_doc.sentences[si], schemas[Head.HEAD_2])
        soft: list[SoftTarget] = []
        if spec.uses_soft_labels:
            def relation_agreement(r: RelationMention, si=si) -> Agreement:
                verdict = verdict_for(pair, si, r)
                return verdict.agreement if verdict else Agreement.MEDIUM

            soft += _relation_soft_targets(Head.HEAD_1, sci_ann, sci_orig, schemas[Head.HEAD_1], relation_agreement)
            soft += _relation_soft_targets(Head.HEAD_2, sem_ann, sem_orig, schemas[Head.HEAD_2], relation_agreement)
            if spec.soft_entities:
                def agreement(e: EntityMention, si=si) -> Agreement:
                    return entity_agreement(pair, si, e)

                soft += _entity_soft_targets(Head.HEAD_1, sci_ann, schemas[Head.HEAD_1], agreement)
                soft += _entity_soft_targets(Head.HEAD_2, sem_ann, schemas[Head.HEAD_2], agreement)
        yield TrainingExample(
            pair.sci_doc.doc_id,
            si,
            _tokens_only(sci_s),
            {Head.HEAD_1: sci_ann, Head.HEAD_2: sem_ann},
            tuple(soft),
        )


def _medium_examples(doc: Document, spec: SplitSpec, schemas: dict[Head, LabelSchema]):
    """Single-perspective SciERC abstracts: HEAD_1 only, every label at MEDIUM agreement."""
    schema = schemas[Head.HEAD_1]
    for si, sentence in enumerate(doc.sentences):
        annotation, originals = _project(sentence, schema)
        soft: list[SoftTarget] = []
        if spec.uses_soft_labels:
            soft += _relation_soft_targets(Head.HEAD_1, annotation, originals, schema, lambda _: Agreement.MEDIUM)
            if spec.soft_entities:
                soft += _entity_soft_targets(Head.HEAD_1, annotation, schema, lambda _: Agreement.MEDIUM)
        yield TrainingExample(doc.doc_id, si, _tokens_only(sentence), {Head.HEAD_1: annotation}, tuple(soft))


def _mixed_example(pair: AlignedDocument, si: int, policy: ConflictPolicy, schema: LabelSchema) -> TrainingExample:
    sci_s, sem_s = pair.sci_doc.sentences[si], pair.sem_doc.sentences[si]
    ids: dict[Span, str] = {}
    entities = []
    span_of: dict[tuple[Perspective, str], Span] = {}
    for entity in sci_s.entities + sem_s.entities:
        span_of[(entity.perspective, entity.id)] = entity.span
        if entity.span not in ids:
            ids[entity.span] = f"M{len(ids) + 1}"
            entities.append(EntityMention(ids[entity.span], entity.span, UNTYPED_ENTITY, entity.perspective))

    relations, seen = [], set()
    for verdict in pair.verdicts_in(si):
        if verdict.agreement is Agreement.HIGH:
            chosen = [verdict.sci_relation]
        elif verdict.agreement is Agreement.MEDIUM:
            chosen = [verdict.sci_relation or verdict.sem_relation]
        elif policy is ConflictPolicy.KEEP_SCI:
            chosen = [verdict.sci_relation]
        elif policy is ConflictPolicy.KEEP_SEM:
            chosen = [verdict.sem_relation]
        else:
            chosen = [verdict.sci_relation, verdict.sem_relation]
        for r in chosen:
            label = r.relation_type if r.perspective is Perspective.SCI else map_relation_label(
                r.relation_type, Direction.SEM_TO_SCI
            )
            if label not in schema.relation_types:
                continue
            head = ids[span_of[(r.perspective, r.head)]]
            tail = ids[span_of[(r.perspective, r.tail)]]
            if head == tail or (head, tail, label) in seen:
                continue
            seen.add((head, tail, label))
            relations.append(RelationMention(head, tail, label, r.perspective))
    entities.sort(key=lambda e: (e.span.start, e.span.end))
    annotation = HeadAnnotation(tuple(entities), tuple(relations))
    return TrainingExample(pair.sci_doc.doc_id, si, _tokens_only(sci_s), {Head.HEAD_1: annotation})


def _check_sentence_count(aligned: list[AlignedDocument]) -> None:
    if len(aligned) != EXPECTED_OVERLAP_DOCUMENTS:
        return
    sentences = sum(len(p.sci_doc.sentences) for p in aligned)
    drift = abs(sentences - EXPECTED_OVERLAP_SENTENCES) / EXPECTED_OVERLAP_SENTENCES
    if drift > 0.02:
        logger.warning(
            "Overlap set has %d sentences, %.1f%% away from %d; segmentation likely differs",
            sentences, 100 * drift, EXPECTED_OVERLAP_SENTENCES,
        )
    else:
        logger.info("Overlap set has %d sentences", sentences)


def build_training_set(
    aligned: list[AlignedDocument], extras: list[Document] | None, spec: SplitSpec
) -> list[TrainingExample]:
    strategy = spec.strategy
    if strategy is Strategy.SCIERC_STANDARD:
        raise ConfigError("SCIERC_STANDARD sets come from build_scierc_standard_split")
    if strategy in _SINGLE_HEAD_SPACE and spec.label_space is not LabelSpace.COMMON_UNTYPED:
        raise ConfigError(f"{strategy.value} merges perspectives and needs the COMMON_UNTYPED label space")
    if strategy in (Strategy.MIXED, Strategy.MIXED_SCI, Strategy.MIXED_SEM) or spec.uses_soft_labels:
        _require_verdicts(aligned)
    _check_sentence_count(aligned)

    schemas = head_schemas(spec.label_space)
    examples: list[TrainingExample] = []
    if strategy is Strategy.INDEPENDENT_SCI:
        for pair in aligned:
            examples.extend(_single_head_examples(pair.sci_doc, Head.HEAD_1, schemas[Head.HEAD_1]))
    elif strategy is Strategy.INDEPENDENT_SEM:
        for pair in aligned:
            sem_doc = _sem_view(pair, spec.label_space)
            examples.extend(_single_head_examples(sem_doc, Head.HEAD_2, schemas[Head.HEAD_2]))
    elif strategy in (Strategy.CONCAT, Strategy.CONCAT_PLUS_SCI, Strategy.CONCAT_PLUS_SEM):
        schema = schemas[Head.HEAD_1]
        for pair in aligned:
            for si in range(len(pair.sci_doc.sentences)):
                sci_ann, _ = _project(pair.sci_doc.sentences[si], schema)
                sem_ann, _ = _project(pair.sem_doc.sentences[si], schema, Direction.SEM_TO_SCI)
                tokens = _tokens_only(pair.sci_doc.sentences[si])
                examples.append(TrainingExample(pair.sci_doc.doc_id, si, tokens, {Head.HEAD_1: sci_ann}))
                examples.append(TrainingExample(pair.sem_doc.doc_id, si, tokens, {Head.HEAD_1: sem_ann}))
        if strategy is not Strategy.CONCAT:
            if extras is None:
                raise MissingDataError(f"{strategy.value} needs the non-overlapped corpus as extras")
            for doc in extras:
                to_space = Direction.SEM_TO_SCI if _perspective_of(doc) is Perspective.SEM else None
                examples.extend(_single_head_examples(doc, Head.HEAD_1, schema, to_space))
    elif strategy in (Strategy.MIXED, Strategy.MIXED_SCI, Strategy.MIXED_SEM):
        for pair in aligned:
            for si in range(len(pair.sci_doc.sentences)):
                examples.append(_mixed_example(pair, si, spec.policy, schemas[Head.HEAD_1]))
    else:
        for pair in aligned:
            examples.extend(_mtl_examples(pair, spec, schemas))

    if spec.data_cap is not None:
        examples = cap_data_quantity(examples, spec.data_cap, spec.seed)
    logger.info("Built %d %s examples", len(examples), strategy.value)
    return examples


def build_test_set(docs: list[Document], label_space: LabelSpace) -> list[TrainingExample]:
    """Gold examples for held-out abstracts, on the head matching each document's perspective."""
    schemas = head_schemas(label_space)
    examples = []
    for doc in docs:
        head = Head.for_perspective(_perspective_of(doc))
        examples.extend(_single_head_examples(doc, head, schemas[head]))
    return examples


def build_scierc_standard_split(
    sci_corpus: list[Document],
    sem_corpus: list[Document],
    aligned: list[AlignedDocument] | None,
    partition: Mapping[str, set[str]] | None,
    spec: SplitSpec | None = None,
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    if not partition or not {"train", "test"} <= set(partition):
        raise MissingDataError("the SciERC train/dev/test partition is required for the standard split")
    spec = spec or SplitSpec(strategy=Strategy.SCIERC_STANDARD, label_space=LabelSpace.FULL_TYPED, soft_labels=True)
    if aligned is None:
        aligned = align_corpora(sem_corpus, sci_corpus).aligned
    schemas = head_schemas(spec.label_space)
    by_sci = {p.sci_doc.doc_id: p for p in aligned}
    train_ids = set(partition.get("train", set())) | set(partition.get("dev", set()))
    test_ids = set(partition["test"])

    train: list[TrainingExample] = []
    test: list[TrainingExample] = []
    dual = single = overlapped_test = 0
    for doc in sci_corpus:
        if doc.doc_id in train_ids:
            if doc.doc_id in by_sci:
                dual += 1
                train.extend(_mtl_examples(by_sci[doc.doc_id], spec, schemas))
            else:
                single += 1
                train.extend(_medium_examples(doc, spec, schemas))
        elif doc.doc_id in test_ids:
            overlapped_test += doc.doc_id in by_sci
            test.extend(_single_head_examples(doc, Head.HEAD_1, schemas[Head.HEAD_1]))
        else:
            logger.warning("SciERC document %s is in no partition; ignored", doc.doc_id)
    logger.info(
        "Standard split: %d dual-head and %d single-head training abstracts, %d test abstracts (%d overlapped)",
        dual, single, len({e.doc_id for e in test}), overlapped_test,
    )
    return train, test


def cap_data_quantity(examples: list[TrainingExample], n: int, seed: int) -> list[TrainingExample]:
    """Seeded subsample of n examples; for a fixed seed smaller caps are subsets of larger ones."""
    if n < 0:
        raise ValueError(f"data cap must be non-negative, got {n}")
    if n > len(examples):
        raise ValueError(f"cannot keep {n} of {len(examples)} examples")
    order = list(range(len(examples)))
    random.Random(seed).shuffle(order)
    return [examples[i] for i in sorted(order[:n])]


# --------------------------------------------------------------------------- persistence


class HeadRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    entities: list[EntityRecord]
    relations: list[RelationRecord]


class ExampleRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    doc_id: str
    sentence_index: int = Field(ge=0)
    tokens: list[TokenRecord]
    heads: dict[Head, HeadRecord]
    soft_labels: list[SoftLabelRecord] | None = None


class BuildManifest(BaseModel):
    strategy: Strategy
    label_space: LabelSpace
    conflict_policy: ConflictPolicy | None
    soft_labels: bool
    data_cap: int | None
    seed: int
    examples: int
    sentences: int
    heads: dict[str, dict[str, int]] = Field(default_factory=dict)
    agreements: dict[str, int] = Field(default_factory=dict)


def build_manifest(examples: list[TrainingExample], spec: SplitSpec) -> BuildManifest:
    heads: dict[str, Counter] = {}
    agreements: Counter = Counter()
    for example in examples:
        for head, annotation in example.annotations.items():
            counts = heads.setdefault(head.value, Counter())
            counts["examples"] += 1
            counts["entities"] += len(annotation.entities)
            counts["relations"] += len(annotation.relations)
        for target in example.soft_labels:
            agreements[target.label.agreement.value] += 1
    return BuildManifest(
        strategy=spec.strategy,
        label_space=spec.label_space,
        conflict_policy=spec.policy if spec.strategy in _DEFAULT_POLICY else None,
        soft_labels=spec.uses_soft_labels,
        data_cap=spec.data_cap,
        seed=spec.seed,
        examples=len(examples),
        sentences=len({e.key for e in examples}),
        heads={k: dict(v) for k, v in sorted(heads.items())},
        agreements=dict(sorted(agreements.items())),
    )


def example_to_record(example: TrainingExample) -> ExampleRecord:
    return ExampleRecord(
        doc_id=example.doc_id,
        sentence_index=example.sentence_index,
        tokens=[TokenRecord(text=t.text, start=t.char_start, end=t.char_end) for t in example.sentence.tokens],
        heads={
            head: HeadRecord(
                entities=[
                    EntityRecord(id=e.id, start=e.span.start, end=e.span.end, type=e.entity_type, perspective=e.perspective)
                    for e in annotation.entities
                ],
                relations=[
                    RelationRecord(head=r.head, tail=r.tail, type=r.relation_type, perspective=r.perspective)
                    for r in annotation.relations
                ],
            )
            for head, annotation in example.annotations.items()
        },
        soft_labels=[
            SoftLabelRecord(
                head=t.head.value,
                kind=t.kind,
                index=t.index,
                agreement=t.label.agreement.value,
                k=t.label.k,
                target_class=t.label.target_class,
            )
            for t in example.soft_labels
        ] or None,
    )


def example_from_record(record: ExampleRecord) -> TrainingExample:
    tokens = tuple(Token(i, t.text, t.start, t.end) for i, t in enumerate(record.tokens))
    annotations = {
        head: HeadAnnotation(
            tuple(EntityMention(e.id, Span(e.start, e.end), e.type, e.perspective) for e in h.entities),
            tuple(RelationMention(r.head, r.tail, r.type, r.perspective) for r in h.relations),
        )
        for head, h in record.heads.items()
    }
    soft = tuple(
        SoftTarget(Head(s.head), s.kind, s.index, make_soft_label(s.target_class, Agreement(s.agreement), s.k))
        for s in record.soft_labels or ()
    )
    return TrainingExample(record.doc_id, record.sentence_index, Sentence(tokens), annotations, soft)


def write_built_set(directory: str | Path, examples: list[TrainingExample], spec: SplitSpec) -> BuildManifest:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [dump_record(example_to_record(e)) for e in examples]
    (directory / "examples.jsonl").write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    manifest = build_manifest(examples, spec)
    (directory / "manifest.json").write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def read_built_set(directory: str | Path) -> list[TrainingExample]:
    path = Path(directory) / "examples.jsonl"
    if not path.exists():
        raise MissingDataError(f"no built set at {path}")
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    return [example_from_record(ExampleRecord.model_validate_json(line)) for line in lines]

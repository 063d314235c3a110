"""Span enumeration, negative sampling and per-head training candidates."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping

from src.corpus import Head, LabelSchema, Sentence, Span
from src.dataset_builder import HeadAnnotation, TrainingExample
from src.softlabel import SoftLabel


def enumerate_spans(sentence: Sentence | int, max_width: int) -> list[Span]:
    """Every span of width 1..min(max_width, n), ordered by (start, end)."""
    if max_width < 1:
        raise ValueError("max_width must be at least 1")
    n = sentence if isinstance(sentence, int) else len(sentence)
    return [Span(s, e) for s in range(n) for e in range(s + 1, min(s + max_width, n) + 1)]


@dataclass
class NegativeSample:
    spans: list[Span] = field(default_factory=list)
    pairs: list[tuple[str, str]] = field(default_factory=list)  # (head id, tail id) of gold entities


def sample_negatives(
    sentence: Sentence,
    gold: Mapping[Head, HeadAnnotation],
    counts: tuple[int, int] = (100, 100),
    seed: int | str = 0,
    max_width: int = 10,
) -> dict[Head, NegativeSample]:
    neg_entities, neg_relations = counts
    if neg_entities < 0 or neg_relations < 0:
        raise ValueError("negative counts must be non-negative")
    spans = enumerate_spans(sentence, max_width)
    out = {}
    for head in sorted(gold, key=lambda h: h.value):
        annotation = gold[head]
        rng = random.Random(f"{seed}:{head.value}")
        gold_spans = {e.span for e in annotation.entities}
        pool = [s for s in spans if s not in gold_spans]
        span_negatives = rng.sample(pool, min(neg_entities, len(pool)))

        related = {(r.head, r.tail) for r in annotation.relations}
        ids = [e.id for e in annotation.entities]
        pair_pool = [(a, b) for a in ids for b in ids if a != b and (a, b) not in related]
        pair_negatives = rng.sample(pair_pool, min(neg_relations, len(pair_pool)))
        out[head] = NegativeSample(span_negatives, pair_negatives)
    return out


@dataclass
class Candidates:
    """Everything one head is trained on for one sentence.

    Gold entities come first in `spans`, in annotation order, so entity soft labels index directly.
    """

    spans: list[Span] = field(default_factory=list)
    span_labels: list[int] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)
    pair_labels: list[list[float]] = field(default_factory=list)
    relation_soft: list[tuple[int, SoftLabel]] = field(default_factory=list)
    entity_soft: list[tuple[int, SoftLabel]] = field(default_factory=list)


def build_candidates(
    example: TrainingExample,
    schemas: Mapping[Head, LabelSchema],
    counts: tuple[int, int] = (100, 100),
    seed: int | str = 0,
    max_width: int = 10,
) -> dict[Head, Candidates]:
    negatives = sample_negatives(example.sentence, example.annotations, counts, seed, max_width)
    out = {}
    for head, annotation in example.annotations.items():
        schema = schemas[head]
        c = Candidates()
        index_of: dict[str, int] = {}
        for entity in annotation.entities:
            index_of[entity.id] = len(c.spans)
            c.spans.append(entity.span)
            c.span_labels.append(schema.entity_index(entity.entity_type))
        for span in negatives[head].spans:
            c.spans.append(span)
            c.span_labels.append(0)

        pair_index: dict[tuple[int, int], int] = {}
        relation_pair: list[int] = []
        for relation in annotation.relations:
            key = (index_of[relation.head], index_of[relation.tail])
            if key not in pair_index:
                pair_index[key] = len(c.pairs)
                c.pairs.append(key)
                c.pair_labels.append([0.0] * len(schema.relation_types))
            c.pair_labels[pair_index[key]][schema.relation_index(relation.relation_type)] = 1.0
            relation_pair.append(pair_index[key])
        for a, b in negatives[head].pairs:
            c.pairs.append((index_of[a], index_of[b]))
            c.pair_labels.append([0.0] * len(schema.relation_types))

        for target in example.soft_targets(head, "relation"):
            c.relation_soft.append((relation_pair[target.index], target.label))
        for target in example.soft_targets(head, "entity"):
            c.entity_soft.append((target.index, target.label))
        out[head] = c
    return out

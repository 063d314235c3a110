"""Micro precision/recall/F1 for entities and relations, seed and test-set averaging, SciREX scoring."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from src.corpus import SCIREX_ENTITY_TYPES, Direction, EntityMention, RelationMention, map_relation_label

SentenceAnnotations = tuple[Sequence[EntityMention], Sequence[RelationMention]]


class Task(str, Enum):
    NER = "NER"
    RE = "RE"


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F1 with 0/0 taken as 0."""
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return p, r, _ratio(2 * p * r, p + r)


@dataclass(frozen=True)
class LabelScore:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalResult:
    task: Task
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    per_label: dict[str, LabelScore] = field(default_factory=dict)
    per_seed: tuple["EvalResult", ...] = ()

    @classmethod
    def from_counts(cls, task: Task, tp: int, fp: int, fn: int, per_label=None) -> "EvalResult":
        p, r, f = prf(tp, fp, fn)
        return cls(task, p, r, f, tp, fp, fn, per_label or {})

    def to_record(self, **meta) -> dict:
        record = {
            "task": self.task.value,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "per_label": {
                k: {"precision": v.precision, "recall": v.recall, "f1": v.f1, "tp": v.tp, "fp": v.fp, "fn": v.fn}
                for k, v in sorted(self.per_label.items())
            },
        }
        if self.per_seed:
            record["per_seed_f1"] = [r.f1 for r in self.per_seed]
        record.update(meta)
        return record


def _score(task: Task, pred: Iterable[tuple], gold: Iterable[tuple]) -> EvalResult:
    """One-to-one multiset matching; the last element of each item is its label."""
    pred_counts, gold_counts = Counter(pred), Counter(gold)
    matched = pred_counts & gold_counts
    labels = sorted({k[-1] for k in pred_counts} | {k[-1] for k in gold_counts})
    per_label = {}
    for label in labels:
        tp = sum(n for k, n in matched.items() if k[-1] == label)
        fp = sum(n for k, n in pred_counts.items() if k[-1] == label) - tp
        fn = sum(n for k, n in gold_counts.items() if k[-1] == label) - tp
        per_label[label] = LabelScore(*prf(tp, fp, fn), tp, fp, fn)
    tp = sum(matched.values())
    return EvalResult.from_counts(task, tp, sum(pred_counts.values()) - tp, sum(gold_counts.values()) - tp, per_label)


def _entity_items(sentences: Sequence[Sequence[EntityMention]], typed: bool) -> list[tuple]:
    return [
        (i, e.span.start, e.span.end, e.entity_type if typed else "ENTITY")
        for i, entities in enumerate(sentences)
        for e in entities
    ]


def score_ner(
    pred: Sequence[Sequence[EntityMention]], gold: Sequence[Sequence[EntityMention]], typed: bool = True
) -> EvalResult:
    """Both arguments are per-sentence entity lists over the same sentence grid."""
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predicted sentences vs {len(gold)} gold sentences")
    return _score(Task.NER, _entity_items(pred, typed), _entity_items(gold, typed))


def _relation_items(sentences: Sequence[SentenceAnnotations], boundaries_only: bool) -> list[tuple]:
    items = []
    for i, (entities, relations) in enumerate(sentences):
        by_id = {e.id: e for e in entities}
        for r in relations:
            h, t = by_id[r.head], by_id[r.tail]
            if boundaries_only:
                items.append((i, h.span.start, h.span.end, t.span.start, t.span.end, r.relation_type))
            else:
                items.append(
                    (i, h.span.start, h.span.end, h.entity_type, t.span.start, t.span.end, t.entity_type, r.relation_type)
                )
    return items


def score_re(
    pred: Sequence[SentenceAnnotations], gold: Sequence[SentenceAnnotations], boundaries_only: bool = True
) -> EvalResult:
    """Per-sentence (entities, relations); a relation matches on both spans and its type, plus the
    argument entity types unless `boundaries_only`."""
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predicted sentences vs {len(gold)} gold sentences")
    return _score(Task.RE, _relation_items(pred, boundaries_only), _relation_items(gold, boundaries_only))


def _mean(results: Sequence[EvalResult]) -> tuple[float, float, float, int, int, int]:
    return (
        float(np.mean([r.precision for r in results])),
        float(np.mean([r.recall for r in results])),
        float(np.mean([r.f1 for r in results])),
        sum(r.tp for r in results),
        sum(r.fp for r in results),
        sum(r.fn for r in results),
    )


def average_over_seeds(results: Sequence[EvalResult]) -> EvalResult:
    if not results:
        raise ValueError("no results to average")
    tasks = {r.task for r in results}
    if len(tasks) != 1:
        raise ValueError(f"cannot average across tasks {sorted(t.value for t in tasks)}")
    task = results[0].task
    return EvalResult(task, *_mean(results), per_seed=tuple(results))


def average_sets(sem_result: EvalResult, sci_result: EvalResult) -> EvalResult:
    if sem_result.task is not sci_result.task:
        raise ValueError("cannot average results of different tasks")
    return EvalResult(sem_result.task, *_mean([sem_result, sci_result]))


def score_scirex_cross(
    pred: Sequence[Sequence[EntityMention]], gold: Sequence[Sequence[EntityMention]]
) -> EvalResult:
    """Typed NER micro-averaged over Method, Task, Metric and Material only."""
    keep = set(SCIREX_ENTITY_TYPES)
    return score_ner(
        [[e for e in sentence if e.entity_type in keep] for sentence in pred],
        [[e for e in sentence if e.entity_type in keep] for sentence in gold],
        typed=True,
    )


def relabel(annotations: SentenceAnnotations, direction: Direction) -> SentenceAnnotations:
    """Translate relation labels across perspectives, dropping those without a counterpart."""
    entities, relations = annotations
    moved = []
    for r in relations:
        label = map_relation_label(r.relation_type, direction)
        if label is not None:
            moved.append(RelationMention(r.head, r.tail, label, r.perspective))
    return entities, moved

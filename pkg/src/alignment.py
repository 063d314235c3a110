"""
Cross-perspective alignment of the SemEval-2018 and SciERC annotations of the same abstracts:
overlap detection, token-grid reconciliation, entity matching, agreement levels and the
co-occurrence statistics used to justify the label mapping.
"""
from __future__ import annotations

import logging
import re
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, NamedTuple

import numpy as np

from src.corpus import (
    COMMON_RELATION_PAIRS,
    COMMON_SCI_RELATIONS,
    COMMON_SEM_RELATIONS,
    SEM_TRANSFER_TYPE,
    Agreement,
    Direction,
    Document,
    EntityMention,
    Perspective,
    RelationMention,
    Sentence,
    Span,
    map_relation_label,
)
from src.errors import AmbiguousOverlapError, UndefinedScoreError

logger = logging.getLogger(__name__)

_PTB_ESCAPES = re.compile(r"-(?:LRB|RRB|LSB|RSB|LCB|RCB)-")

# Published common-relation counts on the overlapped abstracts; flags which counting definition reproduces them.
REFERENCE_COMMON_RELATIONS = {Perspective.SEM: 1071, Perspective.SCI: 1922}


class MatchKind(str, Enum):
    EXACT = "EXACT"
    PARTIAL = "PARTIAL"


@dataclass(frozen=True)
class EntityMatch:
    sentence_index: int
    sem_id: str
    sci_id: str
    kind: MatchKind


@dataclass(frozen=True)
class RelationVerdict:
    sentence_index: int
    sci_relation: RelationMention | None
    sem_relation: RelationMention | None
    agreement: Agreement


@dataclass(frozen=True)
class AlignedDocument:
    sem_doc: Document
    sci_doc: Document
    sentence_alignment: tuple[tuple[int, int], ...]
    entity_matches: tuple[EntityMatch, ...] = ()
    relation_verdicts: tuple[RelationVerdict, ...] = ()
    dropped_relations: int = 0

    def exact_map(self, perspective: Perspective) -> dict[tuple[int, str], str]:
        """(sentence, entity id in `perspective`) -> EXACT-matched id in the other perspective."""
        out = {}
        for m in self.entity_matches:
            if m.kind is MatchKind.EXACT:
                if perspective is Perspective.SCI:
                    out[(m.sentence_index, m.sci_id)] = m.sem_id
                else:
                    out[(m.sentence_index, m.sem_id)] = m.sci_id
        return out

    def verdicts_in(self, sentence_index: int) -> list[RelationVerdict]:
        return [v for v in self.relation_verdicts if v.sentence_index == sentence_index]


class OverlapResult(NamedTuple):
    aligned: list[AlignedDocument]
    sem_only: list[Document]
    sci_only: list[Document]


# --------------------------------------------------------------------------- overlap detection


def normalize_with_offsets(text: str) -> tuple[str, list[int]]:
    """Lowercased alphanumeric skeleton of text plus the source offset of every kept character.

    Whitespace, punctuation and PTB bracket escapes are dropped, so tokenization and quote/dash
    variants do not affect equality.
    """
    masked = _PTB_ESCAPES.sub(lambda m: " " * len(m.group()), text)
    chars: list[str] = []
    offsets: list[int] = []
    for i, ch in enumerate(masked):
        if ch.isalnum():
            for c in ch.lower():
                if c.isalnum():
                    chars.append(c)
                    offsets.append(i)
    return "".join(chars), offsets


def normalize_text(text: str) -> str:
    return normalize_with_offsets(text)[0]


def find_overlaps(sem_corpus: list[Document], sci_corpus: list[Document]) -> OverlapResult:
    sci_index: dict[str, list[Document]] = {}
    for doc in sci_corpus:
        key = normalize_text(doc.raw_text)
        if key:
            sci_index.setdefault(key, []).append(doc)

    claimed: dict[str, str] = {}
    aligned, sem_only = [], []
    for sem_doc in sem_corpus:
        partners = sci_index.get(normalize_text(sem_doc.raw_text), [])
        if len(partners) > 1:
            raise AmbiguousOverlapError([sem_doc.doc_id] + [d.doc_id for d in partners])
        if not partners:
            sem_only.append(sem_doc)
            continue
        sci_doc = partners[0]
        if sci_doc.doc_id in claimed:
            raise AmbiguousOverlapError([claimed[sci_doc.doc_id], sem_doc.doc_id, sci_doc.doc_id])
        claimed[sci_doc.doc_id] = sem_doc.doc_id
        regridded, dropped = regrid_to(sem_doc, sci_doc)
        aligned.append(
            AlignedDocument(
                sem_doc=regridded,
                sci_doc=sci_doc,
                sentence_alignment=tuple((i, i) for i in range(len(sci_doc.sentences))),
                dropped_relations=dropped,
            )
        )
    sci_only = [d for d in sci_corpus if d.doc_id not in claimed]
    logger.info(
        "Overlap: %d aligned, %d SemEval-only, %d SciERC-only", len(aligned), len(sem_only), len(sci_only)
    )
    return OverlapResult(aligned, sem_only, sci_only)


def regrid_to(sem_doc: Document, sci_doc: Document) -> tuple[Document, int]:
    """Re-express a SemEval document on SciERC's sentences and tokens.

    Entity character ranges travel through the shared normalized character sequence; boundaries
    that fall inside a SciERC token snap outward to whole tokens. Relations whose endpoints land in
    different SciERC sentences are dropped and counted.
    """
    sem_norm, sem_off = normalize_with_offsets(sem_doc.raw_text)
    sci_norm, sci_off = normalize_with_offsets(sci_doc.raw_text)
    if sem_norm != sci_norm:
        raise ValueError(f"{sem_doc.doc_id} and {sci_doc.doc_id} do not share normalized text")

    flat = [(si, tok) for si, s in enumerate(sci_doc.sentences) for tok in s.tokens]
    token_ends = [tok.char_end for _, tok in flat]

    placed: dict[int, list[EntityMention]] = {}
    home: dict[str, int] = {}
    for sentence in sem_doc.sentences:
        for entity in sentence.entities:
            cs = sentence.tokens[entity.span.start].char_start
            ce = sentence.tokens[entity.span.end - 1].char_end
            a, b = bisect_left(sem_off, cs), bisect_left(sem_off, ce)
            if a >= b:
                logger.warning("%s: entity %s has no alphanumeric content; dropped", sem_doc.doc_id, entity.id)
                continue
            sc, ec = sci_off[a], sci_off[b - 1] + 1
            first = bisect_right(token_ends, sc)
            if first >= len(flat):
                logger.warning("%s: entity %s falls outside the SciERC tokens; dropped", sem_doc.doc_id, entity.id)
                continue
            si = flat[first][0]
            tokens = sci_doc.sentences[si].tokens
            covered = [t.index for t in tokens if t.char_end > sc and t.char_start < ec]
            if tokens[-1].char_end < ec:
                logger.warning("%s: entity %s clipped at a SciERC sentence boundary", sem_doc.doc_id, entity.id)
            span = Span(covered[0], covered[-1] + 1)
            placed.setdefault(si, []).append(replace(entity, span=span))
            home[entity.id] = si

    relations: dict[int, list[RelationMention]] = {}
    dropped = 0
    for sentence in sem_doc.sentences:
        for relation in sentence.relations:
            h, t = home.get(relation.head), home.get(relation.tail)
            if h is None or t is None or h != t:
                dropped += 1
                logger.warning(
                    "%s: relation %s(%s,%s) crosses the aligned sentence grid; dropped",
                    sem_doc.doc_id, relation.relation_type, relation.head, relation.tail,
                )
                continue
            relations.setdefault(h, []).append(relation)

    sentences = tuple(
        Sentence(
            tokens=s.tokens,
            entities=tuple(sorted(placed.get(i, ()), key=lambda e: (e.span.start, e.span.end, e.id))),
            relations=tuple(relations.get(i, ())),
        )
        for i, s in enumerate(sci_doc.sentences)
    )
    return Document(sem_doc.doc_id, sem_doc.source, sci_doc.raw_text, sentences), dropped


# --------------------------------------------------------------------------- entity matching


def align_entities(pair: AlignedDocument) -> AlignedDocument:
    """EXACT matches first, then greedy highest-overlap PARTIAL matches among the leftovers."""
    matches: list[EntityMatch] = []
    for sem_i, sci_i in pair.sentence_alignment:
        sem_entities = pair.sem_doc.sentences[sem_i].entities
        sci_entities = pair.sci_doc.sentences[sci_i].entities
        used_sem: set[str] = set()
        used_sci: set[str] = set()

        for sem in sem_entities:
            for sci in sci_entities:
                if sci.id not in used_sci and sci.span == sem.span:
                    matches.append(EntityMatch(sci_i, sem.id, sci.id, MatchKind.EXACT))
                    used_sem.add(sem.id)
                    used_sci.add(sci.id)
                    break

        candidates = sorted(
            (
                (-sem.span.overlap(sci.span), sci.span.start, sci.span.width, sem.span.start, sem.span.width, sem.id, sci.id)
                for sem in sem_entities
                if sem.id not in used_sem
                for sci in sci_entities
                if sci.id not in used_sci and sem.span.overlap(sci.span) > 0
            )
        )
        for *_, sem_id, sci_id in candidates:
            if sem_id in used_sem or sci_id in used_sci:
                continue
            matches.append(EntityMatch(sci_i, sem_id, sci_id, MatchKind.PARTIAL))
            used_sem.add(sem_id)
            used_sci.add(sci_id)
    return replace(pair, entity_matches=tuple(matches))


# --------------------------------------------------------------------------- agreement levels

# Relations whose argument order carries no information.
SYMMETRIC_RELATIONS = ("Compare",)


def _pair_level(
    to_sem: dict[tuple[int, str], str], sentence_index: int, sci: RelationMention, sem: RelationMention
) -> Agreement | None:
    """HIGH or LOW when the two relations can pair up; None when they cannot."""
    h, t = to_sem.get((sentence_index, sci.head)), to_sem.get((sentence_index, sci.tail))
    if h is None or t is None or {h, t} != {sem.head, sem.tail}:
        return None
    mapped = map_relation_label(sem.relation_type, Direction.SEM_TO_SCI)
    if mapped is None or mapped != sci.relation_type:
        return Agreement.LOW
    if (sem.head, sem.tail) == (h, t) or sci.relation_type in SYMMETRIC_RELATIONS:
        return Agreement.HIGH
    # same label in the opposite direction is no label conflict; both stay MEDIUM
    return None


def _max_matching(edges: dict[int, list[int]], taken: set[int]) -> dict[int, int]:
    """Maximum bipartite matching by augmenting paths; left indexes are tried in ascending order."""
    owner: dict[int, int] = {}

    def augment(left: int, seen: set[int]) -> bool:
        for right in edges[left]:
            if right in taken or right in seen:
                continue
            seen.add(right)
            if right not in owner or augment(owner[right], seen):
                owner[right] = left
                return True
        return False

    for left in sorted(edges):
        augment(left, set())
    return {left: right for right, left in owner.items()}


def assign_agreements(pair: AlignedDocument, first: Perspective = Perspective.SCI) -> AlignedDocument:
    """Give every relation of both perspectives exactly one verdict.

    Pairs are matched per sentence, all HIGH pairs before any LOW pair, each tier as a maximum
    matching. The matching never depends on `first`, which only orders the emitted verdicts.
    """
    verdicts: list[RelationVerdict] = []
    to_sem = pair.exact_map(Perspective.SCI)
    for sem_i, sci_i in pair.sentence_alignment:
        sci_rels = pair.sci_doc.sentences[sci_i].relations
        sem_rels = pair.sem_doc.sentences[sem_i].relations
        levels = {
            (a, b): level
            for a, sci in enumerate(sci_rels)
            for b, sem in enumerate(sem_rels)
            if (level := _pair_level(to_sem, sci_i, sci, sem)) is not None
        }
        matched: dict[int, tuple[int, Agreement]] = {}
        for tier in (Agreement.HIGH, Agreement.LOW):
            edges = {
                a: [b for b in range(len(sem_rels)) if levels.get((a, b)) is tier]
                for a in range(len(sci_rels))
                if a not in matched
            }
            taken = {b for b, _ in matched.values()}
            for a, b in _max_matching(edges, taken).items():
                matched[a] = (b, tier)
        partner_of_sem = {b: a for a, (b, _) in matched.items()}

        if first is Perspective.SCI:
            for a, sci in enumerate(sci_rels):
                if a in matched:
                    b, level = matched[a]
                    verdicts.append(RelationVerdict(sci_i, sci, sem_rels[b], level))
                else:
                    verdicts.append(_single(sci_i, sci, Perspective.SCI))
            verdicts += [_single(sci_i, sem, Perspective.SEM) for b, sem in enumerate(sem_rels) if b not in partner_of_sem]
        else:
            for b, sem in enumerate(sem_rels):
                if b in partner_of_sem:
                    a = partner_of_sem[b]
                    verdicts.append(RelationVerdict(sci_i, sci_rels[a], sem, matched[a][1]))
                else:
                    verdicts.append(_single(sci_i, sem, Perspective.SEM))
            verdicts += [_single(sci_i, sci, Perspective.SCI) for a, sci in enumerate(sci_rels) if a not in matched]
    return replace(pair, relation_verdicts=tuple(verdicts))


def _single(sentence_index: int, relation: RelationMention, perspective: Perspective) -> RelationVerdict:
    if perspective is Perspective.SCI:
        return RelationVerdict(sentence_index, relation, None, Agreement.MEDIUM)
    return RelationVerdict(sentence_index, None, relation, Agreement.MEDIUM)


def align_corpora(sem_corpus: list[Document], sci_corpus: list[Document]) -> OverlapResult:
    """find_overlaps followed by entity matching and agreement assignment on every pair."""
    result = find_overlaps(sem_corpus, sci_corpus)
    aligned = [assign_agreements(align_entities(p)) for p in result.aligned]
    return OverlapResult(aligned, result.sem_only, result.sci_only)


def verdict_for(pair: AlignedDocument, sentence_index: int, relation: RelationMention) -> RelationVerdict | None:
    for verdict in pair.verdicts_in(sentence_index):
        if relation in (verdict.sci_relation, verdict.sem_relation):
            return verdict
    return None


def entity_agreement(pair: AlignedDocument, sentence_index: int, entity: EntityMention) -> Agreement:
    """EXACT -> HIGH, PARTIAL -> LOW, unmatched -> MEDIUM."""
    for m in pair.entity_matches:
        if m.sentence_index != sentence_index:
            continue
        mine = m.sci_id if entity.perspective is Perspective.SCI else m.sem_id
        if mine == entity.id:
            return Agreement.HIGH if m.kind is MatchKind.EXACT else Agreement.LOW
    return Agreement.MEDIUM


# --------------------------------------------------------------------------- co-occurrence


def transfer_entity_types(pair: AlignedDocument) -> Document:
    """SemEval entities take the type of the EXACT-matched SciERC entity, else OtherScientificTerm_2."""
    to_sci = pair.exact_map(Perspective.SEM)
    sentences = []
    for si, (sem_s, sci_s) in enumerate(zip(pair.sem_doc.sentences, pair.sci_doc.sentences)):
        sci_types = {e.id: e.entity_type for e in sci_s.entities}
        entities = tuple(
            replace(e, entity_type=sci_types.get(to_sci.get((si, e.id), ""), SEM_TRANSFER_TYPE))
            for e in sem_s.entities
        )
        sentences.append(replace(sem_s, entities=entities))
    return replace(pair.sem_doc, sentences=tuple(sentences))


@dataclass(frozen=True)
class CooccurrenceTable:
    perspective: Perspective
    a: Mapping[tuple[str, str, str], int] = field(default_factory=dict)
    n1: Mapping[str, int] = field(default_factory=dict)
    n2: Mapping[str, int] = field(default_factory=dict)
    total_relations: int = 0

    @property
    def entity_types(self) -> list[str]:
        return sorted(set(self.n1) | set(self.n2))


def build_cooccurrence_table(aligned: list[AlignedDocument], perspective: Perspective) -> CooccurrenceTable:
    a: Counter = Counter()
    n1: Counter = Counter()
    n2: Counter = Counter()
    total = 0
    for pair in aligned:
        doc = pair.sci_doc if perspective is Perspective.SCI else transfer_entity_types(pair)
        for sentence in doc.sentences:
            types = {e.id: e.entity_type for e in sentence.entities}
            for r in sentence.relations:
                i, j = types[r.head], types[r.tail]
                a[(i, j, r.relation_type)] += 1
                n1[i] += 1
                n2[j] += 1
                total += 1
    return CooccurrenceTable(perspective, dict(a), dict(n1), dict(n2), total)


def cooccurrence_score(table: CooccurrenceTable, i: str, j: str, k: str) -> Fraction:
    """A(i, j)^k / (N1_i + N2_j)."""
    denominator = table.n1.get(i, 0) + table.n2.get(j, 0)
    if denominator == 0:
        raise UndefinedScoreError(f"no occurrences of {i!r} as argument 1 or {j!r} as argument 2")
    return Fraction(table.a.get((i, j, k), 0), denominator)


def cooccurrence_matrix(
    table: CooccurrenceTable, relation: str, types: list[str] | None = None
) -> tuple[list[str], np.ndarray]:
    """Square matrix of scores for one relation (rows: argument-1 type, columns: argument-2 type)."""
    types = types or table.entity_types
    matrix = np.zeros((len(types), len(types)))
    for r, i in enumerate(types):
        for c, j in enumerate(types):
            if table.n1.get(i, 0) + table.n2.get(j, 0):
                matrix[r, c] = float(cooccurrence_score(table, i, j, relation))
    return types, matrix


def argmax_cell(table: CooccurrenceTable, relation: str) -> tuple[str, str]:
    types, matrix = cooccurrence_matrix(table, relation)
    r, c = np.unravel_index(int(np.argmax(matrix)), matrix.shape)
    return types[r], types[c]


# --------------------------------------------------------------------------- statistics


@dataclass
class OverlapReport:
    aligned_documents: int
    entities: dict[str, int]
    relations: dict[str, int]
    common_relations: dict[str, int]
    strict_common_relations: dict[str, int]
    agreements: dict[str, int]
    distribution: dict[str, dict[str, int]]
    dropped_relations: int
    reproducing_definition: str | None

    def as_dict(self) -> dict:
        return {
            "aligned_documents": self.aligned_documents,
            "entities": self.entities,
            "relations": self.relations,
            "common_relations": self.common_relations,
            "strict_common_relations": self.strict_common_relations,
            "agreements": self.agreements,
            "distribution": self.distribution,
            "dropped_relations": self.dropped_relations,
            "reproducing_definition": self.reproducing_definition,
        }


def relation_distribution(aligned: list[AlignedDocument]) -> dict[str, dict[str, int]]:
    """Counts of the five common relations per perspective, keyed by the "SciERC/SemEval" pair name."""
    out = {p.value: {f"{sci}/{sem}": 0 for sem, sci in COMMON_RELATION_PAIRS} for p in Perspective}
    for pair in aligned:
        for perspective, doc in ((Perspective.SCI, pair.sci_doc), (Perspective.SEM, pair.sem_doc)):
            for sentence in doc.sentences:
                for r in sentence.relations:
                    sci = r.relation_type if perspective is Perspective.SCI else map_relation_label(
                        r.relation_type, Direction.SEM_TO_SCI
                    )
                    if sci in COMMON_SCI_RELATIONS:
                        sem = map_relation_label(sci, Direction.SCI_TO_SEM)
                        out[perspective.value][f"{sci}/{sem}"] += 1
    return out


def overlap_statistics(aligned: list[AlignedDocument]) -> OverlapReport:
    entities = Counter()
    relations = Counter()
    common = Counter()
    strict = Counter()
    agreements = Counter({a.value: 0 for a in Agreement})
    common_labels = {Perspective.SCI: set(COMMON_SCI_RELATIONS), Perspective.SEM: set(COMMON_SEM_RELATIONS)}
    for pair in aligned:
        for perspective, doc in ((Perspective.SCI, pair.sci_doc), (Perspective.SEM, pair.sem_doc)):
            exact = pair.exact_map(perspective)
            for si, sentence in enumerate(doc.sentences):
                entities[perspective.value] += len(sentence.entities)
                for r in sentence.relations:
                    relations[perspective.value] += 1
                    if r.relation_type in common_labels[perspective]:
                        common[perspective.value] += 1
                        if (si, r.head) in exact and (si, r.tail) in exact:
                            strict[perspective.value] += 1
        for verdict in pair.relation_verdicts:
            agreements[verdict.agreement.value] += 1

    reference = {p.value: n for p, n in REFERENCE_COMMON_RELATIONS.items()}
    reproducing = None
    if dict(common) == reference:
        reproducing = "label"
    elif dict(strict) == reference:
        reproducing = "strict"
    return OverlapReport(
        aligned_documents=len(aligned),
        entities={p.value: entities[p.value] for p in Perspective},
        relations={p.value: relations[p.value] for p in Perspective},
        common_relations={p.value: common[p.value] for p in Perspective},
        strict_common_relations={p.value: strict[p.value] for p in Perspective},
        agreements=dict(agreements),
        distribution=relation_distribution(aligned),
        dropped_relations=sum(p.dropped_relations for p in aligned),
        reproducing_definition=reproducing,
    )

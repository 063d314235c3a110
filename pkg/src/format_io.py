"""
Parsers for the SemEval-2018 Task 7 (sub-task 2), SciERC and SciREX releases, and the toolkit's
unified line-delimited interchange format.
"""
from __future__ import annotations

import html
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.corpus import (
    SCIERC_RELATION_TYPES,
    SCIREX_ENTITY_TYPES,
    UNTYPED_ENTITY,
    Document,
    EntityMention,
    Perspective,
    RelationMention,
    Sentence,
    Source,
    Span,
    Token,
)
from src.errors import ParseError, RecordError
from src.text import Segmenter, get_segmenter, merge_ranges_over_spans, tokenize

logger = logging.getLogger(__name__)

SEMEVAL_LABELS = {
    "USAGE": "Usage",
    "RESULT": "Result",
    "MODEL-FEATURE": "Model",
    "PART_WHOLE": "Part-whole",
    "TOPIC": "Topic",
    "COMPARE": "Comparison",
}

# the official release spells SciERC relations in upper case
_SCIERC_LABELS = {label.upper(): label for label in SCIERC_RELATION_TYPES}

_TEXT_BLOCK = re.compile(r'<text\s+id="([^"]+)"\s*>(.*?)</text>', re.S)
_ABSTRACT = re.compile(r"<abstract>(.*?)</abstract>", re.S)
_ENTITY_OPEN = re.compile(r'<entity\s+id="([^"]+)"\s*>')
_ANY_TAG = re.compile(r"</?[a-zA-Z][^>]*>")
_RELATION_LINE = re.compile(r"^\s*([A-Z_\-]+)\(\s*([^,\s()]+)\s*,\s*([^,\s()]+)\s*(,\s*REVERSE\s*)?\)\s*$")

_ABSTRACT_HEADING = {"abstract"}


@dataclass
class ParseReport:
    source: Source
    documents: int = 0
    entities: int = 0
    relations: int = 0
    dropped_relations: int = 0
    skipped_documents: int = 0
    dropped_by_reason: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def relations_per_document(self) -> float:
        return self.relations / self.documents if self.documents else 0.0

    def as_dict(self) -> dict:
        return {
            "source": self.source.value,
            "documents": self.documents,
            "entities": self.entities,
            "relations": self.relations,
            "relations_per_document": round(self.relations_per_document, 2),
            "dropped_relations": self.dropped_relations,
            "dropped_by_reason": dict(sorted(self.dropped_by_reason.items())),
            "skipped_documents": self.skipped_documents,
        }

    def _count(self, docs: list[Document]) -> None:
        self.documents = len(docs)
        self.entities = sum(d.entity_count() for d in docs)
        self.relations = sum(d.relation_count() for d in docs)

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def drop(self, reason: str, message: str) -> None:
        self.dropped_relations += 1
        self.dropped_by_reason[reason] = self.dropped_by_reason.get(reason, 0) + 1
        self.warn(message)


# --------------------------------------------------------------------------- SemEval-2018


def _strip_markup(fragment: str) -> tuple[str, dict[str, tuple[int, int]]]:
    """Remove inline entity markers; return clean text and entity char ranges over it."""
    out: list[str] = []
    length = 0
    ranges: dict[str, tuple[int, int]] = {}
    open_ids: list[tuple[str, int]] = []
    pos = 0
    for match in _ANY_TAG.finditer(fragment):
        chunk = html.unescape(fragment[pos:match.start()])
        out.append(chunk)
        length += len(chunk)
        tag = match.group()
        opened = _ENTITY_OPEN.fullmatch(tag)
        if opened:
            open_ids.append((opened.group(1), length))
        elif tag == "</entity>" and open_ids:
            entity_id, start = open_ids.pop()
            ranges[entity_id] = (start, length)
        pos = match.end()
    out.append(html.unescape(fragment[pos:]))
    text = "".join(out)

    # trim the abstract and the entity ranges to non-space content
    lead = len(text) - len(text.lstrip())
    text = text.strip()
    trimmed = {}
    for entity_id, (start, end) in ranges.items():
        start, end = max(0, start - lead), min(len(text), end - lead)
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            trimmed[entity_id] = (start, end)
    return text, trimmed


def _build_sentences(
    text: str,
    entity_ranges: dict[str, tuple[int, int]],
    entity_types: dict[str, str],
    perspective: Perspective,
    segmenter: Segmenter,
) -> tuple[list[Sentence], dict[str, int]]:
    """Tokenize and segment clean text, placing each entity on the token grid of its sentence."""
    ranges = merge_ranges_over_spans(segmenter.segment(text), list(entity_ranges.values()))
    sentences: list[list[Token]] = []
    for start, end in ranges:
        toks = tokenize(text[start:end], offset=start)
        if toks:
            sentences.append([Token(i, t, s, e) for i, (t, s, e) in enumerate(toks)])

    placed: dict[int, list[EntityMention]] = {}
    home: dict[str, int] = {}
    for entity_id, (cs, ce) in sorted(entity_ranges.items(), key=lambda kv: (kv[1], kv[0])):
        for si, tokens in enumerate(sentences):
            covered = [t.index for t in tokens if t.char_end > cs and t.char_start < ce]
            if covered:
                span = Span(covered[0], covered[-1] + 1)
                placed.setdefault(si, []).append(
                    EntityMention(entity_id, span, entity_types.get(entity_id, UNTYPED_ENTITY), perspective)
                )
                home[entity_id] = si
                break
    return [Sentence(tuple(tokens), tuple(placed.get(i, ()))) for i, tokens in enumerate(sentences)], home


def parse_semeval_with_report(
    entity_file_content: str,
    relation_file_content: str,
    segmenter: Segmenter | None = None,
) -> tuple[list[Document], ParseReport]:
    segmenter = segmenter or get_segmenter()
    report = ParseReport(Source.SEMEVAL)

    docs: dict[str, tuple[str, list[Sentence], dict[str, int]]] = {}
    order: list[str] = []
    for match in _TEXT_BLOCK.finditer(entity_file_content):
        doc_id, body = match.group(1), match.group(2)
        abstract = _ABSTRACT.search(body)
        if abstract is None:
            report.warn(f"SemEval document {doc_id} has no abstract; skipped")
            report.skipped_documents += 1
            continue
        text, ranges = _strip_markup(abstract.group(1))
        sentences, home = _build_sentences(text, ranges, {}, Perspective.SEM, segmenter)
        docs[doc_id] = (text, sentences, home)
        order.append(doc_id)

    # entity id -> doc id, including title entities that never reach an abstract sentence
    owner: dict[str, str] = {}
    for match in _TEXT_BLOCK.finditer(entity_file_content):
        for entity_id in _ENTITY_OPEN.findall(match.group(2)):
            owner[entity_id] = match.group(1)

    relations: dict[str, dict[int, list[RelationMention]]] = {d: {} for d in order}
    for line_no, line in enumerate(relation_file_content.splitlines(), start=1):
        if not line.strip():
            continue
        m = _RELATION_LINE.match(line)
        if m is None:
            raise ParseError(f"malformed relation {line.strip()!r}", line=line_no)
        raw_label, first, second, reverse = m.groups()
        label = SEMEVAL_LABELS.get(raw_label)
        if label is None:
            raise ParseError(f"unknown relation label {raw_label!r}", line=line_no)
        for entity_id in (first, second):
            if entity_id not in owner:
                raise ParseError(f"unknown entity id {entity_id!r}", line=line_no)
        doc_id = owner[first]
        if doc_id not in docs:
            report.drop("no_abstract", f"{doc_id}: dropped {label}({first},{second}) at line {line_no}; document has no abstract")
            continue
        head, tail = (second, first) if reverse else (first, second)
        _, _, home = docs[doc_id]
        if head not in home or tail not in home or home[head] != home[tail]:
            report.drop("cross_sentence", f"{doc_id}: dropped cross-sentence relation {label}({head},{tail}) at line {line_no}")
            continue
        relations[doc_id].setdefault(home[head], []).append(
            RelationMention(head, tail, label, Perspective.SEM)
        )

    result = []
    for doc_id in order:
        text, sentences, _ = docs[doc_id]
        with_relations = tuple(
            Sentence(s.tokens, s.entities, tuple(relations[doc_id].get(i, ())))
            for i, s in enumerate(sentences)
        )
        result.append(Document(doc_id, Source.SEMEVAL, text, with_relations))
    report._count(result)
    logger.info("Parsed SemEval: %s", report.as_dict())
    return result, report


def parse_semeval(entity_file_content: str, relation_file_content: str, segmenter: Segmenter | None = None) -> list[Document]:
    return parse_semeval_with_report(entity_file_content, relation_file_content, segmenter)[0]


# --------------------------------------------------------------------------- SciERC


def _iter_json_records(json_content: str) -> list[dict]:
    stripped = json_content.strip()
    if not stripped:
        return []
    if stripped.startswith("["):
        return json.loads(stripped)
    return [json.loads(line) for line in stripped.splitlines() if line.strip()]


def _grid_from_token_lists(token_lists: list[list[str]]) -> tuple[str, list[list[Token]]]:
    """Join pre-tokenized sentences with single spaces and record character offsets."""
    pieces: list[str] = []
    cursor = 0
    grid: list[list[Token]] = []
    for words in token_lists:
        tokens = []
        for i, word in enumerate(words):
            if pieces:
                pieces.append(" ")
                cursor += 1
            tokens.append(Token(i, word, cursor, cursor + len(word)))
            pieces.append(word)
            cursor += len(word)
        grid.append(tokens)
    return "".join(pieces), grid


def parse_scierc_with_report(json_content: str) -> tuple[list[Document], ParseReport]:
    report = ParseReport(Source.SCIERC)
    result = []
    for record in _iter_json_records(json_content):
        doc_id = record.get("doc_key")
        if doc_id is None:
            raise ParseError("record without doc_key")
        token_lists = record.get("sentences", [])
        raw_text, grid = _grid_from_token_lists(token_lists)
        offsets = []
        total = 0
        for words in token_lists:
            offsets.append(total)
            total += len(words)

        ner = record.get("ner", [[] for _ in token_lists])
        rels = record.get("relations", [[] for _ in token_lists])
        sentences = []
        counter = 0
        for si, tokens in enumerate(grid):
            base, n = offsets[si], len(tokens)
            by_span: dict[Span, EntityMention] = {}
            for start, end, label in ner[si] if si < len(ner) else []:
                span = Span(start - base, end - base + 1)
                if not 0 <= span.start < span.end <= n:
                    raise ParseError(f"entity span [{start},{end}] out of range in sentence {si}", document=doc_id)
                if span in by_span:
                    report.warn(f"{doc_id}: duplicate entity span {start}-{end} kept once")
                    continue
                counter += 1
                by_span[span] = EntityMention(f"T{counter}", span, label, Perspective.SCI)
            relations = []
            for s1, e1, s2, e2, label in rels[si] if si < len(rels) else []:
                head_span, tail_span = Span(s1 - base, e1 - base + 1), Span(s2 - base, e2 - base + 1)
                for span in (head_span, tail_span):
                    if not 0 <= span.start < span.end <= n:
                        raise ParseError(f"relation span out of range in sentence {si}", document=doc_id)
                head, tail = by_span.get(head_span), by_span.get(tail_span)
                if head is None or tail is None:
                    raise ParseError(f"relation argument is not an entity in sentence {si}", document=doc_id)
                relations.append(
                    RelationMention(head.id, tail.id, _SCIERC_LABELS.get(label.upper(), label), Perspective.SCI)
                )
            entities = tuple(sorted(by_span.values(), key=lambda e: (e.span.start, e.span.end)))
            sentences.append(Sentence(tuple(tokens), entities, tuple(relations)))
        result.append(Document(doc_id, Source.SCIERC, raw_text, tuple(sentences)))
    report._count(result)
    logger.info("Parsed SciERC: %s", report.as_dict())
    return result, report


def parse_scierc(json_content: str) -> list[Document]:
    return parse_scierc_with_report(json_content)[0]


def load_scierc_partition(directory: str | Path) -> dict[str, set[str]]:
    """Doc ids per official split, read from train.json/dev.json/test.json."""
    directory = Path(directory)
    partition = {}
    for split in ("train", "dev", "test"):
        path = directory / f"{split}.json"
        if path.exists():
            partition[split] = {r["doc_key"] for r in _iter_json_records(path.read_text(encoding="utf-8"))}
    return partition


# --------------------------------------------------------------------------- SciREX


def _abstract_section(words: list[str], sections: list[list[int]]) -> tuple[int, int, int] | None:
    """(section start, section end, first content word) of the section headed 'Abstract'."""
    for start, end in sections:
        head = [w.lower() for w in words[start:min(end, start + 6)]]
        for k, word in enumerate(head):
            if word in _ABSTRACT_HEADING:
                return start, end, start + k + 1
    return None


def parse_scirex_abstracts_with_report(json_content: str) -> tuple[list[Document], ParseReport]:
    report = ParseReport(Source.SCIREX)
    result = []
    for record in _iter_json_records(json_content):
        doc_id = record["doc_id"]
        words = record["words"]
        found = _abstract_section(words, record.get("sections", []))
        if found is None:
            report.warn(f"SciREX document {doc_id} has no abstract section; skipped")
            report.skipped_documents += 1
            continue
        sec_start, sec_end, content_start = found

        token_lists, bounds = [], []
        for s, e in record.get("sentences", []):
            s, e = max(s, content_start), min(e, sec_end)
            if s < e:
                token_lists.append(words[s:e])
                bounds.append((s, e))
        if not token_lists:
            report.warn(f"SciREX document {doc_id} has an empty abstract; skipped")
            report.skipped_documents += 1
            continue
        raw_text, grid = _grid_from_token_lists(token_lists)

        placed: dict[int, list[EntityMention]] = {}
        counter = 0
        seen = set()
        for start, end, label in sorted(record.get("ner", []), key=lambda x: (x[0], x[1])):
            if label not in SCIREX_ENTITY_TYPES:
                continue
            for si, (s, e) in enumerate(bounds):
                if s <= start and end <= e and (si, start, end) not in seen:
                    seen.add((si, start, end))
                    counter += 1
                    placed.setdefault(si, []).append(
                        EntityMention(f"T{counter}", Span(start - s, end - s), label, Perspective.SCI)
                    )
                    break
        sentences = tuple(Sentence(tuple(tokens), tuple(placed.get(i, ()))) for i, tokens in enumerate(grid))
        result.append(Document(doc_id, Source.SCIREX, raw_text, sentences))
    report._count(result)
    logger.info("Parsed SciREX abstracts: %s", report.as_dict())
    return result, report


def parse_scirex_abstracts(json_content: str) -> list[Document]:
    return parse_scirex_abstracts_with_report(json_content)[0]


# --------------------------------------------------------------------------- unified format


class TokenRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str
    start: int = Field(ge=0)
    end: int = Field(ge=0)


class EntityRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str
    start: int = Field(ge=0)
    end: int = Field(ge=0)
    type: str
    perspective: Perspective


class RelationRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    head: str
    tail: str
    type: str
    perspective: Perspective


class SentenceRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    tokens: list[TokenRecord]
    entities: list[EntityRecord] = []
    relations: list[RelationRecord] = []


class SoftLabelRecord(BaseModel):
    """Soft labels persist as parameters only; probabilities are recomputed on load."""

    model_config = ConfigDict(extra="forbid")
    head: str
    kind: Literal["relation", "entity"] = "relation"
    index: int = Field(ge=0)
    agreement: str
    k: int = Field(ge=2)
    target_class: int = Field(ge=0)


class UnifiedRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    doc_id: str
    source: Source
    raw_text: str
    sentences: list[SentenceRecord]
    soft_labels: list[SoftLabelRecord] | None = None


def sentence_to_record(sentence: Sentence) -> SentenceRecord:
    return SentenceRecord(
        tokens=[TokenRecord(text=t.text, start=t.char_start, end=t.char_end) for t in sentence.tokens],
        entities=[
            EntityRecord(id=e.id, start=e.span.start, end=e.span.end, type=e.entity_type, perspective=e.perspective)
            for e in sentence.entities
        ],
        relations=[
            RelationRecord(head=r.head, tail=r.tail, type=r.relation_type, perspective=r.perspective)
            for r in sentence.relations
        ],
    )


def sentence_from_record(record: SentenceRecord) -> Sentence:
    return Sentence(
        tokens=tuple(Token(i, t.text, t.start, t.end) for i, t in enumerate(record.tokens)),
        entities=tuple(EntityMention(e.id, Span(e.start, e.end), e.type, e.perspective) for e in record.entities),
        relations=tuple(RelationMention(r.head, r.tail, r.type, r.perspective) for r in record.relations),
    )


def dump_record(record: BaseModel) -> str:
    """Byte-stable JSON line: sorted keys, no optional nulls, UTF-8 text kept verbatim."""
    return json.dumps(record.model_dump(mode="json", exclude_none=True), sort_keys=True, ensure_ascii=False)


def write_unified(docs: list[Document]) -> str:
    lines = [
        dump_record(
            UnifiedRecord(
                doc_id=d.doc_id,
                source=d.source,
                raw_text=d.raw_text,
                sentences=[sentence_to_record(s) for s in d.sentences],
            )
        )
        for d in docs
    ]
    return "".join(line + "\n" for line in lines)


def read_unified(content: str) -> list[Document]:
    docs = []
    for index, line in enumerate(l for l in content.splitlines() if l.strip()):
        try:
            record = UnifiedRecord.model_validate_json(line)
        except ValidationError as e:
            raise RecordError(str(e).splitlines()[0] + ": " + "; ".join(err["msg"] for err in e.errors()), index=index) from e
        docs.append(
            Document(
                doc_id=record.doc_id,
                source=record.source,
                raw_text=record.raw_text,
                sentences=tuple(sentence_from_record(s) for s in record.sentences),
            )
        )
    return docs


def write_unified_file(path: str | Path, docs: list[Document]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_unified(docs), encoding="utf-8")


def read_unified_file(path: str | Path) -> list[Document]:
    return read_unified(Path(path).read_text(encoding="utf-8"))

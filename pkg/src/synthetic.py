"""
Small synthetic SemEval-2018 / SciERC / SciREX releases with controlled overlap, built from a fixed
set of annotated sentence templates. Every scenario can run end to end on them.
"""
from __future__ import annotations

import html
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from src.config import DataPaths
from src.corpus import Agreement

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Template:
    name: str
    tokens: tuple[str, ...]
    sci_entities: tuple[tuple[int, int, str], ...]  # [start, end) and SciERC type
    sem_entities: tuple[tuple[int, int], ...]
    sci_relations: tuple[tuple[int, int, str], ...] = ()  # entity indexes and SciERC label
    sem_relations: tuple[tuple[int, int, str], ...] = ()  # entity indexes and SemEval release tag
    expected: tuple[Agreement, ...] = ()


TEMPLATES: dict[str, Template] = {
    t.name: t
    for t in (
        Template(
            "overlapped",
            tuple("We use a parser for machine translation .".split()),
            ((3, 4, "Method"), (5, 7, "Task")),
            ((3, 4), (5, 7)),
            ((0, 1, "Used-for"),),
            ((0, 1, "USAGE"),),
            (Agreement.HIGH,),
        ),
        Template(
            "conflicted",
            tuple("The model captures lexical features of words .".split()),
            ((1, 2, "Method"), (3, 5, "OtherScientificTerm")),
            ((1, 2), (3, 5)),
            ((1, 0, "Used-for"),),
            ((1, 0, "MODEL-FEATURE"),),
            (Agreement.LOW,),
        ),
        Template(
            "partial",
            tuple("We present a system for categorizing unknown words on the corpus .".split()),
            ((3, 8, "Method"), (10, 11, "Material")),
            ((3, 4), (10, 11)),
            ((1, 0, "Used-for"),),
            (),
            (Agreement.MEDIUM,),
        ),
        Template(
            "one_sided",
            tuple("Experiments on the benchmark show gains in accuracy .".split()),
            ((7, 8, "Metric"),),
            ((3, 4), (7, 8)),
            (),
            ((0, 1, "RESULT"),),
            (Agreement.MEDIUM,),
        ),
        Template(
            "compare",
            tuple("Our method outperforms the baseline system .".split()),
            ((1, 2, "Method"), (4, 6, "Method")),
            ((1, 2), (4, 6)),
            ((0, 1, "Compare"),),
            ((0, 1, "COMPARE"),),
            (Agreement.HIGH,),
        ),
        Template(
            "part",
            tuple("The encoder is a component of the network .".split()),
            ((1, 2, "Method"), (7, 8, "Method")),
            ((1, 2), (7, 8)),
            ((0, 1, "Part-of"),),
            ((0, 1, "PART_WHOLE"),),
            (Agreement.HIGH,),
        ),
        Template(
            "evaluate",
            tuple("We evaluate the tagger with F1 score .".split()),
            ((3, 4, "Method"), (5, 7, "Metric")),
            ((3, 4), (5, 7)),
            ((1, 0, "Evaluate-for"),),
            ((1, 0, "RESULT"),),
            (Agreement.HIGH,),
        ),
    )
}

AGREEMENT_LAYOUT = ["overlapped", "conflicted", "partial", "one_sided"]


def _intro(tag: str, i: int) -> Template:
    return Template("intro", ("This", tag, str(i), "describes", "our", "work", "."), (), ())


def _render(sentences: list[tuple[str, ...]]) -> tuple[str, list[list[tuple[int, int]]]]:
    """Running text with no space before punctuation, and per-token character offsets."""
    text = ""
    offsets = []
    for tokens in sentences:
        sentence_offsets = []
        for token in tokens:
            if text and not (token in {".", ","}):
                text += " "
            sentence_offsets.append((len(text), len(text) + len(token)))
            text += token
        offsets.append(sentence_offsets)
    return text, offsets


@dataclass
class SyntheticDocument:
    doc_id: str
    sentences: list[Template]


def _semeval_block(doc: SyntheticDocument) -> tuple[str, list[str]]:
    text, offsets = _render([t.tokens for t in doc.sentences])
    events: list[tuple[int, int, str]] = []
    relation_lines = []
    counter = 0
    for si, template in enumerate(doc.sentences):
        ids = []
        for start, end in template.sem_entities:
            counter += 1
            entity_id = f"{doc.doc_id}.{counter}"
            ids.append((entity_id, start))
            events.append((offsets[si][start][0], 1, f'<entity id="{entity_id}">'))
            events.append((offsets[si][end - 1][1], 0, "</entity>"))
        for h, t, tag in template.sem_relations:
            (head_id, head_pos), (tail_id, tail_pos) = ids[h], ids[t]
            if head_pos <= tail_pos:
                relation_lines.append(f"{tag}({head_id},{tail_id})")
            else:
                relation_lines.append(f"{tag}({tail_id},{head_id},REVERSE)")
    marked, cursor = [], 0
    for position, _, tag in sorted(events):
        marked.append(html.escape(text[cursor:position], quote=False))
        marked.append(tag)
        cursor = position
    marked.append(html.escape(text[cursor:], quote=False))
    block = (
        f'<text id="{doc.doc_id}">\n<title>Synthetic abstract {doc.doc_id}</title>\n'
        f"<abstract>\n{''.join(marked)}\n</abstract>\n</text>"
    )
    return block, relation_lines


def _scierc_record(doc: SyntheticDocument) -> dict:
    sentences, ner, relations = [], [], []
    base = 0
    for template in doc.sentences:
        sentences.append(list(template.tokens))
        ner.append([[base + s, base + e - 1, label] for s, e, label in template.sci_entities])
        rels = []
        for h, t, label in template.sci_relations:
            hs, he, _ = template.sci_entities[h]
            ts, te, _ = template.sci_entities[t]
            rels.append([base + hs, base + he - 1, base + ts, base + te - 1, label.upper()])
        relations.append(rels)
        base += len(template.tokens)
    return {"doc_key": doc.doc_id, "sentences": sentences, "ner": ner, "relations": relations, "clusters": []}


def _scirex_record(doc: SyntheticDocument, with_abstract: bool = True) -> dict:
    words = ["Synthetic", "paper", doc.doc_id]
    sections = []
    sentence_bounds = [[0, 3]]
    ner = []
    title_end = len(words)
    sections.append([0, title_end])
    if with_abstract:
        heading = ["section", ":", "Abstract"]
        words += heading
        sentence_bounds.append([title_end, len(words)])
        for template in doc.sentences:
            start = len(words)
            words += list(template.tokens)
            sentence_bounds.append([start, len(words)])
            ner += [[start + s, start + e, label] for s, e, label in template.sci_entities]
        sections.append([title_end, len(words)])
    body_start = len(words)
    body = ["section", ":", "Introduction", "A", "parser", "is", "introduced", "here", "."]
    words += body
    sentence_bounds.append([body_start, len(words)])
    ner.append([body_start + 4, body_start + 5, "Method"])
    sections.append([body_start, len(words)])
    return {"doc_id": doc.doc_id, "words": words, "sections": sections, "sentences": sentence_bounds, "ner": ner}


@dataclass
class SyntheticCorpus:
    overlapped: list[tuple[SyntheticDocument, SyntheticDocument]] = field(default_factory=list)
    sem_only: list[SyntheticDocument] = field(default_factory=list)
    sci_only: list[SyntheticDocument] = field(default_factory=list)
    scirex: list[SyntheticDocument] = field(default_factory=list)
    scirex_without_abstract: int = 0

    def semeval_files(self) -> tuple[str, str]:
        blocks, lines = [], []
        for doc in [sem for sem, _ in self.overlapped] + self.sem_only:
            block, relation_lines = _semeval_block(doc)
            blocks.append(block)
            lines += relation_lines
        xml = '<?xml version="1.0" encoding="UTF-8"?>\n<doc>\n' + "\n".join(blocks) + "\n</doc>\n"
        return xml, "".join(line + "\n" for line in lines)

    def scierc_splits(self) -> dict[str, str]:
        splits: dict[str, list[dict]] = {"train": [], "dev": [], "test": []}
        for i, doc in enumerate([sci for _, sci in self.overlapped] + self.sci_only):
            split = "test" if i % 4 == 3 else "dev" if i % 8 == 1 else "train"
            splits[split].append(_scierc_record(doc))
        return {k: "".join(json.dumps(r) + "\n" for r in v) for k, v in splits.items()}

    def scirex_file(self) -> str:
        records = [_scirex_record(d) for d in self.scirex]
        records += [
            _scirex_record(SyntheticDocument(f"SYN-X-NOABS{i}", []), with_abstract=False)
            for i in range(self.scirex_without_abstract)
        ]
        return "".join(json.dumps(r) + "\n" for r in records)

    def write(self, root: str | Path) -> DataPaths:
        """Write the releases under root in the default DataPaths layout and return the paths.

        Every SciREX document goes to the last SciREX file; the others are written empty.
        """
        paths = DataPaths(root=Path(root))
        xml, relations = self.semeval_files()
        targets = {paths.semeval_text: xml, paths.semeval_relations: relations}
        for name in paths.scirex_files:
            targets[name] = ""
        targets[paths.scirex_files[-1]] = self.scirex_file()
        for split, content in self.scierc_splits().items():
            targets[f"{paths.scierc_dir}/{split}.json"] = content
        for relative, content in targets.items():
            path = paths.resolve(relative)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        logger.info(
            "Wrote synthetic corpora to %s (%d overlapped, %d SemEval-only, %d SciERC-only, %d SciREX)",
            root, len(self.overlapped), len(self.sem_only), len(self.sci_only), len(self.scirex),
        )
        return paths


def generate(
    n_overlap: int = 6,
    n_sem_only: int = 2,
    n_sci_only: int = 2,
    n_scirex: int = 3,
    seed: int = 0,
    sentences_per_doc: tuple[int, int] = (2, 3),
    layout: list[list[str]] | None = None,
    scirex_without_abstract: int = 0,
) -> SyntheticCorpus:
    """Random template layouts per document; `layout` fixes the templates of the overlapped documents."""
    rng = random.Random(seed)
    names = sorted(TEMPLATES)

    def pick() -> list[Template]:
        return [TEMPLATES[rng.choice(names)] for _ in range(rng.randint(*sentences_per_doc))]

    corpus = SyntheticCorpus(scirex_without_abstract=scirex_without_abstract)
    for i in range(n_overlap):
        body = [TEMPLATES[n] for n in layout[i % len(layout)]] if layout else pick()
        sentences = [_intro("abstract", i)] + body
        corpus.overlapped.append(
            (SyntheticDocument(f"SYN-S{i:03d}", sentences), SyntheticDocument(f"SYN-C{i:03d}", sentences))
        )
    corpus.sem_only = [SyntheticDocument(f"SYN-SO{i:03d}", [_intro("study", i)] + pick()) for i in range(n_sem_only)]
    corpus.sci_only = [SyntheticDocument(f"SYN-CO{i:03d}", [_intro("report", i)] + pick()) for i in range(n_sci_only)]
    corpus.scirex = [SyntheticDocument(f"SYN-X{i:03d}", [_intro("paper", i)] + pick()) for i in range(n_scirex)]
    return corpus


def write_synthetic(root: str | Path, **options) -> DataPaths:
    return generate(**options).write(root)

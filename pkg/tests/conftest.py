"""Shared fixtures: synthetic corpora with known agreement structure and small models."""
import pytest
import torch

from src.alignment import align_corpora
from src.config import ModelConfig
from src.corpus import Agreement, Document, EntityMention, Perspective, RelationMention, Sentence, Source, Span, Token
from src.format_io import parse_scierc, parse_scirex_abstracts, parse_semeval
from src.synthetic import AGREEMENT_LAYOUT, generate


def parse_generated(corpus) -> tuple[list[Document], list[Document]]:
    xml, relations = corpus.semeval_files()
    sem = parse_semeval(xml, relations)
    sci = parse_scierc("".join(corpus.scierc_splits().values()))
    return sem, sci


def make_sentence(words: list[str], entities=(), relations=(), perspective=Perspective.SCI) -> Sentence:
    """entities: (id, start, end, type); relations: (head id, tail id, label)."""
    tokens, cursor = [], 0
    for i, w in enumerate(words):
        tokens.append(Token(i, w, cursor, cursor + len(w)))
        cursor += len(w) + 1
    return Sentence(
        tuple(tokens),
        tuple(EntityMention(eid, Span(s, e), t, perspective) for eid, s, e, t in entities),
        tuple(RelationMention(h, t, label, perspective) for h, t, label in relations),
    )


def make_document(doc_id: str, sentences: list[Sentence], source=Source.SCIERC) -> Document:
    text = " ".join(" ".join(s.words) for s in sentences)
    offset, shifted = 0, []
    for s in sentences:
        tokens = tuple(Token(t.index, t.text, t.char_start + offset, t.char_end + offset) for t in s.tokens)
        shifted.append(Sentence(tokens, s.entities, s.relations))
        offset = tokens[-1].char_end + 1 if tokens else offset
    return Document(doc_id, source, text, tuple(shifted))


@pytest.fixture
def agreement_corpus():
    """One overlapped abstract: an intro sentence, then the four agreement cases in order."""
    return generate(n_overlap=1, n_sem_only=0, n_sci_only=0, n_scirex=0, layout=[AGREEMENT_LAYOUT])


@pytest.fixture
def agreement_pair(agreement_corpus):
    sem, sci = parse_generated(agreement_corpus)
    result = align_corpora(sem, sci)
    assert len(result.aligned) == 1
    return result.aligned[0]


AGREEMENT_EXPECTED = {1: [Agreement.HIGH], 2: [Agreement.LOW], 3: [Agreement.MEDIUM], 4: [Agreement.MEDIUM]}


@pytest.fixture
def synthetic_overlap():
    corpus = generate(n_overlap=8, n_sem_only=3, n_sci_only=3, n_scirex=2, seed=3)
    sem, sci = parse_generated(corpus)
    return align_corpora(sem, sci)


@pytest.fixture
def synthetic_scirex():
    corpus = generate(n_overlap=0, n_sem_only=0, n_sci_only=0, n_scirex=2, seed=1, scirex_without_abstract=1)
    return parse_scirex_abstracts(corpus.scirex_file())


@pytest.fixture
def synthetic_root(tmp_path):
    corpus = generate(n_overlap=6, n_sem_only=3, n_sci_only=3, n_scirex=2, seed=5)
    return corpus.write(tmp_path / "data")


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(
        encoder="tiny",
        dim=16,
        layers=1,
        heads=2,
        width_dim=4,
        max_width=4,
        neg_entities=6,
        neg_relations=6,
        dropout=0.0,
        epochs=2,
        batch_size=2,
        lr=1e-3,
        device="cpu",
    )


@pytest.fixture(autouse=True)
def _deterministic_torch():
    torch.manual_seed(0)
    yield

"""Tokenization and sentence segmentation over raw abstract text (character offsets preserved)."""
from __future__ import annotations

import logging
import re
from functools import lru_cache
from typing import Protocol

import spacy
from spacy.language import Language

logger = logging.getLogger(__name__)

TOKEN_PATTERN = re.compile(r"\w+(?:[-'’.]\w+)*|[^\w\s]")
DEFAULT_SEGMENTER = "spacy"


def tokenize(text: str, offset: int = 0) -> list[tuple[str, int, int]]:
    """Whitespace-plus-punctuation tokenizer; returns (text, char_start, char_end) with absolute offsets."""
    return [(m.group(), m.start() + offset, m.end() + offset) for m in TOKEN_PATTERN.finditer(text)]


class Segmenter(Protocol):
    def segment(self, text: str) -> list[tuple[int, int]]:
        """Return sentence character ranges covering the non-space content of text."""
        ...


@lru_cache(maxsize=4)
def _pipeline(model: str | None) -> Language:
    if model:
        return spacy.load(model, disable=["ner", "lemmatizer"])
    nlp = spacy.blank("en")
    nlp.add_pipe("sentencizer")
    return nlp


class SpacySegmenter:
    """spaCy sentence splitter: a blank English pipeline with the sentencizer unless a model is named."""

    def __init__(self, model: str | None = None):
        self.model = model
        self._nlp = _pipeline(model)

    def segment(self, text: str) -> list[tuple[int, int]]:
        doc = self._nlp(text)
        ranges = [_trim(text, s.start_char, s.end_char) for s in doc.sents]
        return [r for r in ranges if r[0] < r[1]]


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def get_segmenter(name: str = DEFAULT_SEGMENTER) -> Segmenter:
    """'spacy' for the sentencizer, 'spacy:<model>' for a trained pipeline's parser."""
    kind, _, model = name.partition(":")
    if kind != "spacy":
        raise ValueError(f"Unknown segmenter: {name}")
    return SpacySegmenter(model or None)


def merge_ranges_over_spans(
    ranges: list[tuple[int, int]], protected: list[tuple[int, int]]
) -> list[tuple[int, int]]:
    """Merge adjacent sentence ranges whenever a boundary falls inside a protected character span."""
    merged: list[tuple[int, int]] = []
    for start, end in ranges:
        if merged and any(s < merged[-1][1] < e or s < start < e for s, e in protected):
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    if len(merged) < len(ranges):
        logger.debug("Merged %d sentence boundaries that split an entity", len(ranges) - len(merged))
    return merged

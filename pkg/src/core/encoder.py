"""
Sentence encoders behind one contract: a batch of token lists in, per-token vectors, a padding
mask and one context vector per sentence out.
"""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass

import torch
from torch import nn

logger = logging.getLogger(__name__)

DEFAULT_PRETRAINED = "allenai/scibert_scivocab_cased"


@dataclass
class EncodedBatch:
    tokens: torch.Tensor  # (B, T, d)
    mask: torch.Tensor  # (B, T) True on real tokens
    context: torch.Tensor  # (B, d)


class SentenceEncoder(nn.Module):
    """Base class; subclasses set `dim`, `identifier` and `trainable` and implement forward."""

    dim: int
    identifier: str
    trainable: bool = True

    def forward(self, batch: list[list[str]]) -> EncodedBatch:  # pragma: no cover
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": "base", "identifier": self.identifier, "dim": self.dim}


class TinyEncoder(SentenceEncoder):
    """Hashed word embeddings, learned positions and a small transformer stack; desk-scale only."""

    def __init__(
        self,
        dim: int = 32,
        layers: int = 1,
        heads: int = 2,
        buckets: int = 1 << 14,
        max_length: int = 512,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.dim = dim
        self.layers = layers
        self.heads = heads
        self.buckets = buckets
        self.max_length = max_length
        self.dropout = dropout
        self.identifier = f"tiny-d{dim}-l{layers}"
        self.word_embeddings = nn.Embedding(buckets, dim, padding_idx=0)
        self.position_embeddings = nn.Embedding(max_length, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=heads,
            dim_feedforward=2 * dim,
            dropout=dropout,
            activation="gelu",
            batch_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=layers, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)

    def token_id(self, word: str) -> int:
        return zlib.crc32(word.encode("utf-8")) % (self.buckets - 1) + 1

    def forward(self, batch: list[list[str]]) -> EncodedBatch:
        device = self.word_embeddings.weight.device
        length = max(len(words) for words in batch)
        if length > self.max_length:
            raise ValueError(f"sentence of {length} tokens exceeds max_length {self.max_length}")
        ids = torch.zeros(len(batch), length, dtype=torch.long, device=device)
        for b, words in enumerate(batch):
            ids[b, : len(words)] = torch.tensor([self.token_id(w) for w in words], dtype=torch.long)
        mask = ids != 0
        positions = torch.arange(length, device=device).unsqueeze(0)
        x = self.word_embeddings(ids) + self.position_embeddings(positions)
        x = self.transformer(x, src_key_padding_mask=~mask)
        x = self.norm(x) * mask.unsqueeze(-1)
        context = x.sum(1) / mask.sum(1, keepdim=True).clamp(min=1)
        return EncodedBatch(x, mask, context)

    def describe(self) -> dict:
        return {
            "kind": "tiny",
            "identifier": self.identifier,
            "dim": self.dim,
            "layers": self.layers,
            "heads": self.heads,
            "buckets": self.buckets,
            "max_length": self.max_length,
            "dropout": self.dropout,
        }


class PretrainedEncoder(SentenceEncoder):
    """A transformers encoder pooled to words by their first sub-token; [CLS] is the context vector."""

    def __init__(self, name: str = DEFAULT_PRETRAINED, trainable: bool = True, max_length: int = 512):
        super().__init__()
        from transformers import AutoModel, AutoTokenizer

        self.identifier = name
        self.trainable = trainable
        self.max_length = max_length
        self.tokenizer = AutoTokenizer.from_pretrained(name)
        self.model = AutoModel.from_pretrained(name)
        self.dim = self.model.config.hidden_size
        if not trainable:
            for p in self.model.parameters():
                p.requires_grad_(False)
        logger.info("Loaded pretrained encoder %s (d=%d, trainable=%s)", name, self.dim, trainable)

    def forward(self, batch: list[list[str]]) -> EncodedBatch:
        device = next(self.model.parameters()).device
        encoded = self.tokenizer(
            batch,
            is_split_into_words=True,
            truncation=True,
            max_length=self.max_length,
            padding=True,
            return_tensors="pt",
        )
        hidden = self.model(
            input_ids=encoded["input_ids"].to(device),
            attention_mask=encoded["attention_mask"].to(device),
        ).last_hidden_state

        length = max(len(words) for words in batch)
        index = torch.zeros(len(batch), length, dtype=torch.long, device=device)
        mask = torch.zeros(len(batch), length, dtype=torch.bool, device=device)
        for b in range(len(batch)):
            seen = set()
            for position, word in enumerate(encoded.word_ids(b)):
                if word is not None and word not in seen:
                    seen.add(word)
                    index[b, word] = position
                    mask[b, word] = True
            if len(seen) < len(batch[b]):
                logger.warning("Sentence truncated to %d of %d words by the sub-word limit", len(seen), len(batch[b]))
        tokens = torch.gather(hidden, 1, index.unsqueeze(-1).expand(-1, -1, hidden.size(-1)))
        tokens = tokens * mask.unsqueeze(-1)
        return EncodedBatch(tokens, mask, hidden[:, 0])

    def describe(self) -> dict:
        return {
            "kind": "pretrained",
            "identifier": self.identifier,
            "dim": self.dim,
            "trainable": self.trainable,
            "max_length": self.max_length,
        }


def build_encoder(kind: str = "tiny", **options) -> SentenceEncoder:
    if kind == "tiny":
        options = {k: v for k, v in options.items() if k in {"dim", "layers", "heads", "buckets", "max_length", "dropout"}}
        return TinyEncoder(**options)
    if kind == "pretrained":
        return PretrainedEncoder(
            name=options.get("identifier") or options.get("name") or DEFAULT_PRETRAINED,
            trainable=options.get("trainable", True),
            max_length=options.get("max_length", 512),
        )
    raise ValueError(f"Unknown encoder kind: {kind}")

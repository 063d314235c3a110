"""
Span-based joint entity/relation extractor with one entity head, one relation head and one
normalized auxiliary relation output per annotation perspective, all over a shared encoder.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import torch
from torch import nn

from src.corpus import EntityMention, Head, LabelSchema, RelationMention, Sentence, Span
from src.core.encoder import EncodedBatch, SentenceEncoder
from src.core.sampling import Candidates, enumerate_spans
from src.softlabel import EPS

logger = logging.getLogger(__name__)


@dataclass
class HeadOutputs:
    """One head's outputs and targets over a whole batch (candidates concatenated)."""

    entity_logits: torch.Tensor  # (N, C+1)
    entity_labels: torch.Tensor  # (N,)
    relation_logits: torch.Tensor  # (M, R)
    relation_labels: torch.Tensor  # (M, R)
    soft_logits: torch.Tensor  # (S, R) auxiliary output for soft-labeled relations
    soft_targets: torch.Tensor  # (S, R)
    entity_soft_logits: torch.Tensor  # (S_e, C+1)
    entity_soft_targets: torch.Tensor  # (S_e, C+1)


class JointExtractor(nn.Module):
    def __init__(
        self,
        encoder: SentenceEncoder,
        schemas: Mapping[Head, LabelSchema],
        max_width: int = 10,
        width_dim: int = 25,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.encoder = encoder
        self.schemas = dict(schemas)
        self.max_width = max_width
        self.width_dim = width_dim
        d = encoder.dim
        self.span_dim = 2 * d + width_dim
        self.pair_dim = 2 * self.span_dim + d
        self.width_embedding = nn.Embedding(max_width + 1, width_dim)
        self.dropout = nn.Dropout(dropout)
        self.entity_classifiers = nn.ModuleDict(
            {h.value: nn.Linear(self.span_dim, len(s.entity_types) + 1) for h, s in self.schemas.items()}
        )
        self.relation_classifiers = nn.ModuleDict(
            {h.value: nn.Linear(self.pair_dim, len(s.relation_types)) for h, s in self.schemas.items()}
        )
        self.soft_classifiers = nn.ModuleDict(
            {h.value: nn.Linear(self.pair_dim, len(s.relation_types)) for h, s in self.schemas.items()}
        )

    @property
    def heads(self) -> list[Head]:
        return sorted(self.schemas, key=lambda h: h.value)

    def encode(self, sentences: list[Sentence]) -> EncodedBatch:
        return self.encoder([s.words for s in sentences])

    # ------------------------------------------------------------------ representations

    def span_representations(self, tokens: torch.Tensor, context: torch.Tensor, spans: list[Span]) -> torch.Tensor:
        """max-pool(span tokens) ‖ width embedding ‖ sentence context, for one sentence."""
        if not spans:
            return tokens.new_zeros(0, self.span_dim)
        length = tokens.size(0)
        positions = torch.arange(length, device=tokens.device)
        starts = torch.tensor([s.start for s in spans], device=tokens.device)
        ends = torch.tensor([s.end for s in spans], device=tokens.device)
        inside = (positions.unsqueeze(0) >= starts.unsqueeze(1)) & (positions.unsqueeze(0) < ends.unsqueeze(1))
        pooled = tokens.unsqueeze(0).masked_fill(~inside.unsqueeze(-1), float("-inf")).max(1).values
        widths = (ends - starts).clamp(max=self.max_width)
        return torch.cat(
            [pooled, self.width_embedding(widths), context.unsqueeze(0).expand(len(spans), -1)], dim=-1
        )

    def pair_representations(
        self, tokens: torch.Tensor, span_reps: torch.Tensor, spans: list[Span], pairs: list[tuple[int, int]]
    ) -> torch.Tensor:
        """head ‖ tail ‖ max-pool of the tokens strictly between them (zeros when adjacent or overlapping)."""
        if not pairs:
            return tokens.new_zeros(0, self.pair_dim)
        between = []
        for i, j in pairs:
            a, b = spans[i], spans[j]
            lo, hi = min(a.end, b.end), max(a.start, b.start)
            if lo < hi:
                between.append(tokens[lo:hi].max(0).values)
            else:
                between.append(tokens.new_zeros(tokens.size(-1)))
        heads = span_reps[[i for i, _ in pairs]]
        tails = span_reps[[j for _, j in pairs]]
        return torch.cat([heads, tails, torch.stack(between)], dim=-1)

    # ------------------------------------------------------------------ training forward

    def forward(self, sentences: list[Sentence], candidates: list[Mapping[Head, Candidates]]) -> dict[Head, HeadOutputs]:
        encoded = self.encode(sentences)
        parts: dict[Head, dict[str, list[torch.Tensor]]] = {}
        for b, per_head in enumerate(candidates):
            length = len(sentences[b])
            tokens = encoded.tokens[b, :length]
            context = encoded.context[b]
            for head, c in per_head.items():
                acc = parts.setdefault(head, {k: [] for k in HeadOutputs.__dataclass_fields__})
                span_reps = self.span_representations(tokens, context, c.spans)
                pair_reps = self.pair_representations(tokens, span_reps, c.spans, c.pairs)
                entity_logits = self.entity_classifiers[head.value](self.dropout(span_reps))
                acc["entity_logits"].append(entity_logits)
                acc["entity_labels"].append(torch.tensor(c.span_labels, dtype=torch.long, device=tokens.device))
                acc["relation_logits"].append(self.relation_classifiers[head.value](self.dropout(pair_reps)))
                acc["relation_labels"].append(
                    torch.tensor(c.pair_labels, dtype=tokens.dtype, device=tokens.device).reshape(
                        len(c.pairs), len(self.schemas[head].relation_types)
                    )
                )
                if c.relation_soft:
                    picked = pair_reps[[i for i, _ in c.relation_soft]]
                    acc["soft_logits"].append(self.soft_classifiers[head.value](self.dropout(picked)))
                    acc["soft_targets"].append(
                        torch.tensor([s.probs for _, s in c.relation_soft], dtype=tokens.dtype, device=tokens.device)
                    )
                if c.entity_soft:
                    acc["entity_soft_logits"].append(entity_logits[[i for i, _ in c.entity_soft]])
                    acc["entity_soft_targets"].append(
                        torch.tensor([s.probs for _, s in c.entity_soft], dtype=tokens.dtype, device=tokens.device)
                    )
        return {head: self._collate(head, acc, encoded.tokens) for head, acc in parts.items()}

    def _collate(self, head: Head, acc: dict[str, list[torch.Tensor]], ref: torch.Tensor) -> HeadOutputs:
        schema = self.schemas[head]
        widths = {
            "entity_logits": len(schema.entity_types) + 1,
            "entity_soft_logits": len(schema.entity_types) + 1,
            "entity_soft_targets": len(schema.entity_types) + 1,
            "relation_logits": len(schema.relation_types),
            "relation_labels": len(schema.relation_types),
            "soft_logits": len(schema.relation_types),
            "soft_targets": len(schema.relation_types),
        }
        out = {}
        for name, tensors in acc.items():
            if tensors:
                out[name] = torch.cat(tensors)
            elif name == "entity_labels":
                out[name] = torch.zeros(0, dtype=torch.long, device=ref.device)
            else:
                out[name] = ref.new_zeros(0, widths[name])
        return HeadOutputs(**out)

    # ------------------------------------------------------------------ inference

    @torch.no_grad()
    def predict(
        self, sentences: list[Sentence], head: Head, threshold: float = 0.4
    ) -> list[tuple[list[EntityMention], list[RelationMention]]]:
        """Entities are spans whose argmax class is not NONE; relations are ordered pairs of
        non-overlapping predicted entities whose per-class score exceeds `threshold`."""
        was_training = self.training
        self.eval()
        schema = self.schemas[head]
        encoded = self.encode(sentences)
        results = []
        for b, sentence in enumerate(sentences):
            tokens = encoded.tokens[b, : len(sentence)]
            spans = enumerate_spans(sentence, self.max_width)
            span_reps = self.span_representations(tokens, encoded.context[b], spans)
            probs = torch.softmax(self.entity_classifiers[head.value](span_reps).double(), dim=-1)
            scores, labels = probs.max(-1)
            kept = [i for i in range(len(spans)) if labels[i].item() != 0]
            entities = [
                EntityMention(f"P{n}", spans[i], schema.entity_types[labels[i].item() - 1], head.perspective)
                for n, i in enumerate(kept)
            ]
            pairs = [
                (kept[x], kept[y])
                for x in range(len(kept))
                for y in range(len(kept))
                if x != y and spans[kept[x]].overlap(spans[kept[y]]) == 0
            ]
            relations = []
            if pairs:
                pair_reps = self.pair_representations(tokens, span_reps, spans, pairs)
                rel_scores = torch.sigmoid(self.relation_classifiers[head.value](pair_reps).double()).clamp(max=1 - EPS)
                position = {i: n for n, i in enumerate(kept)}
                for p, (i, j) in enumerate(pairs):
                    for k, label in enumerate(schema.relation_types):
                        if rel_scores[p, k].item() > threshold:
                            relations.append(
                                RelationMention(f"P{position[i]}", f"P{position[j]}", label, head.perspective)
                            )
            results.append((entities, relations))
        self.train(was_training)
        return results

    def describe(self) -> dict:
        return {
            "encoder": self.encoder.describe(),
            "max_width": self.max_width,
            "width_dim": self.width_dim,
            "dropout": self.dropout.p,
            "schemas": {
                h.value: {"entity_types": list(s.entity_types), "relation_types": list(s.relation_types)}
                for h, s in sorted(self.schemas.items(), key=lambda kv: kv[0].value)
            },
        }

"""Single-perspective, multi-perspective and soft-label losses over HeadOutputs."""
from __future__ import annotations

import math
from typing import Mapping

import torch
from torch import nn
from torch.nn import functional as F

from src.corpus import Head
from src.core.model import HeadOutputs
from src.errors import DimensionMismatchError
from src.softlabel import EPS, Divergence

LOG_EPS = math.log(EPS)


def loss_single(out: HeadOutputs) -> torch.Tensor:
    """Mean span cross-entropy plus per-candidate relation BCE (summed over classes, averaged over candidates)."""
    total = out.entity_logits.new_zeros(())
    if out.entity_logits.size(0):
        total = total + F.cross_entropy(out.entity_logits, out.entity_labels)
    if out.relation_logits.size(0):
        bce = F.binary_cross_entropy_with_logits(out.relation_logits, out.relation_labels, reduction="none")
        total = total + bce.sum(-1).mean()
    return total


def loss_multi(outputs: Mapping[Head, HeadOutputs]) -> torch.Tensor:
    terms = [loss_single(out) for _, out in sorted(outputs.items(), key=lambda kv: kv[0].value)]
    if not terms:
        raise ValueError("no head produced outputs")
    return torch.stack(terms).sum()


def soft_divergence(logits: torch.Tensor, targets: torch.Tensor, divergence: Divergence) -> torch.Tensor:
    """Per-item divergence between soft targets P and the head's distribution Q."""
    if logits.size(-1) != targets.size(-1):
        raise DimensionMismatchError(f"soft label has {targets.size(-1)} classes, head emits {logits.size(-1)}")
    divergence = Divergence(divergence)
    if divergence is Divergence.BCE:
        return F.binary_cross_entropy_with_logits(logits, targets, reduction="none").mean(-1)
    log_q = F.log_softmax(logits, dim=-1).clamp(min=LOG_EPS)
    log_p = torch.log(targets.clamp(min=EPS))
    if divergence is Divergence.KL_STANDARD:
        return (targets * (log_p - log_q)).sum(-1)
    if divergence is Divergence.KL_INVERSE:
        return (log_q.exp() * (log_q - log_p)).sum(-1)
    return -(targets * log_q).sum(-1)


def loss_soft(outputs: Mapping[Head, HeadOutputs], divergence: Divergence = Divergence.KL_STANDARD) -> torch.Tensor:
    """Sum over heads of the mean divergence over that head's soft-labeled items."""
    total = None
    for _, out in sorted(outputs.items(), key=lambda kv: kv[0].value):
        for logits, targets in ((out.soft_logits, out.soft_targets), (out.entity_soft_logits, out.entity_soft_targets)):
            if targets.size(0) == 0:
                continue
            term = soft_divergence(logits, targets, divergence).mean()
            total = term if total is None else total + term
    if total is None:
        ref = next(iter(outputs.values())).entity_logits
        return ref.new_zeros(())
    return total


class MultiPerspectiveLoss(nn.Module):
    """L_multi, plus L_soft when a divergence is configured.

    forward returns (total, multi, soft); soft is a zero tensor when disabled.
    """

    def __init__(self, divergence: Divergence | None = None) -> None:
        super().__init__()
        self.divergence = Divergence(divergence) if divergence else None

    def forward(self, outputs: Mapping[Head, HeadOutputs]) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        multi = loss_multi(outputs)
        if self.divergence is None:
            soft = multi.new_zeros(())
        else:
            soft = loss_soft(outputs, self.divergence)
        return multi + soft, multi, soft


__all__ = ["loss_single", "loss_multi", "loss_soft", "soft_divergence", "MultiPerspectiveLoss"]

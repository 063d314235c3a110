"""
Agreement-graded soft labels and the divergences used by the auxiliary soft loss.

Everything here is pure numpy in float64; the torch losses in src.core.losses mirror these
definitions and are tested against them.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.corpus import Agreement
from src.errors import DimensionMismatchError

EPS = 1e-12

TARGET_MASS = {
    Agreement.HIGH: 0.9,
    Agreement.MEDIUM: 0.8,
    Agreement.LOW: 0.6,
}


class Divergence(str, Enum):
    KL_STANDARD = "KL_STANDARD"
    KL_INVERSE = "KL_INVERSE"
    CE = "CE"
    BCE = "BCE"


@dataclass(frozen=True)
class SoftLabel:
    probs: tuple[float, ...]
    agreement: Agreement
    target_class: int

    @property
    def k(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


@dataclass(frozen=True)
class PredictionDistribution:
    probs: tuple[float, ...]

    @classmethod
    def from_logits(cls, logits) -> "PredictionDistribution":
        z = np.asarray(logits, dtype=np.float64)
        z = z - z.max()
        e = np.exp(z)
        return cls(tuple(float(x) for x in e / e.sum()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


def make_soft_label(target_class: int, agreement: Agreement, k: int) -> SoftLabel:
    if k < 2:
        raise ValueError(f"soft labels need at least 2 classes, got {k}")
    if not 0 <= target_class < k:
        raise ValueError(f"target_class {target_class} out of range for {k} classes")
    p = TARGET_MASS[Agreement(agreement)]
    rest = (1.0 - p) / (k - 1)
    probs = [rest] * k
    probs[target_class] = p
    return SoftLabel(tuple(probs), Agreement(agreement), target_class)


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p_arr = p.as_array() if hasattr(p, "as_array") else np.asarray(p, dtype=np.float64)
    q_arr = q.as_array() if hasattr(q, "as_array") else np.asarray(q, dtype=np.float64)
    if p_arr.shape != q_arr.shape:
        raise DimensionMismatchError(f"P has {p_arr.shape[-1]} classes, Q has {q_arr.shape[-1]}")
    return p_arr, q_arr


def log_normalize(p) -> np.ndarray:
    """Log-domain target: elementwise log of the soft label, compared against a LogSoftmax output.

    Zero entries map to -inf; callers mask them.
    """
    p_arr = p.as_array() if hasattr(p, "as_array") else np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(p_arr)


def kl_standard(p, q) -> float:
    """D_KL(P || Q) with Q clamped at EPS."""
    p_arr, q_arr = _pair(p, q)
    q_arr = np.clip(q_arr, EPS, None)
    mask = p_arr > 0
    return float(np.sum(p_arr[mask] * (log_normalize(p_arr)[mask] - np.log(q_arr[mask]))))


def kl_inverse(p, q) -> float:
    """D_KL(Q || P), computed on the raw soft label rather than its log-normalized form."""
    p_arr, q_arr = _pair(p, q)
    p_arr = np.clip(p_arr, EPS, None)
    q_clamped = np.clip(q_arr, EPS, None)
    return float(np.sum(q_arr * (np.log(q_clamped) - np.log(p_arr))))


def soft_loss_ce(p, q) -> float:
    p_arr, q_arr = _pair(p, q)
    return float(-np.sum(p_arr * np.log(np.clip(q_arr, EPS, None))))


def soft_loss_bce(p, q) -> float:
    """Per-class binary cross-entropy averaged over the K classes; Q comes from a sigmoid."""
    p_arr, q_arr = _pair(p, q)
    q_arr = np.clip(q_arr, EPS, 1.0 - EPS)
    terms = p_arr * np.log(q_arr) + (1.0 - p_arr) * np.log1p(-q_arr)
    return float(-terms.sum() / p_arr.size)


def entropy(p) -> float:
    p_arr = p.as_array() if hasattr(p, "as_array") else np.asarray(p, dtype=np.float64)
    mask = p_arr > 0
    return float(-np.sum(p_arr[mask] * np.log(p_arr[mask])))


DIVERGENCES = {
    Divergence.KL_STANDARD: kl_standard,
    Divergence.KL_INVERSE: kl_inverse,
    Divergence.CE: soft_loss_ce,
    Divergence.BCE: soft_loss_bce,
}


def divergence(kind: Divergence, p, q) -> float:
    return DIVERGENCES[Divergence(kind)](p, q)

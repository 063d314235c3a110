"""
Training loop for the joint extractor: AdamW, linear warmup/decay, clipping, seeded candidate
sampling, per-epoch loss history and checkpoints.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import torch
from torch.optim import AdamW
from torch.optim.lr_scheduler import LambdaLR
from tqdm import tqdm

from src.config import ModelConfig
from src.corpus import Head, LabelSchema
from src.core.encoder import build_encoder
from src.core.losses import MultiPerspectiveLoss
from src.core.model import JointExtractor
from src.core.sampling import build_candidates
from src.dataset_builder import TrainingExample
from src.errors import MissingDataError
from src.softlabel import Divergence

logger = logging.getLogger(__name__)


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def build_model(config: ModelConfig, schemas: Mapping[Head, LabelSchema]) -> JointExtractor:
    encoder = build_encoder(config.encoder, **config.encoder_options())
    return JointExtractor(encoder, schemas, max_width=config.max_width, width_dim=config.width_dim, dropout=config.dropout)


@dataclass
class TrainingHistory:
    multi: list[float] = field(default_factory=list)
    soft: list[float] = field(default_factory=list)

    @property
    def total(self) -> list[float]:
        return [m + s for m, s in zip(self.multi, self.soft)]


class Trainer:
    def __init__(
        self,
        model: JointExtractor,
        config: ModelConfig,
        divergence: Divergence | None = None,
        seed: int = 0,
    ):
        self.model = model
        self.config = config
        self.seed = seed
        self.criterion = MultiPerspectiveLoss(divergence)
        self.device = torch.device(config.device)
        self.model.to(self.device)

    def _schedule(self, total_steps: int):
        warmup = int(self.config.warmup_proportion * total_steps)

        def factor(step: int) -> float:
            if warmup and step < warmup:
                return (step + 1) / warmup
            return max(0.0, (total_steps - step) / max(1, total_steps - warmup))

        return factor

    def fit(self, examples: list[TrainingExample], epochs: int | None = None, progress: bool = True) -> TrainingHistory:
        if not examples:
            raise ValueError("cannot train on an empty set")
        epochs = epochs or self.config.epochs
        batch_size = self.config.batch_size
        steps_per_epoch = (len(examples) + batch_size - 1) // batch_size
        optimizer = AdamW(
            [p for p in self.model.parameters() if p.requires_grad],
            lr=self.config.lr,
            weight_decay=self.config.weight_decay,
        )
        scheduler = LambdaLR(optimizer, self._schedule(epochs * steps_per_epoch))
        counts = (self.config.neg_entities, self.config.neg_relations)
        history = TrainingHistory()

        self.model.train()
        for epoch in tqdm(range(epochs), desc="epochs", disable=not progress):
            order = list(range(len(examples)))
            random.Random(f"{self.seed}:{epoch}").shuffle(order)
            multi_sum = soft_sum = 0.0
            for start in range(0, len(order), batch_size):
                batch = [examples[i] for i in order[start:start + batch_size]]
                candidates = [
                    build_candidates(e, self.model.schemas, counts, f"{self.seed}:{epoch}:{e.key}", self.config.max_width)
                    for e in batch
                ]
                outputs = self.model([e.sentence for e in batch], candidates)
                total, multi, soft = self.criterion(outputs)
                optimizer.zero_grad()
                total.backward()
                torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.config.max_grad_norm)
                optimizer.step()
                scheduler.step()
                multi_sum += multi.item()
                soft_sum += soft.item()
            history.multi.append(multi_sum / steps_per_epoch)
            history.soft.append(soft_sum / steps_per_epoch)
            logger.debug("epoch %d: multi=%.4f soft=%.4f", epoch, history.multi[-1], history.soft[-1])
        logger.info(
            "Trained %d epochs on %d examples: final multi=%.4f soft=%.4f",
            epochs, len(examples), history.multi[-1], history.soft[-1],
        )
        return history


# --------------------------------------------------------------------------- checkpoints


def save_checkpoint(model: JointExtractor, directory: str | Path, config: ModelConfig, seed: int) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), directory / "model.pt")
    manifest = {
        "model": model.describe(),
        "hyperparameters": config.model_dump(mode="json", exclude={"device"}),
        "seed": seed,
    }
    (directory / "checkpoint.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def load_checkpoint(directory: str | Path, device: str = "cpu") -> JointExtractor:
    directory = Path(directory)
    if not (directory / "checkpoint.json").exists() or not (directory / "model.pt").exists():
        raise MissingDataError(f"no checkpoint at {directory}")
    manifest = json.loads((directory / "checkpoint.json").read_text(encoding="utf-8"))
    described = manifest["model"]
    schemas = {
        Head(name): LabelSchema(tuple(s["entity_types"]), tuple(s["relation_types"]))
        for name, s in described["schemas"].items()
    }
    encoder_spec = dict(described["encoder"])
    encoder = build_encoder(encoder_spec.pop("kind"), **encoder_spec)
    model = JointExtractor(
        encoder, schemas, max_width=described["max_width"], width_dim=described["width_dim"], dropout=described["dropout"]
    )
    model.load_state_dict(torch.load(directory / "model.pt", map_location=device))
    return model.to(device)

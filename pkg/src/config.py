"""
Experiment configuration: YAML files validated by pydantic, environment defaults from .env,
CLI overrides, and the deterministic config hash every run manifest carries.
"""
from __future__ import annotations

import hashlib
import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Literal

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.encoder import DEFAULT_PRETRAINED
from src.dataset_builder import SplitSpec, Strategy
from src.errors import ConfigError
from src.softlabel import Divergence

load_dotenv()


def data_root_default() -> Path:
    return Path(os.getenv("SCIVAR_DATA_ROOT", "data"))


def output_dir_default() -> Path:
    return Path(os.getenv("SCIVAR_OUTPUT_DIR", "output"))


def device_default() -> str:
    return os.getenv("SCIVAR_DEVICE", "cpu")


def log_level_default() -> str:
    return os.getenv("SCIVAR_LOG_LEVEL", "INFO")


class Scenario(str, Enum):
    OVERLAP_TABLE3 = "OVERLAP_TABLE3"
    DATA_QUANTITY_FIG2 = "DATA_QUANTITY_FIG2"
    LOSS_ABLATION_TABLE4 = "LOSS_ABLATION_TABLE4"
    SCIREX_TABLE5 = "SCIREX_TABLE5"
    SCIERC_STANDARD_TABLE6 = "SCIERC_STANDARD_TABLE6"
    STATS_REPORT = "STATS_REPORT"


class DataPaths(BaseModel):
    """Source files, relative to `root` unless absolute."""

    model_config = ConfigDict(extra="forbid")

    root: Path = Field(default_factory=data_root_default)
    semeval_text: str = Field(default="semeval/2.test.text.xml", description="Sub-task 2 abstracts with entity markup")
    semeval_relations: str = Field(default="semeval/keys.test.2.txt", description="Sub-task 2 relation list")
    scierc_dir: str = Field(default="scierc", description="Directory holding train.json, dev.json and test.json")
    scirex_files: list[str] = Field(default_factory=lambda: ["scirex/train.jsonl", "scirex/dev.jsonl", "scirex/test.jsonl"])
    segmenter: str = Field(default="spacy", description="'spacy' (sentencizer) or 'spacy:<model>'")

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.root / path


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    encoder: Literal["tiny", "pretrained"] = "pretrained"
    encoder_name: str = DEFAULT_PRETRAINED
    dim: int = Field(default=32, ge=4, description="TinyEncoder width")
    layers: int = Field(default=1, ge=1)
    heads: int = Field(default=2, ge=1)
    max_width: int = Field(default=10, ge=1)
    width_dim: int = Field(default=25, ge=1)
    neg_entities: int = Field(default=100, ge=0)
    neg_relations: int = Field(default=100, ge=0)
    relation_threshold: float = Field(default=0.4, ge=0.0, le=1.0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    epochs: int = Field(default=20, ge=1)
    batch_size: int = Field(default=2, ge=1)
    lr: float = Field(default=5e-5, gt=0)
    weight_decay: float = Field(default=0.01, ge=0)
    warmup_proportion: float = Field(default=0.1, ge=0, le=1)
    max_grad_norm: float = Field(default=1.0, gt=0)
    desk_epochs: int = Field(default=30, ge=1)
    desk_lr: float = Field(default=1e-3, gt=0)
    device: str = Field(default_factory=device_default)

    def at_desk_scale(self) -> "ModelConfig":
        return self.model_copy(update={"encoder": "tiny", "epochs": self.desk_epochs, "lr": self.desk_lr})

    def encoder_options(self) -> dict[str, Any]:
        if self.encoder == "tiny":
            return {"dim": self.dim, "layers": self.layers, "heads": self.heads, "dropout": self.dropout}
        return {"identifier": self.encoder_name}


DEFAULT_CAPS = [1400 - 100 * i for i in range(11)]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    data: DataPaths = Field(default_factory=DataPaths)
    split: SplitSpec = Field(default_factory=lambda: SplitSpec(strategy=Strategy.MTL_SOFT))
    model: ModelConfig = Field(default_factory=ModelConfig)
    divergence: Divergence = Divergence.KL_STANDARD
    seeds: list[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5], min_length=1)
    caps: list[int] = Field(default_factory=lambda: list(DEFAULT_CAPS))
    desk_scale: bool = False
    render_plots: bool = Field(default=True, description="Render PNGs next to the plot data")
    output_dir: Path = Field(default_factory=output_dir_default)

    def effective_model(self) -> ModelConfig:
        return self.model.at_desk_scale() if self.desk_scale else self.model

    def canonical(self) -> dict:
        payload = self.model_dump(mode="json", exclude={"output_dir", "render_plots"})
        # the device does not change results
        payload["model"].pop("device", None)
        return payload

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True)


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        elif value is not None:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config (optional), apply nested overrides and validate."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    raw = _merge(raw, overrides or {})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid config: {problems}") from e


def verify_hash(config_yaml: str, expected: str) -> bool:
    """True when a stored config re-validates to the hash recorded next to it."""
    config = ExperimentConfig.model_validate(yaml.safe_load(config_yaml))
    return config.config_hash() == expected

"""Fine-tuning hyper-parameter configs with frozen defaults.

The defaults are the settings used to fine-tune the chat models these
pipelines feed: bf16, 3 epochs, batch 32, lr 5e-6, no weight decay, 3%
cosine warmup, 2048-token context.  ``emit_train_config`` serializes them
with explicit overrides only — an unknown field is a config error, never
silently accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, ParameterError

DATASET_LANGUAGES = ("zh", "en")


@dataclass(frozen=True)
class TrainingConfig:
    precision: str = "bf16"
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 5e-6
    weight_decay: float = 0.0
    warmup_ratio: float = 0.03
    lr_scheduler: str = "cosine"
    max_length: int = 2048

    def __post_init__(self):
        for name in ("epochs", "batch_size", "max_length"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        for name in ("learning_rate", "weight_decay", "warmup_ratio"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value < 0:
                raise ConfigError(f"{name} must be a non-negative number, got {value!r}")
        if not 0 <= self.warmup_ratio <= 1:
            raise ConfigError(f"warmup_ratio must be in [0, 1], got {self.warmup_ratio}")
        for name in ("precision", "lr_scheduler"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ConfigError(f"{name} must be a non-empty string, got {value!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def dataset_label(language: str, name: str) -> str:
    """Tag a dataset with its language version, e.g. ``zh(alpaca)``."""
    if language not in DATASET_LANGUAGES:
        raise ParameterError(
            f"dataset language must be one of {DATASET_LANGUAGES}, got {language!r}"
        )
    if not name:
        raise ParameterError("dataset name is empty")
    return f"{language}({name})"


def emit_train_config(
    overrides: Mapping[str, object] | None = None,
    datasets: Iterable[str] = (),
) -> dict:
    """Build the training-config dict: frozen defaults plus overrides.

    ``overrides`` may only name TrainingConfig fields; ``datasets`` is an
    optional list of :func:`dataset_label` tags appended verbatim.
    """
    overrides = dict(overrides or {})
    known = {f.name for f in fields(TrainingConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown training-config field(s): {unknown}")
    config = TrainingConfig(**overrides).to_dict()
    datasets = list(datasets)
    if datasets:
        config["datasets"] = datasets
    return config


def write_train_config(path: str | Path, config: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")

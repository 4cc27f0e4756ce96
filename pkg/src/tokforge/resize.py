"""Embedding resize plans: how to grow an embedding matrix for an extended
vocabulary without touching the rest of the model.

The plan is a serializable artifact, not a tensor operation: it lists which
rows to copy (base ids are preserved), which rows are new and how to
initialize them, and pins the trainable scope to embeddings only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bpe import Vocabulary
from .errors import ConsistencyError, ParameterError

INIT_MEAN = "mean-of-copied"
INIT_ZERO = "zero"
TRAINABLE_EMBEDDINGS_ONLY = "embeddings_only"


@dataclass
class ResizePlan:
    base_size: int
    merged_size: int
    embedding_dim: int
    init_rule: str
    copied_rows: list[tuple[int, int]]
    new_rows: list[tuple[int, str]]
    trainable_scope: str = TRAINABLE_EMBEDDINGS_ONLY

    def to_dict(self) -> dict:
        return {
            "base_size": self.base_size,
            "merged_size": self.merged_size,
            "embedding_dim": self.embedding_dim,
            "init_rule": self.init_rule,
            "copied_rows": [list(pair) for pair in self.copied_rows],
            "new_rows": [list(pair) for pair in self.new_rows],
            "trainable_scope": self.trainable_scope,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResizePlan":
        return cls(
            base_size=d["base_size"],
            merged_size=d["merged_size"],
            embedding_dim=d["embedding_dim"],
            init_rule=d["init_rule"],
            copied_rows=[tuple(pair) for pair in d["copied_rows"]],
            new_rows=[tuple(pair) for pair in d["new_rows"]],
            trainable_scope=d["trainable_scope"],
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "ResizePlan":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def resize_plan(
    base: Vocabulary,
    merged: Vocabulary,
    embedding_dim: int,
    init_rule: str = INIT_MEAN,
) -> ResizePlan:
    """Plan the embedding-matrix resize from ``base`` to ``merged``.

    Every base token must appear in ``merged`` under the same id; new rows
    (one per merged-only token) are tagged with the init rule, either the
    mean of the copied rows (default) or zeros.
    """
    if embedding_dim < 1:
        raise ParameterError(f"embedding_dim must be >= 1, got {embedding_dim}")
    if init_rule not in (INIT_MEAN, INIT_ZERO):
        raise ParameterError(f"unknown init rule {init_rule!r}")
    for i, tok in enumerate(base.tokens):
        j = merged.id_of(tok)
        if j is None:
            raise ConsistencyError(
                f"base token id {i} ({tok!r}) is missing from the merged vocabulary"
            )
        if j != i:
            raise ConsistencyError(
                f"base token id {i} ({tok!r}) moved to id {j} in the merged vocabulary"
            )
    copied = [(i, i) for i in range(len(base))]
    new = [(i, init_rule) for i in range(len(base), len(merged))]
    return ResizePlan(
        base_size=len(base),
        merged_size=len(merged),
        embedding_dim=embedding_dim,
        init_rule=init_rule,
        copied_rows=copied,
        new_rows=new,
    )

"""Run manifests: every CLI run records what produced its outputs.

A manifest pins the tool version, the subcommand, the fully resolved
configuration, SHA-256 hashes of every input file and prompt template,
and the seed — enough to re-run the step and expect byte-identical
outputs (timestamps aside).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    tool: str
    version: str
    subcommand: str
    config: dict
    inputs: dict[str, str]  # input path -> sha256
    templates: dict[str, str] = field(default_factory=dict)  # template -> sha256
    seed: int | None = None
    started: str = ""
    finished: str = ""

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "templates": self.templates,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            tool=d["tool"],
            version=d["version"],
            subcommand=d["subcommand"],
            config=dict(d.get("config", {})),
            inputs=dict(d.get("inputs", {})),
            templates=dict(d.get("templates", {})),
            seed=d.get("seed"),
            started=d.get("started", ""),
            finished=d.get("finished", ""),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

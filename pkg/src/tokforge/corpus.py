"""Corpus cleaning: exact and near-duplicate removal, perplexity filtering,
diversity reporting, and an ordered cleaning pipeline with conservation
accounting (every stage's input count equals output plus removed).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .errors import (
    ConfigError,
    ConsistencyError,
    DegenerateInputError,
    InputError,
    ParameterError,
)
from .minhash import LshIndex, MinHasher, estimate_jaccard
from .ngram import NgramLM, perplexity, train_ngram_lm
from .text import normalize, split_tokens

LANGUAGES = ("zh", "en", "mixed", "other")


@dataclass
class Document:
    id: str
    text: str
    meta: dict = field(default_factory=dict)
    language: str | None = None  # zh | en | mixed | other; None = unclassified

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "meta": self.meta,
            "language": self.language,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        language = d.get("language")
        if language is not None and language not in LANGUAGES:
            raise InputError(f"document {d.get('id')!r}: bad language {language!r}")
        return cls(
            id=str(d["id"]),
            text=d["text"],
            meta=d.get("meta", {}),
            language=language,
        )


@dataclass
class StageReport:
    stage: str
    input_count: int
    output_count: int

    @property
    def removed(self) -> int:
        return self.input_count - self.output_count


@dataclass
class CleaningReport:
    stages: list[StageReport]

    @property
    def input_count(self) -> int:
        return self.stages[0].input_count if self.stages else 0

    @property
    def output_count(self) -> int:
        return self.stages[-1].output_count if self.stages else 0

    def validate(self) -> None:
        for i, s in enumerate(self.stages):
            if s.output_count > s.input_count or s.output_count < 0:
                raise ConsistencyError(
                    f"stage {s.stage!r}: output {s.output_count} does not fit "
                    f"input {s.input_count}"
                )
            if i > 0 and s.input_count != self.stages[i - 1].output_count:
                raise ConsistencyError(
                    f"stage {s.stage!r}: input {s.input_count} does not chain "
                    f"from previous output {self.stages[i - 1].output_count}"
                )

    def chain(self, other: "CleaningReport") -> "CleaningReport":
        combined = CleaningReport(stages=self.stages + other.stages)
        combined.validate()
        return combined

    def to_dict(self) -> dict:
        return {
            "stages": [
                {
                    "stage": s.stage,
                    "input": s.input_count,
                    "output": s.output_count,
                    "removed": s.removed,
                }
                for s in self.stages
            ],
            "input": self.input_count,
            "output": self.output_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CleaningReport":
        stages = []
        for s in d["stages"]:
            stage = StageReport(s["stage"], s["input"], s["output"])
            if "removed" in s and s["removed"] != stage.removed:
                raise ConsistencyError(
                    f"stage {s['stage']!r}: removed {s['removed']} does not "
                    f"equal input - output = {stage.removed}"
                )
            stages.append(stage)
        report = cls(stages=stages)
        report.validate()
        if "input" in d and d["input"] != report.input_count:
            raise ConsistencyError("report input does not match first stage")
        if "output" in d and d["output"] != report.output_count:
            raise ConsistencyError("report output does not match last stage")
        return report


def _single_stage(name: str, n_in: int, n_out: int) -> CleaningReport:
    return CleaningReport(stages=[StageReport(name, n_in, n_out)])


def fingerprint(text: str) -> str:
    """Normalization-insensitive fingerprint used for exact dedup."""
    return " ".join(split_tokens(text))


def exact_dedup(docs: Sequence[Document]) -> tuple[list[Document], CleaningReport]:
    """Drop documents whose normalized token fingerprint was seen before;
    the first occurrence wins."""
    seen: set[str] = set()
    kept: list[Document] = []
    for doc in docs:
        fp = fingerprint(doc.text)
        if fp in seen:
            continue
        seen.add(fp)
        kept.append(doc)
    return kept, _single_stage("exact_dedup", len(docs), len(kept))


def _shingles(text: str, k: int) -> set[str]:
    text = normalize(text)
    if len(text) <= k:
        return {text}
    return {text[i : i + k] for i in range(len(text) - k + 1)}


def semantic_dedup(
    docs: Sequence[Document],
    jaccard_threshold: float = 0.8,
    num_hashes: int = 128,
    shingle_size: int = 5,
    seed: int = 0,
) -> tuple[list[Document], CleaningReport]:
    """Near-duplicate removal with MinHash over character shingles.

    A document is dropped when its estimated Jaccard similarity with an
    earlier kept document reaches the threshold.  Banded LSH narrows the
    earlier-kept set to candidates; the decision itself always comes from
    the full signature comparison.  Deterministic for a fixed seed.
    """
    if not 0.0 < jaccard_threshold <= 1.0:
        raise ParameterError(
            f"jaccard_threshold must lie in (0, 1], got {jaccard_threshold}"
        )
    if shingle_size < 1:
        raise ParameterError(f"shingle_size must be >= 1, got {shingle_size}")
    if docs and all(len(normalize(d.text)) < shingle_size for d in docs):
        raise DegenerateInputError(
            f"shingle_size {shingle_size} is longer than every document"
        )
    hasher = MinHasher(num_hashes=num_hashes, seed=seed)
    index = LshIndex(num_hashes=num_hashes)
    signatures: list = []
    kept: list[Document] = []
    for doc in docs:
        sig = hasher.signature(_shingles(doc.text, shingle_size))
        duplicate = any(
            estimate_jaccard(sig, signatures[c]) >= jaccard_threshold
            for c in sorted(index.candidates(sig))
        )
        if duplicate:
            continue
        index.add(len(signatures), sig)
        signatures.append(sig)
        kept.append(doc)
    return kept, _single_stage("semantic_dedup", len(docs), len(kept))


def ppl_filter(
    docs: Sequence[Document],
    lm: NgramLM,
    mode: str = "percentile",
    threshold: float = 90.0,
) -> tuple[list[Document], CleaningReport]:
    """Drop high-perplexity documents.

    ``absolute`` keeps documents with PPL <= threshold.  ``percentile``
    keeps the lowest-scoring fraction of the batch: with threshold p it
    keeps floor(n * p / 100) documents, breaking PPL ties by corpus order.
    """
    if mode not in ("absolute", "percentile"):
        raise ParameterError(f"unknown ppl_filter mode {mode!r}")
    scores = [perplexity(lm, doc) for doc in docs]
    if mode == "absolute":
        kept = [doc for doc, s in zip(docs, scores) if s <= threshold]
    else:
        if not 0.0 < threshold < 100.0:
            raise ParameterError(
                f"percentile must lie in (0, 100), got {threshold}"
            )
        n_keep = math.floor(len(docs) * threshold / 100.0)
        order = sorted(range(len(docs)), key=lambda i: (scores[i], i))
        keep_idx = set(order[:n_keep])
        kept = [doc for i, doc in enumerate(docs) if i in keep_idx]
    return kept, _single_stage("ppl_filter", len(docs), len(kept))


@dataclass
class DiversityReport:
    total_tokens: int
    distinct_tokens: int
    entropy_bits: float
    top_percent_mass: float
    type_token_ratio: float
    token_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "total_tokens": self.total_tokens,
            "distinct_tokens": self.distinct_tokens,
            "entropy_bits": self.entropy_bits,
            "top_percent_mass": self.top_percent_mass,
            "type_token_ratio": self.type_token_ratio,
        }


def diversity_report(docs: Sequence[Document]) -> DiversityReport:
    """Unigram frequencies, Shannon entropy (bits), the token mass held by
    the top 1% of types, and the type/token ratio."""
    counts: Counter = Counter()
    for doc in docs:
        counts.update(split_tokens(doc.text))
    total = sum(counts.values())
    if total == 0:
        raise InputError("no tokens: diversity is undefined")
    entropy = -math.fsum(
        (c / total) * math.log2(c / total) for c in counts.values()
    )
    top_n = max(1, math.ceil(0.01 * len(counts)))
    by_freq = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    top_mass = sum(c for _, c in by_freq[:top_n]) / total
    return DiversityReport(
        total_tokens=total,
        distinct_tokens=len(counts),
        entropy_bits=entropy,
        top_percent_mass=top_mass,
        type_token_ratio=len(counts) / total,
        token_counts=dict(counts),
    )


STAGES = ("exact_dedup", "semantic_dedup", "ppl_filter")


def clean_pipeline(
    docs: Sequence[Document],
    stages: Sequence[str],
    config: dict | None = None,
) -> tuple[list[Document], CleaningReport]:
    """Run an ordered subset of cleaning stages, chaining their reports.

    ``config`` maps stage names to keyword arguments.  ``ppl_filter``
    accepts an ``lm`` instance; without one, a model is trained on the
    stage's own input (keys ``order``, ``smoothing``, ``add_k`` are passed
    through when given).
    """
    config = dict(config or {})
    for name in list(stages) + list(config):
        if name not in STAGES:
            raise ConfigError(f"unknown cleaning stage {name!r}")
    current = list(docs)
    report = CleaningReport(stages=[])
    for name in stages:
        params = dict(config.get(name, {}))
        if name == "exact_dedup":
            current, stage_report = exact_dedup(current)
        elif name == "semantic_dedup":
            current, stage_report = semantic_dedup(current, **params)
        else:
            lm = params.pop("lm", None)
            if lm is None:
                train_keys = {"order", "smoothing", "add_k", "interp_lambda"}
                train_params = {
                    k: params.pop(k) for k in list(params) if k in train_keys
                }
                lm = train_ngram_lm(current, **train_params)
            current, stage_report = ppl_filter(current, lm, **params)
        report = report.chain(stage_report)
    return current, report

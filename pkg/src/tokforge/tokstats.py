"""Token-efficiency measurement: tokens per line under competing tokenizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .bpe import BpeTokenizer
from .errors import InputError, ParameterError


@dataclass
class TokenizerLineStats:
    name: str
    lines: int
    total_tokens: int

    @property
    def mean_tokens_per_line(self) -> float:
        return self.total_tokens / self.lines

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lines": self.lines,
            "total_tokens": self.total_tokens,
            "mean_tokens_per_line": self.mean_tokens_per_line,
        }


@dataclass
class TokenizerStatsReport:
    per_tokenizer: list[TokenizerLineStats]
    reduction_ratio: float | None

    @classmethod
    def build(cls, stats: Sequence[TokenizerLineStats]) -> "TokenizerStatsReport":
        """Assemble a report; with exactly two tokenizers the second is
        treated as the extended one and the reduction ratio
        ``1 - extended_mean / base_mean`` is filled in."""
        ratio = None
        if len(stats) == 2:
            ratio = 1.0 - stats[1].mean_tokens_per_line / stats[0].mean_tokens_per_line
        return cls(per_tokenizer=list(stats), reduction_ratio=ratio)

    def to_dict(self) -> dict:
        return {
            "per_tokenizer": [s.to_dict() for s in self.per_tokenizer],
            "reduction_ratio": self.reduction_ratio,
        }


def tok_stats(
    lines: Iterable[str],
    tokenizers: Sequence[tuple[str, BpeTokenizer]],
) -> TokenizerStatsReport:
    """Measure mean tokens per line for each tokenizer over the same lines.

    Requires at least two tokenizers (the point is comparison); the first
    is the baseline for the reduction ratio when exactly two are given.
    """
    if len(tokenizers) < 2:
        raise ParameterError("tok_stats needs at least two tokenizers to compare")
    lines = list(lines)
    if not lines:
        raise InputError("empty line set: mean tokens per line is undefined")
    stats = []
    for name, tokenizer in tokenizers:
        total = sum(len(tokenizer.encode(line)) for line in lines)
        stats.append(TokenizerLineStats(name=name, lines=len(lines), total_tokens=total))
    return TokenizerStatsReport.build(stats)

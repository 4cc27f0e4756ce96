"""Conversations: role-alternating turn lists, language filtering, and
token-budget segmentation.

A conversation's turns strictly alternate human/assistant and start with a
human turn; the only exception is a segment that lost its leading human
context, which carries an explicit flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .bpe import BpeTokenizer
from .corpus import CleaningReport, StageReport
from .errors import InputError, ParameterError
from .text import script_counts

ROLE_HUMAN = "human"
ROLE_ASSISTANT = "assistant"
ROLES = (ROLE_HUMAN, ROLE_ASSISTANT)

FLAG_TRUNCATED = "truncated"
FLAG_CONTEXT_PREPENDED = "context_prepended"
FLAG_CONTEXT_LOSS = "context_loss"

LANGUAGES = ("zh", "en", "mixed", "other")


@dataclass(frozen=True)
class GenerationParams:
    """Sampling settings serialized into every chat-completion request."""

    temperature: float = 0.001
    max_new_tokens: int = 1024
    model: str = "gpt-3.5-turbo"

    def __post_init__(self):
        if self.temperature < 0:
            raise ParameterError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_new_tokens < 1:
            raise ParameterError(
                f"max_new_tokens must be >= 1, got {self.max_new_tokens}"
            )


@dataclass
class Turn:
    role: str
    text: str


@dataclass
class Conversation:
    id: str
    turns: list[Turn]
    source: str = ""
    language: str | None = None
    flags: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not self.turns:
            raise InputError(f"conversation {self.id!r} has no turns")
        for i, turn in enumerate(self.turns):
            if turn.role not in ROLES:
                raise InputError(
                    f"conversation {self.id!r} turn {i}: unknown role {turn.role!r}"
                )
            if i > 0 and turn.role == self.turns[i - 1].role:
                raise InputError(
                    f"conversation {self.id!r} turn {i}: roles do not alternate"
                )
        if self.turns[0].role != ROLE_HUMAN and FLAG_CONTEXT_LOSS not in self.flags:
            raise InputError(
                f"conversation {self.id!r} starts with an assistant turn "
                f"and carries no context-loss flag"
            )

    def text(self) -> str:
        return "\n".join(turn.text for turn in self.turns)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "language": self.language,
            "turns": [{"role": t.role, "text": t.text} for t in self.turns],
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Conversation":
        language = d.get("language")
        if language is not None and language not in LANGUAGES:
            raise InputError(
                f"conversation {d.get('id')!r}: bad language {language!r}"
            )
        conv = cls(
            id=str(d["id"]),
            turns=[Turn(t["role"], t["text"]) for t in d["turns"]],
            source=d.get("source", ""),
            language=language,
            flags=list(d.get("flags", [])),
        )
        conv.validate()
        return conv


def read_conversations(path: str | Path) -> list[Conversation]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(Conversation.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise InputError(f"{path}:{lineno + 1}: bad conversation row: {e}")
    return out


def write_conversations(path: str | Path, convs: Iterable[Conversation]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for conv in convs:
            f.write(json.dumps(conv.to_dict(), ensure_ascii=False) + "\n")


# --- language handling ----------------------------------------------------

def detect_language(
    text: str,
    zh_ratio: float = 0.30,
    en_ratio: float = 0.70,
    floor: float = 0.05,
) -> str:
    """Classify by script-character ratios over word characters: mostly-CJK
    is zh, mostly-Latin with almost no CJK is en, a real mix of both is
    mixed, anything else (digits, unknown scripts) is other."""
    cjk, latin, total = script_counts(text)
    if total == 0:
        return "other"
    rc, rl = cjk / total, latin / total
    if rc >= zh_ratio and rl < floor:
        return "zh"
    if rl >= en_ratio and rc < floor:
        return "en"
    if rc >= floor and rl >= floor:
        return "mixed"
    return "other"


def filter_languages(
    convs: Sequence[Conversation],
    keep: Iterable[str],
) -> tuple[list[Conversation], CleaningReport]:
    """Keep conversations whose detected language is in ``keep``.  A mixed
    conversation is kept when either of its constituents (zh or en) is.
    Sets ``language`` on every conversation as a side effect."""
    keep = set(keep)
    unknown = keep - set(LANGUAGES)
    if unknown:
        raise ParameterError(f"unknown language(s) in keep set: {sorted(unknown)}")
    kept = []
    for conv in convs:
        conv.language = detect_language(conv.text())
        if conv.language in keep or (
            conv.language == "mixed" and keep & {"zh", "en"}
        ):
            kept.append(conv)
    report = CleaningReport(
        stages=[StageReport("filter_languages", len(convs), len(kept))]
    )
    return kept, report


# --- segmentation ---------------------------------------------------------

def _truncate_turn(
    turn: Turn, tokenizer: BpeTokenizer, max_tokens: int
) -> Turn:
    ids = tokenizer.encode(turn.text)[:max_tokens]
    k = len(ids)
    while k > 0:
        text = tokenizer.decode_bytes(ids[:k]).decode("utf-8", errors="ignore")
        if tokenizer.token_count(text) <= max_tokens:
            return Turn(turn.role, text)
        k -= 1  # re-encoding crossed the budget at the cut point; back off
    return Turn(turn.role, "")


def segment(
    conv: Conversation,
    tokenizer: BpeTokenizer,
    max_tokens: int = 2048,
) -> list[Conversation]:
    """Split a long conversation into whole-turn segments of at most
    ``max_tokens`` tokens (greedy packing).

    A single turn longer than the budget becomes its own truncated,
    flagged segment.  A segment that would open with an assistant turn gets
    the preceding human turn prepended as context when it fits, otherwise
    it carries a context-loss flag.
    """
    if max_tokens < 1:
        raise ParameterError(f"max_tokens must be >= 1, got {max_tokens}")
    conv.validate()
    counts = [tokenizer.token_count(t.text) for t in conv.turns]
    segments: list[Conversation] = []
    i = 0
    while i < len(conv.turns):
        flags: list[str] = []
        if counts[i] > max_tokens:
            turns = [_truncate_turn(conv.turns[i], tokenizer, max_tokens)]
            flags.append(FLAG_TRUNCATED)
            if turns[0].role == ROLE_ASSISTANT:
                flags.append(FLAG_CONTEXT_LOSS)  # no room left for context
            i += 1
        else:
            total = 0
            j = i
            while j < len(conv.turns) and total + counts[j] <= max_tokens:
                total += counts[j]
                j += 1
            turns = list(conv.turns[i:j])
            if turns[0].role == ROLE_ASSISTANT:
                # conversations start with a human turn, so i > 0 here
                if total + counts[i - 1] <= max_tokens:
                    turns.insert(0, conv.turns[i - 1])
                    flags.append(FLAG_CONTEXT_PREPENDED)
                else:
                    flags.append(FLAG_CONTEXT_LOSS)
            i = j
        seg = Conversation(
            id=f"{conv.id}#{len(segments)}",
            turns=turns,
            source=conv.source,
            language=conv.language,
            flags=flags,
        )
        seg.validate()
        segments.append(seg)
    return segments

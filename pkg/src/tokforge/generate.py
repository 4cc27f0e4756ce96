"""Seed-driven conversation generation.

Each seed (the opening human message of a real conversation) is substituted
verbatim into a versioned prompt template; the completion is parsed back
into alternating Human/Assistant turns.  Seeds that fail after retries, or
whose completion cannot be parsed, produce structured failure records with
the raw model output preserved — nothing is silently dropped.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .client import ChatClient, RetryPolicy, call_with_retries
from .conversation import (
    ROLE_ASSISTANT,
    ROLE_HUMAN,
    Conversation,
    GenerationParams,
    Turn,
    detect_language,
)
from .errors import DialogueParseError, InputError, TransportError
from .templates import SEED_PROMPT, load_template

logger = logging.getLogger(__name__)

_MARKERS = (("Human:", ROLE_HUMAN), ("Assistant:", ROLE_ASSISTANT))


@dataclass
class GenerationFailure:
    seed_id: str
    seed: str
    reason: str  # "transport" | "parse"
    detail: str
    raw: str | None = None

    def to_dict(self) -> dict:
        return {
            "seed_id": self.seed_id,
            "seed": self.seed,
            "reason": self.reason,
            "detail": self.detail,
            "raw": self.raw,
        }


def seed_prompt(first_turn: str, turns_target: int = 6) -> str:
    """Render the generation prompt around a seed message (verbatim)."""
    if not first_turn.strip():
        raise InputError("seed text is empty")
    return load_template(SEED_PROMPT).format(seed=first_turn, turns=turns_target)


def parse_dialogue(text: str) -> list[Turn]:
    """Parse ``Human:`` / ``Assistant:`` marker lines into turns.

    Marker lines open a new turn; following lines accumulate into it.
    Text before the first marker is ignored (models sometimes preface).
    The result must alternate roles and start with a human turn.
    """
    turns: list[Turn] = []
    buf: list[str] | None = None
    role = None
    for line in text.splitlines():
        stripped = line.strip()
        matched = None
        for marker, marker_role in _MARKERS:
            if stripped.startswith(marker):
                matched = (marker_role, stripped[len(marker) :].strip())
                break
        if matched:
            if role is not None:
                turns.append(Turn(role, "\n".join(buf).strip()))
            role, first = matched
            buf = [first] if first else []
        elif buf is not None:
            buf.append(stripped)
    if role is not None:
        turns.append(Turn(role, "\n".join(buf).strip()))
    if not turns:
        raise DialogueParseError("no Human:/Assistant: turn markers found", raw=text)
    if turns[0].role != ROLE_HUMAN:
        raise DialogueParseError("dialogue does not start with a human turn", raw=text)
    for i in range(1, len(turns)):
        if turns[i].role == turns[i - 1].role:
            raise DialogueParseError(f"roles do not alternate at turn {i}", raw=text)
    for i, turn in enumerate(turns):
        if not turn.text:
            raise DialogueParseError(f"turn {i} is empty", raw=text)
    return turns


def generate_conversations(
    seeds: Sequence[tuple[str, str]],
    client: ChatClient,
    params: GenerationParams = GenerationParams(),
    turns_target: int = 6,
    max_workers: int = 1,
    retry: RetryPolicy | None = None,
) -> tuple[list[Conversation], list[GenerationFailure]]:
    """Generate one conversation per ``(seed_id, seed_text)`` pair.

    Requests run with up to ``max_workers`` in flight; results are
    assembled in seed order regardless of completion order.
    """
    retry = retry or RetryPolicy()

    def one(seed_id: str, seed_text: str):
        prompt = seed_prompt(seed_text, turns_target=turns_target)
        try:
            reply = call_with_retries(lambda: client.complete(prompt, params), retry)
        except TransportError as e:
            return GenerationFailure(seed_id, seed_text, "transport", str(e))
        try:
            turns = parse_dialogue(reply)
        except DialogueParseError as e:
            return GenerationFailure(seed_id, seed_text, "parse", str(e), raw=e.raw)
        conv = Conversation(
            id=seed_id,
            turns=turns,
            source="generated",
            language=detect_language("\n".join(t.text for t in turns)),
        )
        return conv

    if max_workers <= 1:
        results = [one(sid, text) for sid, text in seeds]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(one, sid, text) for sid, text in seeds]
            results = [f.result() for f in futures]

    conversations = [r for r in results if isinstance(r, Conversation)]
    failures = [r for r in results if isinstance(r, GenerationFailure)]
    for failure in failures:
        logger.warning(
            "seed %s failed (%s): %s", failure.seed_id, failure.reason, failure.detail
        )
    return conversations, failures

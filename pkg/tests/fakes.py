"""Deterministic fake chat clients for tests."""

from __future__ import annotations

import random
import re
import threading

from tokforge.errors import TransportError


class ScriptedClient:
    """Returns queued replies in order; a queued exception is raised
    instead.  Records every call."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls: list[tuple[str, object]] = []

    def complete(self, prompt, params):
        self.calls.append((prompt, params))
        if not self.replies:
            raise TransportError("script exhausted")
        item = self.replies.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class FaultInjectingJudgeClient:
    """Per-sample fault schedule, deterministic for a fixed seed.

    Each sample key gets its own RNG stream; every call draws once for a
    transport failure (probability ``fail_rate``) and, on success, once for
    a malformed reply (probability ``malformed_rate``).  Sample keys are
    recovered from the prompt via ``key_pattern``.
    """

    def __init__(
        self,
        seed: int,
        fail_rate: float = 0.2,
        malformed_rate: float = 0.05,
        key_pattern: str = r"sample-(\d+)",
    ):
        self.seed = seed
        self.fail_rate = fail_rate
        self.malformed_rate = malformed_rate
        self.key_pattern = re.compile(key_pattern)
        self.calls: dict[int, int] = {}
        self._rngs: dict[int, random.Random] = {}
        self._lock = threading.Lock()

    def _key(self, prompt: str) -> int:
        m = self.key_pattern.search(prompt)
        assert m, "prompt does not carry a sample key"
        return int(m.group(1))

    def complete(self, prompt, params):
        key = self._key(prompt)
        with self._lock:
            self.calls[key] = self.calls.get(key, 0) + 1
            rng = self._rngs.setdefault(key, random.Random(f"{self.seed}:{key}"))
            fail = rng.random() < self.fail_rate
            malformed = rng.random() < self.malformed_rate
            flavor = rng.random()
        if fail:
            raise TransportError(f"injected transport failure for {key}")
        if malformed:
            return "N/A" if flavor < 0.5 else "Score: 1.2 (overshoot)"
        return f"0.{key % 10} looks reasonable"

    def expected_outcomes(self, keys, max_retries: int):
        """Replay the schedule independently: for each key, the expected
        outcome ("score" | "parse" | "transport") and total call count."""
        outcomes = {}
        for key in keys:
            rng = random.Random(f"{self.seed}:{key}")
            calls = 0
            outcome = "transport"
            for _ in range(max_retries + 1):
                calls += 1
                fail = rng.random() < self.fail_rate
                malformed = rng.random() < self.malformed_rate
                rng.random()
                if fail:
                    continue
                outcome = "parse" if malformed else "score"
                break
            outcomes[key] = (outcome, calls)
        return outcomes

"""Chat-completion clients: a thin HTTP client plus deterministic mocks,
and the shared retry policy used by generation and judging.

Real endpoints authenticate with a bearer token taken from an environment
variable (never from flags or config files).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .conversation import GenerationParams
from .errors import InputError, TransportError

DEFAULT_TOKEN_ENV = "CHAT_API_KEY"


class ChatClient(Protocol):
    def complete(self, prompt: str, params: GenerationParams) -> str: ...


@dataclass
class RetryPolicy:
    """Exponential backoff for transport failures: delays double from
    ``backoff_base`` up to ``backoff_cap`` seconds, at most ``max_retries``
    retries after the first attempt."""

    max_retries: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 8.0
    sleep: Callable[[float], None] = time.sleep

    def delay(self, attempt: int) -> float:
        return min(self.backoff_cap, self.backoff_base * (2**attempt))


def call_with_retries(fn: Callable[[], str], policy: RetryPolicy) -> str:
    attempt = 0
    while True:
        try:
            return fn()
        except TransportError:
            if attempt >= policy.max_retries:
                raise
            policy.sleep(policy.delay(attempt))
            attempt += 1


class HttpChatClient:
    """POSTs OpenAI-style chat-completion requests to a fixed endpoint.

    Retryable conditions (connection errors, HTTP 5xx/429, unparseable
    bodies) surface as TransportError; other HTTP errors are permanent.
    A minimum interval between request starts provides client-side rate
    limiting and is safe to share across threads.
    """

    def __init__(
        self,
        endpoint: str,
        token_env: str = DEFAULT_TOKEN_ENV,
        timeout: float = 120.0,
        min_interval: float = 0.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.token_env = token_env
        self.timeout = timeout
        self.min_interval = min_interval
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self._last_start = 0.0

    def _throttle(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._last_start + self.min_interval - now
            if wait > 0:
                time.sleep(wait)
                now = time.monotonic()
            self._last_start = now

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self._throttle()
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_new_tokens,
        }
        try:
            resp = self._session.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as e:
            raise TransportError(f"request to {self.endpoint} failed: {e}") from e
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(
                f"endpoint returned retryable status {resp.status_code}"
            )
        if resp.status_code != 200:
            raise InputError(
                f"endpoint returned status {resp.status_code}: {resp.text[:200]}"
            )
        try:
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed completion response: {e}") from e


class MockScriptClient:
    """Replays canned replies from a JSONL script file (one ``{"reply":
    ...}`` object per line), in request order.  Used by the CLI's
    ``mock:<script>`` endpoints for offline, reproducible runs."""

    def __init__(self, script_path: str | Path):
        self.replies: list[str] = []
        with open(script_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                line = line.strip()
                if not line:
                    continue
                try:
                    self.replies.append(json.loads(line)["reply"])
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise InputError(
                        f"{script_path}:{lineno + 1}: bad script row: {e}"
                    )
        self._next = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str, params: GenerationParams) -> str:
        with self._lock:
            if self._next >= len(self.replies):
                raise InputError(
                    f"mock script exhausted after {len(self.replies)} replies"
                )
            reply = self.replies[self._next]
            self._next += 1
        return reply


def make_client(endpoint: str, **kwargs) -> ChatClient:
    """``mock:<path>`` gives a script-replay client, anything else is
    treated as an HTTP endpoint URL."""
    if endpoint.startswith("mock:"):
        return MockScriptClient(endpoint[len("mock:") :])
    return HttpChatClient(endpoint, **kwargs)

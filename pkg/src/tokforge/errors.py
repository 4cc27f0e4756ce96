"""Exception types shared across the toolkit.

The CLI maps every ``TokforgeError`` to exit code 1 with a one-line message;
anything else is a bug and is allowed to traceback.
"""

from __future__ import annotations


class TokforgeError(Exception):
    """Base class for all expected failures."""


class InputError(TokforgeError):
    """Malformed or unusable input data (empty corpus, bad JSONL row, ...)."""


class DegenerateInputError(InputError):
    """Input is structurally valid but too small for the requested operation."""


class ParameterError(TokforgeError):
    """A parameter value is outside its documented range."""


class ConfigError(TokforgeError):
    """Unknown stage, field, or option in a configuration."""


class ConsistencyError(TokforgeError):
    """Two artifacts that must agree do not (vocab mismatch, unknown sample id, ...)."""


class EncodingError(TokforgeError):
    """Input text cannot be tokenized with the given vocabulary."""

    def __init__(self, message: str, span: bytes = b""):
        super().__init__(message)
        self.span = span


class DecodingError(TokforgeError):
    """Token ids outside the vocabulary."""


class TransportError(TokforgeError):
    """A chat-completion request failed at the HTTP/connection level."""


class ScoreParseError(TokforgeError):
    """A judge reply did not contain a usable score."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class DialogueParseError(TokforgeError):
    """Generated text could not be parsed into alternating turns."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw

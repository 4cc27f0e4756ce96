"""Shared text helpers: normalization, script classification, and the
token split used for fingerprints and n-gram models.

Chinese text has no whitespace word boundaries, so the token split treats
every CJK ideograph as its own token and falls back to whitespace-separated
runs for everything else.
"""

from __future__ import annotations

import unicodedata

# CJK unified ideographs plus the extension-A and compatibility blocks.
_CJK_RANGES = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2A6DF),
)

# Basic Latin letters plus the Latin-1 / Extended-A/B letter blocks.
_LATIN_RANGES = (
    (0x41, 0x5A),
    (0x61, 0x7A),
    (0xC0, 0xFF),
    (0x100, 0x24F),
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def is_latin(ch: str) -> bool:
    cp = ord(ch)
    if 0xD7 == cp or 0xF7 == cp:  # multiplication/division signs sit inside Latin-1
        return False
    return any(lo <= cp <= hi for lo, hi in _LATIN_RANGES)


def normalize(text: str) -> str:
    """NFC-normalize, collapse runs of whitespace to single spaces, strip."""
    text = unicodedata.normalize("NFC", text)
    return " ".join(text.split())


def split_tokens(text: str) -> list[str]:
    """Split normalized text into tokens: one token per CJK ideograph,
    whitespace-separated runs otherwise."""
    tokens: list[str] = []
    buf: list[str] = []
    for ch in normalize(text):
        if ch == " ":
            if buf:
                tokens.append("".join(buf))
                buf = []
        elif is_cjk(ch):
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(ch)
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    return tokens


def script_counts(text: str) -> tuple[int, int, int]:
    """Return (cjk, latin, total) counts over word characters.

    Whitespace and punctuation are excluded from the denominator so that
    markup-heavy lines still classify by their letters.
    """
    cjk = latin = total = 0
    for ch in text:
        if ch.isspace():
            continue
        if is_cjk(ch):
            cjk += 1
            total += 1
        elif is_latin(ch):
            latin += 1
            total += 1
        elif ch.isalnum():
            total += 1
    return cjk, latin, total

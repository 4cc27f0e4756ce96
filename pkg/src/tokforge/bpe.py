"""Byte-level BPE: training, vocabulary merging, encoding, decoding, file IO.

Everything operates on raw bytes with no whitespace pre-splitting, so merges
can cross word boundaries — required for Chinese, where lines carry no
whitespace segmentation.  Training keeps pair counts incrementally up to date
(lazy max-heap + per-sequence linked lists) instead of recounting after every
merge; encoding uses the mirrored min-heap pass so long lines stay
O(n log n) even with tens of thousands of merge rules.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    ConsistencyError,
    DecodingError,
    EncodingError,
    InputError,
    ParameterError,
)

logger = logging.getLogger(__name__)

ORIGIN_BASE = "base"
ORIGIN_EXTENSION = "extension"


@dataclass(frozen=True)
class Merge:
    """One merge rule: adjacent tokens ``left`` and ``right`` fuse into
    ``left + right``.  Rank is positional (index in the table)."""

    left: bytes
    right: bytes
    origin: str = ORIGIN_BASE


class Vocabulary:
    """Immutable token table.  Ids are contiguous from 0; every token is a
    unique, non-empty byte sequence.  ``byte_fallback`` records whether all
    256 single-byte tokens are present (which makes encoding total)."""

    __slots__ = ("tokens", "byte_fallback", "_ids")

    def __init__(self, tokens: Iterable[bytes], byte_fallback: bool | None = None):
        self.tokens: tuple[bytes, ...] = tuple(tokens)
        ids: dict[bytes, int] = {}
        for i, tok in enumerate(self.tokens):
            if not isinstance(tok, bytes) or len(tok) == 0:
                raise InputError(f"token at id {i} is not a non-empty byte sequence")
            if tok in ids:
                raise InputError(
                    f"duplicate token at ids {ids[tok]} and {i}: {tok!r}"
                )
            ids[tok] = i
        self._ids = ids
        has_all_bytes = all(bytes([b]) in ids for b in range(256))
        if byte_fallback is None:
            byte_fallback = has_all_bytes
        elif byte_fallback and not has_all_bytes:
            raise ConsistencyError(
                "byte_fallback vocabulary is missing some single-byte tokens"
            )
        self.byte_fallback = byte_fallback

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: bytes) -> bool:
        return token in self._ids

    def id_of(self, token: bytes) -> int | None:
        return self._ids.get(token)

    def token(self, token_id: int) -> bytes:
        if not 0 <= token_id < len(self.tokens):
            raise DecodingError(
                f"token id {token_id} outside vocabulary of size {len(self.tokens)}"
            )
        return self.tokens[token_id]

    @classmethod
    def bytes_only(cls) -> "Vocabulary":
        return cls([bytes([b]) for b in range(256)], byte_fallback=True)


class MergeTable:
    """Ordered merge rules.  Rank == index; all base-origin merges precede
    all extension-origin merges."""

    __slots__ = ("merges",)

    def __init__(self, merges: Iterable[Merge] = ()):
        self.merges: tuple[Merge, ...] = tuple(merges)
        seen_ext = False
        seen_pairs: set[tuple[bytes, bytes]] = set()
        for rank, m in enumerate(self.merges):
            if m.origin not in (ORIGIN_BASE, ORIGIN_EXTENSION):
                raise ConsistencyError(f"merge {rank} has unknown origin {m.origin!r}")
            if m.origin == ORIGIN_EXTENSION:
                seen_ext = True
            elif seen_ext:
                raise ConsistencyError(
                    f"base-origin merge at rank {rank} follows extension-origin merges"
                )
            pair = (m.left, m.right)
            if pair in seen_pairs:
                raise ConsistencyError(f"duplicate merge pair at rank {rank}: {pair!r}")
            seen_pairs.add(pair)

    def __len__(self) -> int:
        return len(self.merges)

    def __iter__(self):
        return iter(self.merges)

    def validate_against(self, vocab: Vocabulary) -> None:
        for rank, m in enumerate(self.merges):
            for part in (m.left, m.right, m.left + m.right):
                if part not in vocab:
                    raise ConsistencyError(
                        f"merge {rank} ({m.left!r}, {m.right!r}) references "
                        f"token {part!r} absent from the vocabulary"
                    )


class BpeTokenizer:
    """A vocabulary plus its merge table, ready to encode and decode.

    Instances are immutable once built; encode/decode are pure functions of
    the input and safe to call from multiple threads.
    """

    def __init__(self, vocab: Vocabulary, merges: MergeTable):
        merges.validate_against(vocab)
        self.vocab = vocab
        self.merges = merges
        # (left_id, right_id) -> (rank, merged_id); first (lowest) rank wins.
        table: dict[tuple[int, int], tuple[int, int]] = {}
        for rank, m in enumerate(merges):
            key = (vocab.id_of(m.left), vocab.id_of(m.right))
            if key not in table:
                table[key] = (rank, vocab.id_of(m.left + m.right))
        self._pair_table = table
        self._byte_ids: list[int | None] = [
            vocab.id_of(bytes([b])) for b in range(256)
        ]

    def encode(self, text: str) -> list[int]:
        return self.encode_bytes(text.encode("utf-8"))

    def encode_bytes(self, data: bytes) -> list[int]:
        ids: list[int] = []
        for off, b in enumerate(data):
            tok_id = self._byte_ids[b]
            if tok_id is None:
                span = _unencodable_span(data, off, self._byte_ids)
                raise EncodingError(
                    f"byte 0x{b:02x} at offset {off} has no token and byte "
                    f"fallback is off; offending span: {span!r}",
                    span=span,
                )
            ids.append(tok_id)
        n = len(ids)
        if n < 2 or not self._pair_table:
            return ids
        table = self._pair_table
        nxt = list(range(1, n + 1))
        prv = list(range(-1, n - 1))
        alive = bytearray(b"\x01") * n
        heap = []
        for i in range(n - 1):
            entry = table.get((ids[i], ids[i + 1]))
            if entry is not None:
                heap.append((entry[0], i))
        heapq.heapify(heap)
        while heap:
            rank, i = heapq.heappop(heap)
            if not alive[i]:
                continue
            j = nxt[i]
            if j >= n:
                continue
            entry = table.get((ids[i], ids[j]))
            if entry is None or entry[0] != rank:
                continue  # stale: the pair at this position changed
            ids[i] = entry[1]
            alive[j] = 0
            k = nxt[j]
            nxt[i] = k
            if k < n:
                prv[k] = i
            h = prv[i]
            if h >= 0:
                left = table.get((ids[h], ids[i]))
                if left is not None:
                    heapq.heappush(heap, (left[0], h))
            if k < n:
                right = table.get((ids[i], ids[k]))
                if right is not None:
                    heapq.heappush(heap, (right[0], i))
        return [ids[i] for i in range(n) if alive[i]]

    def decode_bytes(self, token_ids: Sequence[int]) -> bytes:
        return b"".join(self.vocab.token(i) for i in token_ids)

    def decode(self, token_ids: Sequence[int]) -> str:
        return self.decode_bytes(token_ids).decode("utf-8", errors="replace")

    def token_count(self, text: str) -> int:
        return len(self.encode(text))


def _unencodable_span(data: bytes, start: int, byte_ids: list[int | None]) -> bytes:
    end = start
    while end < len(data) and byte_ids[data[end]] is None:
        end += 1
    return data[start:end]


def train_bpe(
    lines: Iterable[str | bytes],
    target_vocab_size: int,
    byte_fallback: bool = True,
) -> BpeTokenizer:
    """Learn a byte-level BPE tokenizer over a line corpus.

    Each line is an independent sequence (merges never cross line breaks).
    The most frequent adjacent pair is merged at every step; ties go to the
    lexicographically smaller concatenated byte string, then the smaller
    left operand, which makes training fully deterministic.  Stops early
    with a warning when no mergeable pair remains.
    """
    line_counts: dict[bytes, int] = {}
    n_lines = 0
    for line in lines:
        n_lines += 1
        data = line.encode("utf-8") if isinstance(line, str) else bytes(line)
        line_counts[data] = line_counts.get(data, 0) + 1
    if n_lines == 0:
        raise InputError("empty corpus: nothing to train on")

    if byte_fallback:
        token_bytes = [bytes([b]) for b in range(256)]
        byte_to_id = {b: b for b in range(256)}
    else:
        observed = sorted({b for data in line_counts for b in data})
        token_bytes = [bytes([b]) for b in observed]
        byte_to_id = {b: i for i, b in enumerate(observed)}
    n_initial = len(token_bytes)
    if target_vocab_size < n_initial:
        raise ParameterError(
            f"target_vocab_size {target_vocab_size} is below the initial "
            f"alphabet size {n_initial}"
        )

    seqs: list[list[int]] = []
    weights: list[int] = []
    for data, w in line_counts.items():
        if len(data) >= 2:
            seqs.append([byte_to_id[b] for b in data])
            weights.append(w)

    pair_counts: dict[tuple[int, int], int] = {}
    pair_pos: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for s, seq in enumerate(seqs):
        w = weights[s]
        for i in range(len(seq) - 1):
            p = (seq[i], seq[i + 1])
            pair_counts[p] = pair_counts.get(p, 0) + w
            pair_pos.setdefault(p, set()).add((s, i))

    nxt = [list(range(1, len(seq) + 1)) for seq in seqs]
    prv = [list(range(-1, len(seq) - 1)) for seq in seqs]
    alive = [bytearray(b"\x01") * len(seq) for seq in seqs]

    # Lazy max-heap: entries are (-count, merged_bytes, left_bytes, l, r) and
    # are re-pushed whenever a pair's count changes; stale entries are
    # dropped on pop by comparing against the live count.
    heap: list[tuple[int, bytes, bytes, int, int]] = [
        (-c, token_bytes[l] + token_bytes[r], token_bytes[l], l, r)
        for (l, r), c in pair_counts.items()
    ]
    heapq.heapify(heap)

    def push(l: int, r: int, count: int) -> None:
        heapq.heappush(
            heap, (-count, token_bytes[l] + token_bytes[r], token_bytes[l], l, r)
        )

    def drop(q: tuple[int, int], s: int, i: int, w: int) -> None:
        c = pair_counts.get(q)
        if c is None:
            return
        nc = c - w
        if nc > 0:
            pair_counts[q] = nc
            push(q[0], q[1], nc)
        else:
            del pair_counts[q]
        positions = pair_pos.get(q)
        if positions is not None:
            positions.discard((s, i))
            if not positions:
                del pair_pos[q]

    def add(q: tuple[int, int], s: int, i: int, w: int) -> None:
        nc = pair_counts.get(q, 0) + w
        pair_counts[q] = nc
        pair_pos.setdefault(q, set()).add((s, i))
        push(q[0], q[1], nc)

    merge_rules: list[Merge] = []
    while len(token_bytes) < target_vocab_size and heap:
        negc, merged_bytes, left_bytes, l, r = heapq.heappop(heap)
        if pair_counts.get((l, r)) != -negc:
            continue
        right_bytes = token_bytes[r]
        new_id = len(token_bytes)
        token_bytes.append(merged_bytes)
        merge_rules.append(Merge(left_bytes, right_bytes))
        p = (l, r)
        for s, i in sorted(pair_pos.get(p, ())):
            seq, al = seqs[s], alive[s]
            if not al[i] or seq[i] != l:
                continue
            j = nxt[s][i]
            if j >= len(seq) or not al[j] or seq[j] != r:
                continue
            w = weights[s]
            drop(p, s, i, w)
            h = prv[s][i]
            if h >= 0 and al[h]:
                drop((seq[h], l), s, h, w)
            k = nxt[s][j]
            if k < len(seq) and al[k]:
                drop((r, seq[k]), s, j, w)
            seq[i] = new_id
            al[j] = 0
            nxt[s][i] = k
            if k < len(seq):
                prv[s][k] = i
            if h >= 0 and al[h]:
                add((seq[h], new_id), s, h, w)
            if k < len(seq) and al[k]:
                add((new_id, seq[k]), s, i, w)
        leftover = pair_counts.pop(p, 0)
        pair_pos.pop(p, None)
        assert leftover == 0, f"pair {p} not fully consumed: {leftover} left"

    if len(token_bytes) < target_vocab_size:
        logger.warning(
            "corpus exhausted mergeable pairs at vocabulary size %d "
            "(target was %d)",
            len(token_bytes),
            target_vocab_size,
        )

    vocab = Vocabulary(token_bytes, byte_fallback=True if byte_fallback else None)
    return BpeTokenizer(vocab, MergeTable(merge_rules))


def merge_vocab(base: BpeTokenizer, extension: BpeTokenizer) -> BpeTokenizer:
    """Graft an extension tokenizer onto a base one.

    The merged vocabulary is the set union: base tokens keep their ids,
    extension-only tokens are appended in extension order.  Base merges keep
    rank priority; extension merges follow (tagged as extension origin), with
    exact duplicates of a base rule dropped.
    """
    tokens = list(base.vocab.tokens)
    index = {tok: i for i, tok in enumerate(tokens)}
    for tok in extension.vocab.tokens:
        if tok not in index:
            index[tok] = len(tokens)
            tokens.append(tok)

    merged_rules = list(base.merges)
    seen_pairs = {(m.left, m.right) for m in merged_rules}
    for m in extension.merges:
        pair = (m.left, m.right)
        if pair in seen_pairs:
            continue
        seen_pairs.add(pair)
        merged_rules.append(Merge(m.left, m.right, ORIGIN_EXTENSION))

    vocab = Vocabulary(tokens, byte_fallback=None)
    return BpeTokenizer(vocab, MergeTable(merged_rules))


# --- tokenizer directory format -------------------------------------------
#
# vocab.txt:  one "<escaped token>\t<id>" line per token, in id order.
# merges.txt: one "<escaped left>\t<escaped right>\t<origin>" line per merge,
#             in rank order.
#
# Tokens that are valid UTF-8 free of control characters, tabs and
# backslashes are stored literally; anything else is written as \xNN byte
# escapes.  The two forms cannot collide (a literal token never contains a
# backslash), so round-trips are bit-exact and files stay diffable.

VOCAB_FILE = "vocab.txt"
MERGES_FILE = "merges.txt"


def escape_token(token: bytes) -> str:
    try:
        text = token.decode("utf-8")
    except UnicodeDecodeError:
        text = None
    if text is not None and not any(
        ord(ch) < 0x20 or ord(ch) == 0x7F or ch == "\\" for ch in text
    ):
        return text
    return "".join(f"\\x{b:02x}" for b in token)


def unescape_token(field: str) -> bytes:
    if "\\" not in field:
        return field.encode("utf-8")
    if len(field) % 4 != 0:
        raise InputError(f"malformed escaped token: {field!r}")
    out = bytearray()
    for i in range(0, len(field), 4):
        chunk = field[i : i + 4]
        if not chunk.startswith("\\x"):
            raise InputError(f"malformed escaped token: {field!r}")
        try:
            out.append(int(chunk[2:], 16))
        except ValueError:
            raise InputError(f"malformed escaped token: {field!r}") from None
    return bytes(out)


def save_tokenizer(tokenizer: BpeTokenizer, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / VOCAB_FILE, "w", encoding="utf-8", newline="\n") as f:
        for i, tok in enumerate(tokenizer.vocab.tokens):
            f.write(f"{escape_token(tok)}\t{i}\n")
    with open(out_dir / MERGES_FILE, "w", encoding="utf-8", newline="\n") as f:
        for m in tokenizer.merges:
            f.write(f"{escape_token(m.left)}\t{escape_token(m.right)}\t{m.origin}\n")


def load_tokenizer(in_dir: str | Path) -> BpeTokenizer:
    in_dir = Path(in_dir)
    tokens: list[bytes] = []
    with open(in_dir / VOCAB_FILE, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise InputError(f"{VOCAB_FILE}:{lineno + 1}: expected 2 fields")
            tok, rank = unescape_token(parts[0]), int(parts[1])
            if rank != len(tokens):
                raise InputError(
                    f"{VOCAB_FILE}:{lineno + 1}: rank {rank} out of order"
                )
            tokens.append(tok)
    merges: list[Merge] = []
    merges_path = in_dir / MERGES_FILE
    if merges_path.exists():
        with open(merges_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise InputError(f"{MERGES_FILE}:{lineno + 1}: expected 3 fields")
                merges.append(
                    Merge(unescape_token(parts[0]), unescape_token(parts[1]), parts[2])
                )
    return BpeTokenizer(Vocabulary(tokens), MergeTable(merges))

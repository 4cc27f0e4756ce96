"""Interpolated / add-k n-gram language models for perplexity scoring.

Tokens follow the shared split (CJK characters are single tokens, otherwise
whitespace runs).  Every document is scored including an end-of-text marker,
and unseen tokens map to an unknown symbol that is part of the closed
probability space, so per-context probabilities always sum to one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InputError, ParameterError
from .text import split_tokens

UNK = "<unk>"
BOS = "<s>"
EOT = "</s>"

SMOOTHING_ADD_K = "add-k"
SMOOTHING_INTERPOLATED = "interpolated"


@dataclass
class NgramLM:
    order: int
    smoothing: str
    add_k: float = 1.0
    interp_lambda: float = 0.5
    # counts[n-1]: context tuple of length n-1 -> Counter of next tokens
    counts: list[dict[tuple, Counter]] = field(default_factory=list)
    totals: list[dict[tuple, int]] = field(default_factory=list)
    vocab: frozenset = frozenset()

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def _map(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def prob(self, token: str, context: Sequence[str] = ()) -> float:
        """p(token | context) with the model's smoothing; context longer
        than order-1 is truncated from the left."""
        token = self._map(token)
        context = tuple(
            t if t in self.vocab or t == BOS else UNK
            for t in context[max(0, len(context) - (self.order - 1)) :]
        )
        if self.smoothing == SMOOTHING_ADD_K:
            return self._prob_add_k(token, context, len(context))
        return self._prob_interpolated(token, context, len(context))

    def _prob_add_k(self, token: str, context: tuple, level: int) -> float:
        ctx_counts = self.counts[level].get(context)
        c = ctx_counts[token] if ctx_counts else 0
        total = self.totals[level].get(context, 0)
        denom = total + self.add_k * self.vocab_size
        if denom == 0:
            raise InputError("zero-probability context with add_k = 0")
        return (c + self.add_k) / denom

    def _prob_interpolated(self, token: str, context: tuple, level: int) -> float:
        # Unigram floor is add-k so unknown tokens keep nonzero mass.
        if level == 0:
            return self._prob_add_k(token, (), 0)
        lower = self._prob_interpolated(token, context[1:], level - 1)
        total = self.totals[level].get(context, 0)
        if total == 0:
            return lower
        c = self.counts[level][context][token]
        lam = self.interp_lambda
        return lam * (c / total) + (1.0 - lam) * lower

    def logprob2(self, token: str, context: Sequence[str] = ()) -> float:
        p = self.prob(token, context)
        if p <= 0.0:
            raise InputError(f"zero probability for token {token!r}")
        return math.log2(p)

    @classmethod
    def uniform(cls, tokens: Iterable[str]) -> "NgramLM":
        """Uniform unigram model over ``tokens`` plus the end and unknown
        symbols; every document scores a perplexity of exactly vocab_size."""
        vocab = frozenset(tokens) | {EOT, UNK}
        counts = {(): Counter({t: 1 for t in vocab})}
        return cls(
            order=1,
            smoothing=SMOOTHING_ADD_K,
            add_k=0.0,
            counts=[counts],
            totals=[{(): len(vocab)}],
            vocab=vocab,
        )


def train_ngram_lm(
    docs: Iterable,
    order: int = 3,
    smoothing: str = SMOOTHING_INTERPOLATED,
    add_k: float = 1.0,
    interp_lambda: float = 0.5,
) -> NgramLM:
    """Count n-grams of every level up to ``order`` over the documents.

    ``docs`` may be Documents or plain strings.  Each document contributes
    its token sequence plus one end marker, with start padding for the
    higher-order contexts.
    """
    if order < 1:
        raise ParameterError(f"order must be >= 1, got {order}")
    if smoothing not in (SMOOTHING_ADD_K, SMOOTHING_INTERPOLATED):
        raise ParameterError(f"unknown smoothing {smoothing!r}")
    if add_k < 0 or (smoothing == SMOOTHING_ADD_K and add_k <= 0):
        raise ParameterError("add_k must be positive")
    if not 0.0 < interp_lambda < 1.0 and smoothing == SMOOTHING_INTERPOLATED:
        raise ParameterError("interp_lambda must lie in (0, 1)")

    counts: list[dict[tuple, Counter]] = [{} for _ in range(order)]
    totals: list[dict[tuple, int]] = [{} for _ in range(order)]
    vocab: set[str] = {EOT, UNK}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        text = doc if isinstance(doc, str) else doc.text
        tokens = split_tokens(text)
        vocab.update(tokens)
        seq = tokens + [EOT]
        padded = [BOS] * (order - 1) + seq
        for t in range(len(seq)):
            pos = t + order - 1
            for level in range(order):
                context = tuple(padded[pos - level : pos])
                ctx_counts = counts[level].setdefault(context, Counter())
                ctx_counts[seq[t]] += 1
                totals[level][context] = totals[level].get(context, 0) + 1
    if n_docs == 0:
        raise InputError("no documents to train on")
    return NgramLM(
        order=order,
        smoothing=smoothing,
        add_k=add_k,
        interp_lambda=interp_lambda,
        counts=counts,
        totals=totals,
        vocab=frozenset(vocab),
    )


def perplexity(lm: NgramLM, doc) -> float:
    """exp2 of the mean negative log2 probability over the document's
    tokens including the end marker."""
    text = doc if isinstance(doc, str) else doc.text
    tokens = split_tokens(text)
    if not tokens:
        raise InputError("perplexity is undefined for an empty document")
    seq = tokens + [EOT]
    padded = [BOS] * (lm.order - 1) + seq
    log_terms = []
    for t in range(len(seq)):
        pos = t + lm.order - 1
        context = tuple(padded[pos - (lm.order - 1) : pos])
        log_terms.append(lm.logprob2(seq[t], context))
    return 2.0 ** (-math.fsum(log_terms) / len(seq))

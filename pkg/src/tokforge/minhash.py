"""MinHash signatures with banded LSH candidate lookup.

Shingle hashing goes through blake2b so signatures are stable across
platforms and interpreter runs; the permutation parameters come from a
caller-supplied seed.
"""

from __future__ import annotations

import hashlib
import random
from typing import Iterable

import numpy as np

from .errors import ParameterError

# Smallest prime above 2**32; with a, b < 2**32 the products below stay
# within uint64.
_PRIME = np.uint64(4294967311)


def shingle_hash(shingle: str) -> int:
    return int.from_bytes(
        hashlib.blake2b(shingle.encode("utf-8"), digest_size=4).digest(), "big"
    )


class MinHasher:
    def __init__(self, num_hashes: int = 128, seed: int = 0):
        if num_hashes < 1:
            raise ParameterError(f"num_hashes must be >= 1, got {num_hashes}")
        rng = random.Random(seed)
        self.num_hashes = num_hashes
        self._a = np.array(
            [rng.randrange(1, 2**32) for _ in range(num_hashes)], dtype=np.uint64
        )
        self._b = np.array(
            [rng.randrange(0, 2**32) for _ in range(num_hashes)], dtype=np.uint64
        )

    def signature(self, shingles: Iterable[str]) -> np.ndarray:
        hashes = np.array([shingle_hash(s) for s in shingles], dtype=np.uint64)
        if hashes.size == 0:
            return np.full(self.num_hashes, _PRIME, dtype=np.uint64)
        values = (self._a[:, None] * hashes[None, :] + self._b[:, None]) % _PRIME
        return values.min(axis=1)


def estimate_jaccard(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    return float(np.mean(sig_a == sig_b))


class LshIndex:
    """Band the signature and bucket on each band; a collision in any band
    makes two signatures candidates for full comparison."""

    def __init__(self, num_hashes: int, rows_per_band: int = 4):
        self.rows = min(rows_per_band, num_hashes)
        self.bands = max(1, num_hashes // self.rows)
        self._buckets: list[dict[bytes, list[int]]] = [
            {} for _ in range(self.bands)
        ]

    def _band_keys(self, sig: np.ndarray):
        for band in range(self.bands):
            yield band, sig[band * self.rows : (band + 1) * self.rows].tobytes()

    def add(self, key: int, sig: np.ndarray) -> None:
        for band, bucket_key in self._band_keys(sig):
            self._buckets[band].setdefault(bucket_key, []).append(key)

    def candidates(self, sig: np.ndarray) -> set[int]:
        found: set[int] = set()
        for band, bucket_key in self._band_keys(sig):
            found.update(self._buckets[band].get(bucket_key, ()))
        return found

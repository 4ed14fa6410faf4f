#    Copyright 2025 provlink developers
#
#    Licensed under the Apache License, Version 2.0 (the "License");
#    you may not use this file except in compliance with the License.
#    You may obtain a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS,
#    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#    See the License for the specific language governing permissions and
#    limitations under the License.

"""Hashed character n-gram encoder.

Every character n-gram of the text, for n in the configured range, is hashed
into one of raw_dim buckets. The bucket of an n-gram g is

    int.from_bytes(blake2b(utf8(g), digest_size=8, key=seed), "little") % raw_dim

with the seed as 8 little-endian signed bytes. Bucket counts are L2
normalized; text without n-grams encodes to the zero vector."""

from hashlib import blake2b
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from provlink.text.encoder import TextEncoder


def ngram_bucket(ngram: str, raw_dim: int, seed: int = 0) -> int:
    """Return hash bucket of n-gram."""
    digest = blake2b(
        ngram.encode("utf-8"),
        digest_size=8,
        key=seed.to_bytes(8, "little", signed=True),
    ).digest()
    return int.from_bytes(digest, "little") % raw_dim


class HashedNgramEncoder(TextEncoder):
    def __init__(
        self,
        raw_dim: int = 4096,
        ngram_range: Tuple[int, int] = (1, 3),
        hash_seed: int = 0,
    ):
        """Encoder counting hashed character n-grams.

        Parameters
        ----------
        raw_dim: int = 4096
            Number of hash buckets.
        ngram_range: Tuple[int, int] = (1, 3)
            Smallest and largest n-gram length.
        hash_seed: int = 0
            Seed keying the hash.
        """
        low, high = ngram_range
        if not 1 <= low <= high:
            raise ValueError(f"Invalid ngram range {ngram_range}.")
        if raw_dim < 1:
            raise ValueError("raw_dim must be positive.")
        self._raw_dim = raw_dim
        self._ngram_range = (low, high)
        self._hash_seed = hash_seed
        self._buckets: Dict[str, int] = {}

    @property
    def raw_dim(self) -> int:
        return self._raw_dim

    @property
    def ngram_range(self) -> Tuple[int, int]:
        return self._ngram_range

    def ngrams(self, text: str) -> Iterator[str]:
        """Return iterator over character n-grams of text, shortest first."""
        low, high = self._ngram_range
        for n in range(low, high + 1):
            for start in range(len(text) - n + 1):
                yield text[start : start + n]

    def bucket(self, ngram: str) -> int:
        bucket = self._buckets.get(ngram)
        if bucket is None:
            bucket = ngram_bucket(ngram, self._raw_dim, self._hash_seed)
            self._buckets[ngram] = bucket
        return bucket

    def counts(self, text: str) -> np.ndarray:
        """Return unnormalized bucket counts of text. The counts sum to the
        number of n-grams."""
        buckets: List[int] = [self.bucket(ngram) for ngram in self.ngrams(text)]
        return np.bincount(
            np.asarray(buckets, dtype=np.int64), minlength=self._raw_dim
        ).astype(np.float64)

    def encode(self, text: str, entity: Optional[str] = None) -> np.ndarray:
        counts = self.counts(text)
        norm = np.linalg.norm(counts)
        if norm == 0:
            return counts
        return counts / norm

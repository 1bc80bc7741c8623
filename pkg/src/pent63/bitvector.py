"""Fixed-size bit vector over numpy uint64 words with word-parallel shifted unions."""

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ResourceError

logger = logging.getLogger(__name__)

WORD_BITS = 64
_ONE = np.uint64(1)


def _word_count(size: int) -> int:
    return (size + WORD_BITS - 1) // WORD_BITS


def _or_shifted(dst: np.ndarray, src: np.ndarray, shift: int, lo: int, hi: int) -> None:
    """dst[lo:hi] |= (src << shift)[lo:hi], bit i of word j being bit 64*j + i."""
    q, r = divmod(shift, WORD_BITS)
    start = max(lo, q)
    if start >= hi:
        return
    if r == 0:
        dst[start:hi] |= src[start - q : hi - q]
        return
    dst[start:hi] |= src[start - q : hi - q] << np.uint64(r)
    carry_start = max(start, q + 1)
    if carry_start < hi:
        dst[carry_start:hi] |= src[carry_start - q - 1 : hi - q - 1] >> np.uint64(WORD_BITS - r)


class BitVector:
    """Bits 0..size-1 packed little-endian into uint64 words."""

    __slots__ = ("size", "words")

    def __init__(self, size: int, words: np.ndarray | None = None):
        if size < 0:
            raise ValueError(f"size must be non-negative, got {size}")
        self.size = size
        if words is None:
            try:
                words = np.zeros(_word_count(size), dtype=np.uint64)
            except MemoryError as e:
                raise ResourceError(f"Cannot allocate a bit vector of {size} bits") from e
        elif len(words) != _word_count(size):
            expected = _word_count(size)
            raise ValueError(f"expected {expected} words for {size} bits, got {len(words)}")
        self.words = words

    @classmethod
    def from_indices(cls, size: int, indices: Iterable[int]) -> "BitVector":
        vec = cls(size)
        idx = np.fromiter((i for i in indices if 0 <= i < size), dtype=np.int64)
        if idx.size:
            np.bitwise_or.at(
                vec.words, idx // WORD_BITS, _ONE << (idx % WORD_BITS).astype(np.uint64)
            )
        return vec

    def _mask_tail(self) -> None:
        tail = self.size % WORD_BITS
        if tail and len(self.words):
            self.words[-1] &= (_ONE << np.uint64(tail)) - _ONE

    def __getitem__(self, i: int) -> bool:
        if not 0 <= i < self.size:
            raise IndexError(f"bit {i} outside [0, {self.size})")
        return bool((self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & _ONE)

    def set(self, i: int) -> None:
        if not 0 <= i < self.size:
            raise IndexError(f"bit {i} outside [0, {self.size})")
        self.words[i // WORD_BITS] |= _ONE << np.uint64(i % WORD_BITS)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.size == other.size and bool(np.array_equal(self.words, other.words))

    def issubset(self, other: "BitVector") -> bool:
        if self.size != other.size:
            raise ValueError("bit vectors differ in size")
        return not np.any(self.words & ~other.words)

    def count(self) -> int:
        return int(np.unpackbits(self.words.view(np.uint8)).sum())

    def to_bool_array(self) -> np.ndarray:
        raw = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.size].astype(bool)

    def zeros(self) -> list[int]:
        """Indices of unset bits in increasing order."""
        return [int(i) for i in np.flatnonzero(~self.to_bool_array())]

    def first_zero(self, start: int = 0) -> int | None:
        bits = self.to_bool_array()[start:]
        hits = np.flatnonzero(~bits)
        return int(hits[0]) + start if hits.size else None

    def shift_union(self, shifts: Sequence[int], threads: int = 1) -> "BitVector":
        """OR of (self << k) over all k in shifts, truncated to size.

        The destination is split into disjoint word ranges, one task each, so the
        result does not depend on the thread count.
        """
        out = BitVector(self.size)
        nwords = len(self.words)
        if nwords == 0:
            return out
        ordered = sorted({k for k in shifts if 0 <= k < self.size})
        src = self.words

        def fill(bounds: tuple[int, int]) -> None:
            lo, hi = bounds
            for k in ordered:
                if k // WORD_BITS >= hi:
                    break
                _or_shifted(out.words, src, k, lo, hi)

        if threads <= 1 or nwords < 4096:
            fill((0, nwords))
        else:
            step = -(-nwords // threads)
            chunks = [(lo, min(lo + step, nwords)) for lo in range(0, nwords, step)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, chunks))
        out._mask_tail()
        return out

    def to_bytes(self) -> bytes:
        """Raw dump: bit N is bit N mod 8 of byte N div 8."""
        return self.words.astype("<u8").tobytes()[: (self.size + 7) // 8]

    @classmethod
    def from_bytes(cls, data: bytes, size: int) -> "BitVector":
        if len(data) != (size + 7) // 8:
            raise ValueError(f"expected {(size + 7) // 8} bytes for {size} bits, got {len(data)}")
        padded = data + b"\x00" * (_word_count(size) * 8 - len(data))
        vec = cls(size, np.frombuffer(padded, dtype="<u8").astype(np.uint64))
        vec._mask_tail()
        return vec

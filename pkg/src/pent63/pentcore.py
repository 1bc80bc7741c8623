"""Pentagonal numbers and representability by weighted pentagonal sums."""

import logging
import threading
from collections.abc import Sequence
from dataclasses import dataclass
from math import isqrt
from typing import Any

from .bitvector import BitVector
from .errors import ArithmeticRangeError, ContractViolation
from .models import INT_BOUND, CoefficientVector, coefficient_tuple

logger = logging.getLogger(__name__)

# Largest x with 3x^2 < 2^63.
MAX_ARGUMENT = isqrt((2**63 - 1) // 3)

Coefficients = CoefficientVector | Sequence[int]


def pentagonal(x: int) -> int:
    """P5(x) = (3x^2 - x) / 2."""
    if x < 0:
        raise ContractViolation(f"pentagonal argument must be non-negative, got {x}")
    if x > MAX_ARGUMENT:
        raise ArithmeticRangeError(f"pentagonal argument {x} exceeds {MAX_ARGUMENT}")
    return (3 * x * x - x) // 2


def max_argument(limit: int) -> int:
    """Largest x >= 0 with P5(x) <= limit (limit >= 0)."""
    return (isqrt(24 * limit + 1) + 1) // 6


def pentagonal_values_upto(limit: int) -> list[int]:
    if limit < 0:
        return []
    return [pentagonal(x) for x in range(max_argument(limit) + 1)]


def is_pentagonal(n: int) -> int | None:
    """Return x with P5(x) = n, or None; uses 24n + 1 = (6x - 1)^2."""
    if n < 0:
        return None
    if n == 0:
        return 0
    disc = 24 * n + 1
    r = isqrt(disc)
    if r * r != disc or r % 6 != 5:
        return None
    return (r + 1) // 6


def _check_limit(limit: int) -> None:
    if limit < 0:
        raise ContractViolation(f"limit must be non-negative, got {limit}")
    if limit >= INT_BOUND:
        raise ArithmeticRangeError(f"limit {limit} exceeds 2^62")


@dataclass(frozen=True)
class RepresentabilityTable:
    """bits[N] is set iff N = sum a_i P5(x_i) with x_i >= 0, for N <= limit."""

    coeffs: tuple[int, ...]
    limit: int
    bits: BitVector

    def __getitem__(self, n: int) -> bool:
        return self.bits[n]

    def represents(self, n: int) -> bool:
        return self.bits[n]

    def exceptional(self) -> list[int]:
        return self.bits.zeros()

    def truant(self) -> int | None:
        return self.bits.first_zero(1) if self.limit >= 1 else None


def build_table(a: Coefficients, limit: int, threads: int = 1) -> RepresentabilityTable:
    """Sieve the representable set of [0, limit] by iterated shifted-OR convolution."""
    coeffs = coefficient_tuple(a)
    _check_limit(limit)
    size = limit + 1
    first, rest = coeffs[0], coeffs[1:]
    bits = BitVector.from_indices(size, (first * p for p in pentagonal_values_upto(limit // first)))
    for c in rest:
        shifts = [c * p for p in pentagonal_values_upto(limit // c)]
        bits = bits.shift_union(shifts, threads=threads)
    logger.debug(f"Built table for {coeffs} up to {limit}")
    return RepresentabilityTable(coeffs=coeffs, limit=limit, bits=bits)


def exceptional_set(a: Coefficients, limit: int, threads: int = 1) -> list[int]:
    """E(P_{5,a}) intersected with [0, limit], increasing."""
    return build_table(a, limit, threads=threads).exceptional()


def truant(a: Coefficients, search_limit: int, threads: int = 1) -> int | None:
    """Least N >= 1 not represented, or None if [1, search_limit] is covered."""
    if search_limit < 1:
        raise ContractViolation(f"search_limit must be at least 1, got {search_limit}")
    return build_table(a, search_limit, threads=threads).truant()


class RepresentabilityOracle:
    """Point queries for large isolated N.

    The two smallest coefficients are looked up in a cached sieve of size
    ``cache_size``; the remaining ones are enumerated in descending order.
    """

    def __init__(self, cache_size: int = 2**20):
        if cache_size < 1:
            raise ContractViolation(f"cache_size must be positive, got {cache_size}")
        self.cache_size = cache_size
        self._pair_tables: dict[tuple[int, int], BitVector] = {}
        self._lock = threading.Lock()

    def _pair_bits(self, a1: int, a2: int) -> BitVector:
        key = (a1, a2)
        with self._lock:
            bits = self._pair_tables.get(key)
            if bits is None:
                bits = build_table(key, self.cache_size - 1).bits
                self._pair_tables[key] = bits
                logger.debug(f"Cached pair table for {key}")
        return bits

    @staticmethod
    def _single_solution(a1: int, m: int) -> tuple[int] | None:
        if m % a1:
            return None
        x = is_pentagonal(m // a1)
        return None if x is None else (x,)

    @staticmethod
    def _pair_solution(a1: int, a2: int, m: int) -> tuple[int, int] | None:
        for x2 in range(max_argument(m // a2), -1, -1):
            rem = m - a2 * pentagonal(x2)
            if rem % a1 == 0:
                x1 = is_pentagonal(rem // a1)
                if x1 is not None:
                    return x1, x2
        return None

    def _tail_holds(self, tail: tuple[int, ...], m: int) -> bool:
        if len(tail) == 1:
            return self._single_solution(tail[0], m) is not None
        if m < self.cache_size:
            return self._pair_bits(*tail)[m]
        return self._pair_solution(*tail, m) is not None

    def _tail_solution(self, tail: tuple[int, ...], m: int) -> tuple[int, ...] | None:
        if len(tail) == 1:
            return self._single_solution(tail[0], m)
        if m < self.cache_size and not self._pair_bits(*tail)[m]:
            return None
        return self._pair_solution(*tail, m)

    def _descend(
        self, outer: tuple[int, ...], tail: tuple[int, ...], m: int, witness: bool
    ) -> tuple[int, ...] | None:
        if not outer:
            if witness:
                return self._tail_solution(tail, m)
            return () if self._tail_holds(tail, m) else None
        c = outer[0]
        for x in range(max_argument(m // c), -1, -1):
            sub = self._descend(outer[1:], tail, m - c * pentagonal(x), witness)
            if sub is not None:
                return (x, *sub)
        return None

    def _search(self, a: Coefficients, n: int, witness: bool) -> tuple[int, ...] | None:
        coeffs = coefficient_tuple(a)
        if n < 0:
            raise ContractViolation(f"N must be non-negative, got {n}")
        if n >= INT_BOUND:
            raise ArithmeticRangeError(f"N = {n} exceeds 2^62")
        order = sorted(range(len(coeffs)), key=lambda i: coeffs[i])
        tail_idx = tuple(sorted(order[:2]))
        outer_idx = tuple(sorted(order[2:], key=lambda i: -coeffs[i]))
        found = self._descend(
            tuple(coeffs[i] for i in outer_idx), tuple(coeffs[i] for i in tail_idx), n, witness
        )
        if found is None or not witness:
            return found
        xs = [0] * len(coeffs)
        for i, x in zip(outer_idx + tail_idx, found, strict=True):
            xs[i] = x
        return tuple(xs)

    def is_representable(self, a: Coefficients, n: int) -> bool:
        return self._search(a, n, witness=False) is not None

    def representation(self, a: Coefficients, n: int) -> tuple[int, ...] | None:
        """One x with sum a_i P5(x_i) = n, in the order of the given coefficients."""
        return self._search(a, n, witness=True)


_default_oracle: RepresentabilityOracle | None = None


def get_oracle() -> RepresentabilityOracle:
    """Process-wide oracle sized from the configured cache size."""
    global _default_oracle
    if _default_oracle is None:
        from .config import get_settings

        _default_oracle = RepresentabilityOracle(get_settings().table_cache_size)
    return _default_oracle


def is_representable(a: Coefficients, n: int) -> bool:
    return get_oracle().is_representable(a, n)


def representation(a: Coefficients, n: int) -> tuple[int, ...] | None:
    return get_oracle().representation(a, n)


def evaluate(a: Coefficients, xs: Sequence[int]) -> int:
    """sum a_i P5(x_i)."""
    coeffs = coefficient_tuple(a)
    if len(xs) != len(coeffs):
        raise ContractViolation(f"{len(xs)} arguments for {len(coeffs)} coefficients")
    return sum(c * pentagonal(x) for c, x in zip(coeffs, xs, strict=True))


def export_bits(table: RepresentabilityTable) -> bytes:
    return table.bits.to_bytes()


def import_bits(data: bytes, a: Coefficients, limit: int) -> RepresentabilityTable:
    _check_limit(limit)
    try:
        bits = BitVector.from_bytes(data, limit + 1)
    except ValueError as e:
        raise ContractViolation(f"Bit dump does not match limit {limit}: {e}") from e
    return RepresentabilityTable(coeffs=coefficient_tuple(a), limit=limit, bits=bits)


def export_json(table: RepresentabilityTable) -> dict[str, Any]:
    return {
        "coeffs": list(table.coeffs),
        "limit": table.limit,
        "exceptional_list": table.exceptional(),
    }

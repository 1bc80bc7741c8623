"""Pydantic models for the domain objects shared across modules."""

from collections.abc import Sequence
from typing import Any

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Entries and limits are validated against this bound so that 3x^2 and sums of
# products stay inside signed 64-bit arithmetic.
INT_BOUND = 2**62


def format_tuple(coeffs: Sequence[int]) -> str:
    """Render a coefficient tuple as ``(1,2,4,5)``."""
    return "(" + ",".join(str(c) for c in coeffs) + ")"


class CoefficientVector(BaseModel):
    """The tuple a = (a1 <= ... <= ak) defining the sum of pentagonal numbers."""

    model_config = ConfigDict(frozen=True)

    coeffs: tuple[int, ...]

    @field_validator("coeffs")
    @classmethod
    def validate_coeffs(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("at least one coefficient is required")
        if any(c < 1 or c >= INT_BOUND for c in v):
            raise ValueError(f"coefficients must lie in [1, 2^62), got {v}")
        if any(x > y for x, y in zip(v, v[1:], strict=False)):
            raise ValueError(f"coefficients must be non-decreasing, got {v}")
        return v

    @classmethod
    def of(cls, *coeffs: int) -> "CoefficientVector":
        return cls(coeffs=tuple(coeffs))

    @property
    def k(self) -> int:
        return len(self.coeffs)

    @property
    def A(self) -> int:  # noqa: N802
        """Sum of the coefficients."""
        return sum(self.coeffs)

    @property
    def label(self) -> str:
        return format_tuple(self.coeffs)

    def extend(self, a: int) -> "CoefficientVector":
        return CoefficientVector(coeffs=(*self.coeffs, a))

    def __len__(self) -> int:
        return len(self.coeffs)

    def __str__(self) -> str:
        return self.label


def coefficient_tuple(value: "CoefficientVector | Sequence[int]") -> tuple[int, ...]:
    """Coefficients as a plain tuple; order is kept, positivity is enforced."""
    if isinstance(value, CoefficientVector):
        return value.coeffs
    coeffs = tuple(int(c) for c in value)
    if not coeffs or any(c < 1 or c >= INT_BOUND for c in coeffs):
        raise ValueError(f"coefficients must be a non-empty list of positive integers: {coeffs}")
    return coeffs


class ZLattice(BaseModel):
    """Positive-definite integral lattice given by its Gram matrix."""

    model_config = ConfigDict(frozen=True)

    gram: tuple[tuple[int, ...], ...]

    @field_validator("gram")
    @classmethod
    def validate_gram(cls, v: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
        n = len(v)
        if n < 1 or n > 4:
            raise ValueError(f"rank must be between 1 and 4, got {n}")
        if any(len(row) != n for row in v):
            raise ValueError("gram matrix must be square")
        for i in range(n):
            for j in range(i):
                if v[i][j] != v[j][i]:
                    raise ValueError("gram matrix must be symmetric")
        for m in range(1, n + 1):
            if integer_determinant([row[:m] for row in v[:m]]) <= 0:
                raise ValueError(f"gram matrix is not positive definite: {v}")
        return v

    @classmethod
    def diagonal(cls, *entries: int) -> "ZLattice":
        n = len(entries)
        rows = (tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n))
        return cls(gram=tuple(rows))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "ZLattice":
        return cls(gram=tuple(tuple(int(x) for x in row) for row in rows))

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def det(self) -> int:
        return integer_determinant(self.gram)

    def Q(self, v: Sequence[int]) -> int:  # noqa: N802
        return self.B(v, v)

    def B(self, u: Sequence[int], v: Sequence[int]) -> int:  # noqa: N802
        g = self.gram
        n = len(g)
        return sum(u[i] * g[i][j] * v[j] for i in range(n) for j in range(n))

    def to_json(self) -> dict[str, Any]:
        return {"rank": self.rank, "gram": [list(row) for row in self.gram]}


def integer_determinant(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


LatticeVector = tuple[int, ...]


class BinaryForm(BaseModel):
    """The binary lattice [A, b, a] with Gram matrix ((A, b), (b, a))."""

    model_config = ConfigDict(frozen=True)

    A: int = Field(..., ge=1)
    b: int
    a: int = Field(..., ge=1)

    @model_validator(mode="after")
    def validate_definite(self) -> "BinaryForm":
        if self.A * self.a - self.b * self.b <= 0:
            raise ValueError(f"[{self.A},{self.b},{self.a}] is not positive definite")
        return self

    @property
    def discriminant(self) -> int:
        """A*a - b^2, the determinant of the binary form."""
        return self.A * self.a - self.b * self.b


class CosetClass(BaseModel):
    """A class u in K/sK, stored by reduced coordinates."""

    model_config = ConfigDict(frozen=True)

    coords: tuple[int, ...]
    modulus: int = Field(..., ge=1)

    @model_validator(mode="after")
    def validate_reduced(self) -> "CosetClass":
        if any(not 0 <= c < self.modulus for c in self.coords):
            raise ValueError(f"coordinates {self.coords} are not reduced mod {self.modulus}")
        return self

    @classmethod
    def reduce(cls, coords: Sequence[int], modulus: int) -> "CosetClass":
        return cls(coords=tuple(c % modulus for c in coords), modulus=modulus)


class ScaledIsometry(BaseModel):
    """tau = M/d with M^T G_L M = d^2 G_K, mapping d*K into L."""

    model_config = ConfigDict(frozen=True)

    numerator: tuple[tuple[int, ...], ...]
    denom: int = Field(..., ge=1)
    source: ZLattice
    target: ZLattice

    @model_validator(mode="after")
    def validate_scaling(self) -> "ScaledIsometry":
        m, d = self.numerator, self.denom
        gl, gk = self.target.gram, self.source.gram
        n = self.source.rank
        if len(m) != self.target.rank or any(len(row) != n for row in m):
            raise ValueError("numerator shape does not match source and target ranks")
        for i in range(n):
            for j in range(n):
                lhs = sum(
                    m[p][i] * gl[p][q] * m[q][j]
                    for p in range(len(m))
                    for q in range(len(m))
                )
                if lhs != d * d * gk[i][j]:
                    raise ValueError(f"M^T G_L M != {d}^2 G_K at ({i},{j})")
        return self

    def image(self, v: Sequence[int]) -> tuple[int, ...]:
        """M v, i.e. d * tau(v) in target coordinates."""
        return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in self.numerator)

    def maps_into_target(self, v: Sequence[int]) -> bool:
        """Whether tau(v) lies in L (M v = 0 mod d)."""
        return all(x % self.denom == 0 for x in self.image(v))

    def to_json(self) -> dict[str, Any]:
        return {
            "numerator": [list(r) for r in self.numerator],
            "denom": self.denom,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
        }


Pair = tuple[int, int]


class GoodSet(BaseModel):
    """A set of residue pairs (alpha, beta) modulo s."""

    modulus: int = Field(..., ge=1)
    pairs: frozenset[Pair] = Field(default_factory=frozenset)
    certified: bool = Field(
        default=True, description="False unless the genus is known to be complete"
    )
    flags: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_pairs(self) -> "GoodSet":
        s = self.modulus
        for alpha, beta in self.pairs:
            if not (0 <= alpha < s and 0 <= beta < s):
                raise ValueError(f"pair {(alpha, beta)} is not reduced mod {s}")
        return self

    def sorted_pairs(self) -> list[Pair]:
        return sorted(self.pairs)

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def to_json(self) -> dict[str, Any]:
        return {
            "modulus": self.modulus,
            "pairs": [list(p) for p in self.sorted_pairs()],
            "certified": self.certified,
            "flags": list(self.flags),
        }


class NodeStatus(StrEnum):
    UNIVERSAL = "universal"
    NON_UNIVERSAL = "non-universal"
    FRONTIER = "frontier"
    UNDECIDED = "undecided"


class EscalationNode(BaseModel):
    """Node of the escalation tree; the root carries the empty tuple."""

    coeffs: tuple[int, ...]
    status: NodeStatus
    truant: int | None = None
    children: list["EscalationNode"] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_status(self) -> "EscalationNode":
        if self.status == NodeStatus.UNIVERSAL and self.truant is not None:
            raise ValueError(f"universal node {self.coeffs} cannot carry a truant")
        if self.status == NodeStatus.NON_UNIVERSAL and self.truant is None:
            raise ValueError(f"non-universal node {self.coeffs} needs a truant")
        for child in self.children:
            if len(child.coeffs) != len(self.coeffs) + 1 or child.coeffs[:-1] != self.coeffs:
                raise ValueError(f"{child.coeffs} does not extend {self.coeffs}")
        return self

    @property
    def label(self) -> str:
        return format_tuple(self.coeffs)

    def walk(self):
        """Depth-first pre-order traversal."""
        yield self
        for child in self.children:
            yield from child.walk()

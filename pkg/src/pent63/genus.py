"""Isometry classes in the genus of a quaternary lattice, reached by p-neighbours.

For an odd prime p not dividing det(L) every class of the genus is reachable from
L by a chain of p-neighbours, so closing {L} under neighbour steps at one such
prime enumerates the genus. A second prime is used as a cross-check.
"""

import logging
from collections import deque
from collections.abc import Iterator, Sequence
from itertools import product

from sympy import Matrix as SymMatrix
from sympy import mod_inverse, nextprime
from sympy.matrices.normalforms import hermite_normal_form

from .errors import ContractViolation, Pent63Error
from .lattice import inner, is_isometric, lll_reduce, matvec, vectors_of_norm
from .models import ZLattice

logger = logging.getLogger(__name__)

# Norms counted by the cheap isometry invariant.
SIGNATURE_NORMS = range(1, 7)


def neighbour_primes(lattice: ZLattice, count: int = 2) -> list[int]:
    """The ``count`` least odd primes not dividing det(L)."""
    if count < 1:
        raise ContractViolation(f"need at least one prime, got {count}")
    primes: list[int] = []
    p = 2
    while len(primes) < count:
        p = int(nextprime(p))
        if lattice.det % p:
            primes.append(p)
    return primes


def isotropic_lines(lattice: ZLattice, p: int) -> Iterator[tuple[int, ...]]:
    """x mod p with leading non-zero entry 1 and Q(x) = 0 mod p."""
    for x in product(range(p), repeat=lattice.rank):
        if next((c for c in x if c), 0) == 1 and lattice.Q(x) % p == 0:
            yield x


def _lift(lattice: ZLattice, x: Sequence[int], p: int) -> tuple[tuple[int, ...], int]:
    """x' = x mod p with Q(x') = 0 mod p^2, and an index i with p not dividing B(x', e_i)."""
    gx = matvec(lattice.gram, x)
    i = next((j for j, c in enumerate(gx) if c % p), None)
    if i is None:
        raise ContractViolation(f"{tuple(x)} lies in the radical mod {p}")
    t = -(lattice.Q(x) // p) * int(mod_inverse(2 * gx[i], p)) % p
    lifted = list(x)
    lifted[i] += p * t
    return tuple(lifted), i


def neighbour(lattice: ZLattice, x: Sequence[int], p: int) -> ZLattice:
    """The p-neighbour L_x + Z x/p of L along an isotropic line x, LLL-reduced."""
    if lattice.Q(x) % p:
        raise ContractViolation(f"{tuple(x)} is not isotropic mod {p}")
    n = lattice.rank
    y, i = _lift(lattice, x, p)
    gy = matvec(lattice.gram, y)
    inv = int(mod_inverse(gy[i], p))
    # p M is spanned by p L_y and y; L_y = {z : B(z, y) = 0 mod p}
    gens = [tuple(p * p * int(r == j) for r in range(n)) for j in range(n)]
    for j in range(n):
        if j != i:
            c = gy[j] * inv % p
            gens.append(tuple(p * (int(r == j) - c * int(r == i)) for r in range(n)))
    gens.append(y)
    hnf = hermite_normal_form(SymMatrix(gens).T)
    if hnf.shape != (n, n):
        raise Pent63Error(f"neighbour basis has shape {hnf.shape}, expected {(n, n)}")
    basis = [tuple(int(hnf[r, c]) for r in range(n)) for c in range(n)]
    scaled = [[inner(lattice.gram, a, b) for b in basis] for a in basis]
    if any(v % (p * p) for row in scaled for v in row):
        raise Pent63Error(f"neighbour of {lattice.gram} along {tuple(x)} is not integral")
    _, _, reduced = lll_reduce(tuple(tuple(v // (p * p) for v in row) for row in scaled))
    return ZLattice(gram=reduced)


def neighbours(lattice: ZLattice, p: int) -> Iterator[ZLattice]:
    for x in isotropic_lines(lattice, p):
        yield neighbour(lattice, x, p)


def signature(lattice: ZLattice) -> tuple[int, ...]:
    """Representation counts of small norms; isometric lattices share them."""
    return (lattice.det, *(len(vectors_of_norm(lattice, m)) for m in SIGNATURE_NORMS))


class GenusClasses:
    """Pairwise non-isometric lattices of one genus, with invariant buckets."""

    def __init__(self) -> None:
        self.classes: list[ZLattice] = []
        self._buckets: dict[tuple[int, ...], list[int]] = {}

    def __len__(self) -> int:
        return len(self.classes)

    def index(self, lattice: ZLattice) -> int | None:
        for k in self._buckets.get(signature(lattice), []):
            if is_isometric(self.classes[k], lattice) is not None:
                return k
        return None

    def add(self, lattice: ZLattice) -> bool:
        """Record ``lattice`` unless an isometric class is already known."""
        if self.index(lattice) is not None:
            return False
        self._buckets.setdefault(signature(lattice), []).append(len(self.classes))
        self.classes.append(lattice)
        return True


def genus_classes(
    lattice: ZLattice,
    known: Sequence[ZLattice] = (),
    primes: Sequence[int] | None = None,
) -> list[ZLattice]:
    """Representatives of every class in the genus of L.

    The result starts with L and the ``known`` lattices (which must be pairwise
    non-isometric members of the genus), in that order; classes found by the
    neighbour closure follow in discovery order.
    """
    primes = list(primes) if primes is not None else neighbour_primes(lattice)
    for p in primes:
        if p == 2 or lattice.det % p == 0:
            raise ContractViolation(f"neighbour prime {p} must be odd and prime to {lattice.det}")
    found = GenusClasses()
    for member in (lattice, *known):
        if member.det != lattice.det:
            raise ContractViolation(f"{member.gram} has determinant {member.det} != {lattice.det}")
        if not found.add(member):
            raise ContractViolation(f"{member.gram} duplicates a class already listed")
    queue = deque(range(len(found)))
    while queue:
        current = found.classes[queue.popleft()]
        for p in primes:
            for nb in neighbours(current, p):
                if found.add(nb):
                    logger.debug(f"New class {nb.gram} from a {p}-neighbour of {current.gram}")
                    queue.append(len(found) - 1)
    logger.info(f"Genus of {lattice.gram}: {len(found)} classes from primes {primes}")
    return found.classes


def class_number(lattice: ZLattice, primes: Sequence[int] | None = None) -> int:
    return len(genus_classes(lattice, primes=primes))

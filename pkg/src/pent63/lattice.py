"""Exact arithmetic on positive-definite integral lattices of rank at most 4.

Short vectors are enumerated with Fincke-Pohst pruning in floating point and an
exact integer solve for the first coordinate. Isometries of every flavour
(automorphisms, isometry tests, scaled isometries M/d) share one backtracking
engine that places the images of basis vectors column by column and solves the
final column algebraically. Sources are LLL-reduced before a representation or
isometry search.
"""

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractViolation, Pent63Error
from .models import (
    CoefficientVector,
    LatticeVector,
    ScaledIsometry,
    ZLattice,
    coefficient_tuple,
    integer_determinant,
)

logger = logging.getLogger(__name__)

Gram = tuple[tuple[int, ...], ...]
Matrix = tuple[tuple[int, ...], ...]

MAX_RANK = 4


def _gram(lattice: ZLattice | Gram) -> Gram:
    return lattice.gram if isinstance(lattice, ZLattice) else lattice


def determinant(lattice: ZLattice) -> int:
    return integer_determinant(lattice.gram)


def is_positive_definite(gram: Sequence[Sequence[int]]) -> bool:
    n = len(gram)
    return all(integer_determinant([row[:m] for row in gram[:m]]) > 0 for m in range(1, n + 1))


def diagonal_lattice(a: CoefficientVector | Sequence[int]) -> ZLattice:
    """L_a = <a1, ..., ak>."""
    return ZLattice.diagonal(*coefficient_tuple(a))


def inner(gram: Gram, u: Sequence[int], v: Sequence[int]) -> int:
    n = len(gram)
    return sum(u[i] * gram[i][j] * v[j] for i in range(n) for j in range(n))


def matvec(m: Matrix, v: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in m)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = len(b[0])
    inner_dim = len(b)
    return tuple(
        tuple(sum(row[k] * b[k][j] for k in range(inner_dim)) for j in range(cols)) for row in a
    )


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m, strict=True))


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


# Short vectors


def _fincke_pohst_coefficients(gram: Gram) -> list[list[float]]:
    """q with Q(x) = sum_i q[i][i] * (x_i + sum_{j>i} q[i][j] x_j)^2."""
    n = len(gram)
    q = [[float(x) for x in row] for row in gram]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for m in range(k, n):
                q[k][m] -= q[k][i] * q[i][m]
    return q


def _exact_roots(g00: int, c: np.ndarray, rest: np.ndarray, target: int) -> list[tuple[int, int]]:
    """Integer roots x of g00 x^2 + 2 c x + rest = target, paired with their row index."""
    disc = c * c - g00 * (rest - target)
    ok = disc >= 0
    if not ok.any():
        return []
    idx = np.flatnonzero(ok)
    d = disc[idx]
    r = np.floor(np.sqrt(d.astype(np.float64))).astype(np.int64)
    r = np.where(r * r > d, r - 1, r)
    r = np.where((r + 1) * (r + 1) <= d, r + 1, r)
    square = r * r == d
    idx, r, cc = idx[square], r[square], c[idx][square]
    out = []
    for sign in (1, -1):
        num = -cc + sign * r
        hit = num % g00 == 0
        for row, value, root in zip(idx[hit], num[hit] // g00, r[hit], strict=True):
            if sign == -1 and root == 0:
                continue
            out.append((int(row), int(value)))
    return out


def _enumerate_norm(gram: Gram, target: int) -> list[LatticeVector]:
    n = len(gram)
    g00 = gram[0][0]
    if n == 1:
        if target % g00:
            return []
        x = math.isqrt(target // g00)
        return sorted({(x,), (-x,)}) if x * x * g00 == target and x else []
    q = _fincke_pohst_coefficients(gram)
    x = [0] * n
    found: list[LatticeVector] = []

    def solve_first_two(remaining: float) -> None:
        # x[1] ranges over its pruned interval; x[0] is solved exactly.
        center = -sum(q[1][j] * x[j] for j in range(2, n))
        radius = math.sqrt(max(remaining, 0.0) / q[1][1]) + 1e-6 * (1 + remaining)
        lo, hi = math.ceil(center - radius), math.floor(center + radius)
        if lo > hi:
            return
        x1 = np.arange(lo, hi + 1, dtype=np.int64)
        tail = x[2:]
        c_const = sum(gram[0][j] * x[j] for j in range(2, n))
        b1_const = sum(gram[1][j] * x[j] for j in range(2, n))
        q_tail = sum(gram[i][j] * x[i] * x[j] for i in range(2, n) for j in range(2, n))
        c = gram[0][1] * x1 + c_const
        rest = gram[1][1] * x1 * x1 + 2 * x1 * b1_const + q_tail
        for row, x0 in _exact_roots(g00, c, rest, target):
            found.append((x0, int(x1[row]), *tail))

    def descend(i: int, remaining: float) -> None:
        if i == 1:
            solve_first_two(remaining)
            return
        center = -sum(q[i][j] * x[j] for j in range(i + 1, n))
        radius = math.sqrt(max(remaining, 0.0) / q[i][i]) + 1e-6 * (1 + remaining)
        for xi in range(math.ceil(center - radius), math.floor(center + radius) + 1):
            x[i] = xi
            left = remaining - q[i][i] * (xi - center) ** 2
            if left >= -1e-6 * (1 + target):
                descend(i - 1, left)
        x[i] = 0

    descend(n - 1, float(target))
    return sorted(found)


@lru_cache(maxsize=4096)
def _vectors_of_norm_cached(gram: Gram, target: int) -> tuple[LatticeVector, ...]:
    return tuple(_enumerate_norm(gram, target))


def vectors_of_norm(lattice: ZLattice | Gram, n: int) -> list[LatticeVector]:
    """R(n, L): all v with Q(v) = n, sorted lexicographically."""
    if n < 1:
        raise ContractViolation(f"norm must be positive, got {n}")
    gram = _gram(lattice)
    if len(gram) > MAX_RANK:
        raise ContractViolation(f"rank {len(gram)} exceeds {MAX_RANK}")
    return list(_vectors_of_norm_cached(gram, n))


@lru_cache(maxsize=4096)
def _norm_array(gram: Gram, n: int) -> np.ndarray:
    vecs = _vectors_of_norm_cached(gram, n)
    arr = np.array(vecs, dtype=np.int64).reshape(len(vecs), len(gram))
    arr.setflags(write=False)
    return arr


# The embedding engine


@dataclass
class SearchBudget:
    """Counts candidate columns examined; ``limit=None`` means unbounded."""

    limit: int | None = None
    examined: int = 0
    exhausted: bool = False

    def spend(self, amount: int) -> bool:
        self.examined += amount
        if self.limit is not None and self.examined > self.limit:
            self.exhausted = True
        return not self.exhausted


def _cross(rows: list[tuple[int, ...]]) -> tuple[int, ...]:
    """Integer vector orthogonal (dot product) to n-1 rows in dimension n."""
    n = len(rows) + 1
    return tuple(
        (-1) ** j * integer_determinant([r[:j] + r[j + 1 :] for r in rows]) for j in range(n)
    )


@dataclass
class _Plan:
    order: list[int]
    last_solve: tuple[int, list[int], int, int] | None = None
    scaled: list[list[int]] = field(default_factory=list)


def _make_plan(source: Gram, d: int) -> _Plan:
    n = len(source)
    by_norm = sorted(range(n), key=lambda i: (source[i][i], i))
    scaled = [[d * d * source[i][j] for j in range(n)] for i in range(n)]
    if n == 1:
        return _Plan(order=by_norm, scaled=scaled)
    last = by_norm[-1]
    placed = by_norm[:-1]
    sub = [[source[i][j] for j in placed] for i in placed]
    det_sub = integer_determinant(sub)
    det_full = integer_determinant(source)
    # det_sub * x_par = sum_j coef[j] * c_j
    coef = []
    for j in range(len(placed)):
        replaced = [row[:] for row in sub]
        for i in range(len(placed)):
            replaced[i][j] = source[placed[i]][last]
        coef.append(integer_determinant(replaced))
    return _Plan(order=placed, last_solve=(last, coef, det_sub, det_full), scaled=scaled)


def iter_scaled_embeddings(
    source: ZLattice | Gram,
    target: ZLattice | Gram,
    d: int = 1,
    pin: tuple[Sequence[int], Sequence[int]] | None = None,
    budget: SearchBudget | None = None,
    anchor: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Iterator[Matrix]:
    """Yield every integer M with M^T G_T M = d^2 G_S.

    ``pin=(v, w)`` keeps the maps with M v = d w. ``anchor=(w, r)`` keeps the maps
    with B_T(M e_i, w) = r_i for every source basis vector e_i; a pin is checked
    through the anchor (w, d G_S v) plus a final test. Columns are placed in
    increasing source norm with candidates in lexicographic order, so the output
    order is deterministic. With a budget the search stops early and sets
    ``budget.exhausted``.
    """
    gs, gt = _gram(source), _gram(target)
    n = len(gs)
    if len(gt) != n:
        raise ContractViolation("source and target must have equal rank")
    if d < 1:
        raise ContractViolation(f"denominator must be positive, got {d}")
    budget = budget or SearchBudget()
    pin_t = None
    if pin is not None:
        pin_t = (tuple(pin[0]), tuple(d * x for x in pin[1]))
        if not any(pin_t[0]):
            raise ContractViolation("pinned vector must be non-zero")
        anchor = (tuple(pin[1]), tuple(d * x for x in matvec(gs, pin_t[0])))
    plan = _make_plan(gs, d)
    sc = plan.scaled
    gt_arr = np.array(gt, dtype=np.int64)
    anchor_image = None
    anchor_values: tuple[int, ...] = ()
    if anchor is not None:
        anchor_image = gt_arr @ np.array(anchor[0], dtype=np.int64)
        anchor_values = tuple(int(x) for x in anchor[1])
    columns: dict[int, tuple[int, ...]] = {}
    images: dict[int, np.ndarray] = {}

    def emit() -> Iterator[Matrix]:
        m = tuple(tuple(columns[i][r] for i in range(n)) for r in range(n))
        if pin_t is None or matvec(m, pin_t[0]) == pin_t[1]:
            yield m

    def consistent(i: int, col: tuple[int, ...]) -> bool:
        if inner(gt, col, col) != sc[i][i]:
            return False
        if anchor_image is not None and int(anchor_image @ col) != anchor_values[i]:
            return False
        return all(inner(gt, col, columns[j]) == sc[i][j] for j in columns)

    def finish_algebraic() -> Iterator[Matrix]:
        last, coef, det_sub, det_full = plan.last_solve
        placed = plan.order
        rows = [tuple(int(x) for x in images[j]) for j in placed]
        k = _cross(rows)
        qk = inner(gt, k, k)
        if qk == 0:
            return
        num = d * d * det_sub * det_full
        if num % qk:
            return
        s2 = num // qk
        s = math.isqrt(s2)
        if s * s != s2:
            return
        par = [sum(coef[t] * columns[placed[t]][r] for t in range(len(placed))) for r in range(n)]
        for sign in (1, -1) if s else (1,):
            raw = [par[r] + sign * s * k[r] for r in range(n)]
            if any(x % det_sub for x in raw):
                continue
            col = tuple(x // det_sub for x in raw)
            if consistent(last, col):
                columns[last] = col
                yield from emit()
                del columns[last]

    def place(depth: int) -> Iterator[Matrix]:
        if budget.exhausted:
            return
        if depth == len(plan.order):
            yield from finish_algebraic() if plan.last_solve is not None else emit()
            return
        i = plan.order[depth]
        cands = _norm_array(gt, sc[i][i])
        if not budget.spend(len(cands)):
            return
        mask = np.ones(len(cands), dtype=bool)
        if anchor_image is not None:
            mask &= cands @ anchor_image == anchor_values[i]
        for j in columns:
            mask &= cands @ images[j] == sc[i][j]
        for row in cands[mask]:
            col = tuple(int(x) for x in row)
            columns[i] = col
            images[i] = gt_arr @ row
            yield from place(depth + 1)
            del columns[i], images[i]
            if budget.exhausted:
                return

    yield from place(0)


# Reduction


def _frozen(rows: list[list[int]]) -> Matrix:
    return tuple(tuple(row) for row in rows)


def _gram_schmidt(g: list[list[int]]) -> tuple[list[list[float]], list[float]]:
    n = len(g)
    mu = [[0.0] * n for _ in range(n)]
    norms: list[float] = []
    for i in range(n):
        for j in range(i):
            acc = g[i][j] - sum(mu[j][k] * mu[i][k] * norms[k] for k in range(j))
            mu[i][j] = acc / norms[j]
        norms.append(g[i][i] - sum(mu[i][k] ** 2 * norms[k] for k in range(i)))
    return mu, norms


def lll_reduce(lattice: ZLattice | Gram, delta: float = 0.99) -> tuple[Matrix, Matrix, Gram]:
    """(U, U^-1, U^T G U) where the columns of U are an LLL-reduced basis.

    The Gram-Schmidt data is floating point; U and the reduced Gram matrix are
    exact, so a rounding slip costs reduction quality only.
    """
    gram = _gram(lattice)
    n = len(gram)
    g = [list(row) for row in gram]
    u = [list(row) for row in identity(n)]
    inv = [list(row) for row in identity(n)]

    def subtract(k: int, j: int, r: int) -> None:
        # b_k -= r b_j
        for row in u:
            row[k] -= r * row[j]
        inv[j] = [x + r * y for x, y in zip(inv[j], inv[k], strict=True)]
        gkk = g[k][k] - 2 * r * g[k][j] + r * r * g[j][j]
        for i in range(n):
            if i != k:
                g[k][i] -= r * g[j][i]
                g[i][k] = g[k][i]
        g[k][k] = gkk

    def swap(k: int) -> None:
        for row in u:
            row[k], row[k - 1] = row[k - 1], row[k]
        inv[k], inv[k - 1] = inv[k - 1], inv[k]
        g[k], g[k - 1] = g[k - 1], g[k]
        for row in g:
            row[k], row[k - 1] = row[k - 1], row[k]

    k, steps = 1, 0
    while k < n and steps < 100 * n * n:
        steps += 1
        for j in range(k - 1, -1, -1):
            mu, _ = _gram_schmidt(g)
            r = round(mu[k][j])
            if r:
                subtract(k, j, r)
        mu, norms = _gram_schmidt(g)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            swap(k)
            k = max(k - 1, 1)
    return _frozen(u), _frozen(inv), _frozen(g)


def represents(
    source: ZLattice | Gram,
    target: ZLattice | Gram,
    anchor: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Matrix | None:
    """Some M with M^T G_T M = G_S, or None when the target does not represent the source.

    The source is LLL-reduced first. ``anchor=(w, r)`` asks B_T(M e_i, w) = r_i
    for every source basis vector e_i.
    """
    u, inv, reduced = lll_reduce(source)
    reduced_anchor = None
    if anchor is not None:
        w, r = anchor
        reduced_anchor = (tuple(w), matvec(transpose(u), r))
    found = next(iter_scaled_embeddings(reduced, target, anchor=reduced_anchor), None)
    return None if found is None else matmul(found, inv)


# Automorphisms, orbits, isometry


@lru_cache(maxsize=256)
def _automorphisms(gram: Gram) -> tuple[Matrix, ...]:
    return tuple(sorted(iter_scaled_embeddings(gram, gram)))


def automorphism_group(lattice: ZLattice) -> list[Matrix]:
    """O(L) = {U : U^T G U = G}, as row-major integer matrices."""
    if lattice.rank > MAX_RANK:
        raise ContractViolation(f"rank {lattice.rank} exceeds {MAX_RANK}")
    group = list(_automorphisms(lattice.gram))
    logger.debug(f"|O(L)| = {len(group)} for {lattice.gram}")
    return group


def group_array(group: Sequence[Matrix]) -> np.ndarray:
    return np.array(group, dtype=np.int64)


def stabilizer(
    lattice: ZLattice, v: Sequence[int], group: Sequence[Matrix] | None = None
) -> list[Matrix]:
    """Elements of O(L) fixing v."""
    group = automorphism_group(lattice) if group is None else group
    target = tuple(v)
    return [u for u in group if matvec(u, target) == target]


def orbits(
    lattice: ZLattice, n: int, group: Sequence[Matrix] | None = None
) -> list[list[LatticeVector]]:
    """O(L)-orbits on R(n, L), each sorted, ordered by their least element."""
    group = automorphism_group(lattice) if group is None else group
    arr = group_array(group)
    seen: set[LatticeVector] = set()
    result = []
    for v in vectors_of_norm(lattice, n):
        if v in seen:
            continue
        images = arr @ np.array(v, dtype=np.int64)
        orbit = sorted({tuple(int(x) for x in row) for row in images})
        seen.update(orbit)
        result.append(orbit)
    return result


def orbit_representatives(lattice: ZLattice, n: int) -> list[LatticeVector]:
    """Lexicographically least vector of every O(L)-orbit on R(n, L)."""
    return [orbit[0] for orbit in orbits(lattice, n)]


def is_isometric(lattice: ZLattice, other: ZLattice) -> Matrix | None:
    """U with U^T G_L U = G_K (K = other), or None.

    Both sides are LLL-reduced before the search, so the candidate columns are
    the short vectors of a reduced basis.
    """
    if lattice.rank != other.rank:
        raise ContractViolation("isometry test needs equal ranks")
    if lattice.gram == other.gram:
        return identity(lattice.rank)
    if lattice.det != other.det:
        return None
    u_l, _, reduced_l = lll_reduce(lattice)
    _, inv_k, reduced_k = lll_reduce(other)
    for norm in sorted({reduced_k[i][i] for i in range(other.rank)}):
        if len(vectors_of_norm(reduced_l, norm)) != len(vectors_of_norm(reduced_k, norm)):
            return None
    found = next(iter_scaled_embeddings(reduced_k, reduced_l), None)
    return None if found is None else matmul(matmul(u_l, found), inv_k)


def rational_automorphisms(
    lattice: ZLattice,
    p: int,
    fix: Sequence[int] | None = None,
    budget: SearchBudget | None = None,
) -> list[ScaledIsometry]:
    """Rational self-maps R/p of L with R^T G R = p^2 G (and R w = p w when fixing w)."""
    pin = None if fix is None else (tuple(fix), tuple(fix))
    return [
        ScaledIsometry(numerator=m, denom=p, source=lattice, target=lattice)
        for m in iter_scaled_embeddings(lattice, lattice, d=p, pin=pin, budget=budget)
        if math.gcd(p, *(x for row in m for x in row)) == 1
    ]


# The pinned system a = sum a_i x_i^2, b = sum a_i x_i


def _isqrt_array(values: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(values.astype(np.float64))).astype(np.int64)
    r = np.where(r * r > values, r - 1, r)
    return np.where((r + 1) * (r + 1) <= values, r + 1, r)


def _coordinate_range(ai: int, big_a: int, aval: int, bval: int) -> range:
    """Integers y with a_i (A y - b)^2 <= (A - a_i)(A a - b^2)."""
    rhs = (big_a - ai) * (big_a * aval - bval * bval)
    spread = math.isqrt(rhs // ai) + 1
    lo = -((spread - bval) // big_a) - 1
    hi = (bval + spread) // big_a + 1
    return range(lo, hi + 1)


def iter_pinned_solutions(
    a: CoefficientVector | Sequence[int], aval: int, bval: int
) -> Iterator[tuple[int, int, int, int]]:
    coeffs = coefficient_tuple(a)
    if len(coeffs) != 4:
        raise ContractViolation(f"pinned system needs four coefficients, got {coeffs}")
    a1, a2, a3, a4 = coeffs
    big_a = sum(coeffs)
    if big_a * aval - bval * bval < 0 or aval < 0:
        return
    pair_scale = a2 * (a1 + a2)
    for x4 in _coordinate_range(a4, big_a, aval, bval):
        a_rest = aval - a4 * x4 * x4
        if a_rest < 0:
            continue
        r3 = _coordinate_range(a3, big_a, aval, bval)
        x3 = np.arange(r3.start, r3.stop, dtype=np.int64)
        ap = a_rest - a3 * x3 * x3
        bp = bval - a4 * x4 - a3 * x3
        disc = a1 * a2 * ((a1 + a2) * ap - bp * bp)
        ok = (ap >= 0) & (disc >= 0)
        if not ok.any():
            continue
        x3, ap, bp, disc = x3[ok], ap[ok], bp[ok], disc[ok]
        root = _isqrt_array(disc)
        square = root * root == disc
        for y3, b_rest, r in zip(x3[square], bp[square], root[square], strict=True):
            y3, b_rest, r = int(y3), int(b_rest), int(r)
            for num in sorted({a2 * b_rest + r, a2 * b_rest - r}):
                if num % pair_scale:
                    continue
                x2 = num // pair_scale
                rem = b_rest - a2 * x2
                if rem % a1:
                    continue
                yield (rem // a1, x2, y3, x4)


def solve_pinned_system(
    a: CoefficientVector | Sequence[int], aval: int, bval: int
) -> list[tuple[int, int, int, int]]:
    """All integer x with sum a_i x_i^2 = aval and sum a_i x_i = bval, sorted."""
    coeffs = coefficient_tuple(a)
    sols = sorted(set(iter_pinned_solutions(coeffs, aval, bval)))
    for x in sols:
        if sum(c * t * t for c, t in zip(coeffs, x, strict=True)) != aval:
            raise Pent63Error(f"pinned solver produced {x} with the wrong norm")
    return sols


def first_nonnegative_solution(
    a: CoefficientVector | Sequence[int], aval: int, bval: int
) -> tuple[int, int, int, int] | None:
    for x in iter_pinned_solutions(a, aval, bval):
        if all(t >= 0 for t in x):
            return x
    return None


def pentagonal_target(m: int, aval: int, bval: int) -> int:
    """N_{m,a,b} = ((m - 2)/2)(a - b) + b."""
    twice = (m - 2) * (aval - bval)
    if twice % 2:
        raise ContractViolation(f"N is not integral for m={m}, a={aval}, b={bval}")
    return twice // 2 + bval


def nonneg_filter_and_N(
    solutions: Sequence[Sequence[int]],
    m: int,
    aval: int,
    bval: int,
    a: CoefficientVector | Sequence[int] | None = None,
) -> list[tuple[tuple[int, ...], int]]:
    """Keep the non-negative solutions and attach N_{m,a,b}."""
    if m < 3:
        raise ContractViolation(f"polygonal order must be at least 3, got {m}")
    n = pentagonal_target(m, aval, bval)
    kept = [(tuple(x), n) for x in solutions if all(t >= 0 for t in x)]
    if a is not None and solutions:
        coeffs = coefficient_tuple(a)
        big_a = sum(coeffs)
        above_bound = bval >= 0 and bval * bval >= (big_a - min(coeffs)) * aval
        if above_bound and len(kept) != len(solutions):
            raise Pent63Error(f"positivity bound violated for a={aval}, b={bval}, coeffs={coeffs}")
    return kept

"""Good cosets, the good sets S_s and the certificates that rest on them.

A coset u + sK is good when some rational isometry tau with tau(sK), tau(v) and
tau(u) in L exists, i.e. when the lattice Zu + Zv + sK is represented by L (with
v sent to (1, ..., 1) for the diagonal class). Coverage of K/sK by explicit
scaled isometries tau = M/d is kept as a boolean array indexed by the CRT
components of s, so one tau costs a kernel computation per prime power and a
broadcast OR.
"""

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from functools import reduce
from math import ceil, floor, gcd, lcm, sqrt
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field
from sympy import Matrix as SymMatrix
from sympy import divisors, factorint, mod_inverse, primefactors, primitive_root
from sympy.matrices.normalforms import hermite_normal_form
from tqdm import tqdm

from .cache import DiskCache
from .conditions import Condition
from .config import get_settings
from .errors import ContractViolation, InconclusiveSearch, Pent63Error, WitnessNotFound
from .genus import genus_classes, neighbour_primes
from .genusdata import Branch, Certificate, load
from .lattice import (
    Gram,
    Matrix,
    SearchBudget,
    automorphism_group,
    first_nonnegative_solution,
    group_array,
    identity,
    iter_scaled_embeddings,
    matvec,
    orbit_representatives,
    represents,
    stabilizer,
)
from .models import (
    CoefficientVector,
    CosetClass,
    GoodSet,
    Pair,
    ScaledIsometry,
    ZLattice,
    coefficient_tuple,
    format_tuple,
)
from .pentcore import evaluate

logger = logging.getLogger(__name__)

Tau = tuple[Matrix, int]


def coset_profile(K: ZLattice, v: Sequence[int], s: int, u: CosetClass) -> Pair:  # noqa: N803
    """(Q(u) mod s, B(u, v) mod s) for any representative of u + sK."""
    if u.modulus != s:
        raise ContractViolation(f"coset is reduced mod {u.modulus}, expected {s}")
    return K.Q(u.coords) % s, K.B(u.coords, v) % s


def _combine(parts: Sequence[np.ndarray], sizes: Sequence[int], op: str, s: int = 0) -> np.ndarray:
    """Mixed-radix combination of per-component arrays into one flat array."""
    if op == "and":
        acc = np.ones(1, dtype=bool)
        for part in parts:
            acc = (acc[:, None] & part[None, :]).ravel()
    elif op == "sum":
        acc = np.zeros(1, dtype=np.int64)
        for part in parts:
            acc = ((acc[:, None] + part[None, :]) % s).ravel()
    else:
        acc = np.zeros(1, dtype=np.int64)
        for part, size in zip(parts, sizes, strict=True):
            acc = (acc[:, None] * size + part[None, :]).ravel()
    return acc


class CosetCoverage:
    """Which classes of K/sK are mapped into L by some collected tau."""

    def __init__(self, K: ZLattice, v: Sequence[int], s: int):  # noqa: N803
        if s < 1:
            raise ContractViolation(f"modulus must be positive, got {s}")
        self.K, self.v, self.s = K, tuple(v), s
        n = K.rank
        gram = np.array(K.gram, dtype=np.int64)
        gv = gram @ np.array(v, dtype=np.int64)
        self.moduli = sorted(p**e for p, e in factorint(s).items()) or [1]
        self.coords: list[np.ndarray] = []
        alphas, betas = [], []
        for q in self.moduli:
            c = np.indices((q,) * n).reshape(n, -1).T.astype(np.int64)
            e = 1 if q == s else (s // q) * int(mod_inverse(s // q, q)) % s
            self.coords.append(c)
            alphas.append(np.einsum("ij,jk,ik->i", c, gram, c) % q * e % s)
            betas.append((c @ gv) % q * e % s)
        self.sizes = [len(c) for c in self.coords]
        self.alpha_outer = _combine(alphas[:-1], self.sizes[:-1], "sum", s)
        self.beta_outer = _combine(betas[:-1], self.sizes[:-1], "sum", s)
        self.alpha_inner, self.beta_inner = alphas[-1], betas[-1]
        self.covered = np.zeros((len(self.alpha_outer), self.sizes[-1]), dtype=bool)
        self._kernels: set[bytes] = set()
        self._totals: np.ndarray | None = None

    def _kernel(self, m: np.ndarray, d: int) -> list[np.ndarray]:
        masks = []
        for q, c in zip(self.moduli, self.coords, strict=True):
            dq = gcd(d, q)
            if dq == 1:
                masks.append(np.ones(len(c), dtype=bool))
            else:
                masks.append(~((c @ m.T) % dq).any(axis=1))
        return masks

    def add(self, m: Matrix, d: int) -> bool:
        """Mark the cosets u with M u = 0 (mod d); False if the kernel was already seen."""
        if self.s % d:
            raise ContractViolation(f"denominator {d} does not divide {self.s}")
        masks = self._kernel(np.array(m, dtype=np.int64), d)
        key = b"|".join(np.packbits(mask).tobytes() for mask in masks)
        if key in self._kernels:
            return False
        self._kernels.add(key)
        rows = np.flatnonzero(_combine(masks[:-1], self.sizes[:-1], "and"))
        self.covered[rows] |= masks[-1]
        return True

    def _permutation(self, sigma: np.ndarray, q: int, c: np.ndarray) -> np.ndarray:
        img = (c @ sigma.T) % q
        weights = q ** np.arange(c.shape[1] - 1, -1, -1, dtype=np.int64)
        return img @ weights

    def saturate(self, group: Sequence[Matrix]) -> None:
        """Close the coverage under u -> sigma^-1 u for sigma fixing v."""
        base = self.covered
        acc = base.copy()
        for sigma in group_array(group):
            if np.array_equal(sigma, np.eye(len(sigma), dtype=np.int64)):
                continue
            perms = [
                self._permutation(sigma, q, c)
                for q, c in zip(self.moduli, self.coords, strict=True)
            ]
            outer = _combine(perms[:-1], self.sizes[:-1], "radix")
            acc |= base[np.ix_(outer, perms[-1])]
        self.covered = acc

    @property
    def complete(self) -> bool:
        return bool(self.covered.all())

    def _pair_index(self, row: int) -> np.ndarray:
        s = self.s
        alpha = (self.alpha_outer[row] + self.alpha_inner) % s
        beta = (self.beta_outer[row] + self.beta_inner) % s
        return alpha * s + beta

    def counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Per pair index alpha*s + beta: (covered cosets, total cosets)."""
        size = self.s * self.s
        covered = np.zeros(size, dtype=np.int64)
        fresh = self._totals is None
        totals = np.zeros(size, dtype=np.int64) if fresh else self._totals
        for row in range(self.covered.shape[0]):
            idx = self._pair_index(row)
            if fresh:
                totals += np.bincount(idx, minlength=size)
            covered += np.bincount(idx[self.covered[row]], minlength=size)
        self._totals = totals
        return covered, totals

    def profile_table(self) -> dict[Pair, tuple[int, int]]:
        covered, totals = self.counts()
        s = self.s
        return {
            (int(i) // s, int(i) % s): (int(covered[i]), int(totals[i]))
            for i in np.flatnonzero(totals)
        }

    def good_pairs(self) -> frozenset[Pair]:
        """Pairs all of whose cosets are covered; pairs with no coset are good."""
        covered, totals = self.counts()
        s = self.s
        return frozenset((int(i) // s, int(i) % s) for i in np.flatnonzero(covered == totals))


def good_coset_closure(
    K: ZLattice,  # noqa: N803
    L: ZLattice,  # noqa: N803
    s: int,
    v: Sequence[int],
    taus: Sequence[ScaledIsometry],
) -> dict[Pair, tuple[int, int]]:
    """Map (alpha, beta) to (covered cosets, total cosets) for the given taus."""
    coverage = CosetCoverage(K, v, s)
    for tau in taus:
        if tau.source != K or tau.target != L:
            raise ContractViolation("tau does not map K to L")
        coverage.add(tau.numerator, tau.denom)
    return coverage.profile_table()


def _admissible(m: Matrix, d: int, v: Sequence[int], w: Sequence[int] | None) -> bool:
    image = matvec(m, v)
    if w is None:
        return all(x % d == 0 for x in image)
    return image == tuple(d * x for x in w)


@dataclass
class SearchStatus:
    examined: int = 0
    partial: bool = False
    skipped: list[int] = field(default_factory=list)


def _iter_taus(
    K: ZLattice,  # noqa: N803
    L: ZLattice,  # noqa: N803
    s: int,
    v: Sequence[int],
    w: Sequence[int] | None,
    node_budget: int | None,
    status: SearchStatus,
) -> Iterator[Tau]:
    """Admissible taus with d | s ascending; budget-bounded per denominator."""
    pin = None if w is None else (tuple(v), tuple(w))
    for d in divisors(s):
        budget = SearchBudget(limit=node_budget)
        for m in iter_scaled_embeddings(K, L, d=d, pin=pin, budget=budget):
            if _admissible(m, d, v, w):
                yield m, d
        status.examined += budget.examined
        if budget.exhausted:
            status.partial = True
            status.skipped.append(d)
            logger.debug(f"Search for d={d} stopped after {budget.examined} candidates")


def find_scaled_isometries(
    K: ZLattice,  # noqa: N803
    L: ZLattice,  # noqa: N803
    s: int,
    v: Sequence[int],
    budget: int | None = None,
    pin: Sequence[int] | None = None,
    seeds: Sequence[Tau] = (),
) -> list[ScaledIsometry]:
    """Distinct tau in R_v(K, L, s); with ``pin`` additionally tau(v) = pin.

    Seeds are checked and listed first. The budget (default: the
    ``isometry_node_budget`` setting) bounds each denominator separately; raises
    InconclusiveSearch when it ran out before anything was found.
    """
    budget = get_settings().isometry_node_budget if budget is None else budget
    found: dict[Tau, None] = {}
    for m, d in seeds:
        if s % d == 0 and _admissible(m, d, v, pin):
            found[(tuple(tuple(r) for r in m), d)] = None
    status = SearchStatus()
    for tau in _iter_taus(K, L, s, v, pin, budget, status):
        found.setdefault(tau, None)
    if not found and status.partial:
        raise InconclusiveSearch(f"No scaled isometry found within budget for s={s}, v={v}")
    return [ScaledIsometry(numerator=m, denom=d, source=K, target=L) for m, d in found]


# Exact good cosets


def coset_lattice(
    K: ZLattice,  # noqa: N803
    s: int,
    u: Sequence[int],
    v: Sequence[int],
) -> tuple[Matrix, Gram]:
    """Basis (as columns) and Gram matrix of N = Zu + Zv + sK."""
    n = K.rank
    gens = [list(u), list(v), *([s * int(i == j) for i in range(n)] for j in range(n))]
    hnf = hermite_normal_form(SymMatrix(gens).T)
    if hnf.shape != (n, n):
        raise Pent63Error(f"coset lattice basis has shape {hnf.shape}, expected {(n, n)}")
    basis = tuple(tuple(int(hnf[r, c]) for r in range(n)) for c in range(n))
    return basis, tuple(tuple(K.B(a, b) for b in basis) for a in basis)


def is_good_coset(
    K: ZLattice,  # noqa: N803
    L: ZLattice,  # noqa: N803
    s: int,
    u: Sequence[int],
    v: Sequence[int],
    w: Sequence[int] | None = None,
) -> bool:
    """Whether some tau in R_v(K, L, s) (with tau(v) = w if given) maps u + sK into L.

    Such a tau is exactly an isometry of N = Zu + Zv + sK into L. With ``w`` the
    images are tied to w through B(tau(n), w) = B(n, v) on a basis of N, which
    forces tau(v) = w because Q(w) = Q(v).
    """
    if w is not None and L.Q(w) != K.Q(v):
        raise ContractViolation(f"Q(w)={L.Q(w)} differs from Q(v)={K.Q(v)}")
    basis, gram = coset_lattice(K, s, u, v)
    anchor = None if w is None else (tuple(w), tuple(K.B(b, v) for b in basis))
    return represents(gram, L, anchor) is not None


@dataclass
class _LocalClasses:
    """Classes of (K/qK) under u -> k u + j v (k a unit), for one prime power q.

    Every class c has a representative, the size of H_c = <u, v>, the classes
    whose H lies inside H_c and the local (alpha, beta) indices alpha*q + beta it meets.
    """

    q: int
    reps: np.ndarray
    sizes: np.ndarray
    down: list[np.ndarray]
    pairs: list[np.ndarray]
    images: list[np.ndarray] = field(default_factory=list)


def _unit_generators(q: int) -> list[int]:
    if q <= 2:
        return []
    p = primefactors(q)[0]
    if p == 2:
        return [q - 1, 5 % q] if q > 4 else [q - 1]
    return [int(primitive_root(q))]


def _local_classes(
    gram: np.ndarray, v: np.ndarray, q: int, stab: Sequence[np.ndarray]
) -> _LocalClasses:
    n = len(v)
    coords = np.indices((q,) * n).reshape(n, -1).T.astype(np.int64)
    weights = q ** np.arange(n - 1, -1, -1, dtype=np.int64)

    def index(vecs: np.ndarray) -> np.ndarray:
        return (vecs % q) @ weights

    moves = [index(coords + v)] + [index(k * coords) for k in _unit_generators(q)]
    label = np.arange(len(coords), dtype=np.int64)
    while True:
        fresh = label
        for move in moves:
            fresh = np.minimum(fresh, fresh[move])
        fresh = np.minimum(fresh, fresh[fresh])
        if np.array_equal(fresh, label):
            break
        label = fresh
    firsts, cls = np.unique(label, return_inverse=True)
    reps = coords[firsts]
    rep_index = index(reps)
    ab = np.indices((q, q)).reshape(2, -1).T.astype(np.int64)
    down, sizes = [], []
    for r in reps:
        span = np.unique(index(ab[:, :1] * r + ab[:, 1:] * v))
        sizes.append(len(span))
        down.append(np.flatnonzero(np.isin(rep_index, span)))
    alpha = np.einsum("ij,jk,ik->i", coords, gram, coords) % q
    beta = (coords @ (gram @ v)) % q
    keyed = np.unique(cls * q * q + alpha * q + beta)
    bounds = np.searchsorted(keyed // (q * q), np.arange(len(reps) + 1))
    pairs = [keyed[bounds[c] : bounds[c + 1]] % (q * q) for c in range(len(reps))]
    images = [cls[index(reps @ sigma.T)] for sigma in stab]
    return _LocalClasses(
        q=q,
        reps=reps,
        sizes=np.array(sizes, dtype=np.int64),
        down=down,
        pairs=pairs,
        images=images,
    )


def lift_good_set(good: GoodSet, s: int) -> GoodSet:
    """All pairs mod s reducing into ``good`` (its modulus must divide s)."""
    s1 = good.modulus
    if s % s1:
        raise ContractViolation(f"{s1} does not divide {s}")
    pairs = frozenset(
        (alpha, beta)
        for alpha in range(s)
        for beta in range(s)
        if (alpha % s1, beta % s1) in good.pairs
    )
    return GoodSet(modulus=s, pairs=pairs, certified=good.certified, flags=list(good.flags))


def all_pairs(s: int) -> frozenset[Pair]:
    return frozenset((alpha, beta) for alpha in range(s) for beta in range(s))


class OrbitReport(BaseModel):
    member: str
    vector: tuple[int, ...]
    good_pairs: int
    complete: bool
    classes: int = Field(default=0, description="Local class tuples of K/sK")
    tested: int = Field(default=0, description="Coset lattices put through the embedding search")


class MemberReport(BaseModel):
    name: str
    modulus: int
    pinned: bool
    orbits: list[OrbitReport] = Field(default_factory=list)
    skipped: list[tuple[int, ...]] = Field(default_factory=list)
    pairs: list[Pair] = Field(default_factory=list)


class GoodSetReport(BaseModel):
    coeffs: tuple[int, ...]
    modulus: int
    good_set: GoodSet
    members: list[MemberReport] = Field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "coeffs": list(self.coeffs),
            "modulus": self.modulus,
            "good_set": self.good_set.to_json(),
            "members": [
                {
                    "name": m.name,
                    "modulus": m.modulus,
                    "pinned": m.pinned,
                    "pair_count": len(m.pairs),
                    "skipped": [list(v) for v in m.skipped],
                    "orbits": [o.model_dump() for o in m.orbits],
                }
                for m in self.members
            ],
        }


@dataclass
class GenusInput:
    """A genus member as the computer sees it."""

    name: str
    lattice: ZLattice
    modulus: int | None = None


class GoodSetComputer:
    """Computes S_s as the intersection of per-member, per-orbit good pairs.

    Goodness of u + sK depends only on H = <u, v> in K/sK and passes to subgroups
    of H, so classes of K/sK are visited as tuples of local classes (one per prime
    power of s), largest H first. A good tuple marks its downset and the downsets
    of its images under Stab(v) good; a bad one marks its pairs bad. Tuples whose
    pairs are all bad already are not tested.
    """

    def __init__(self, cache: DiskCache | None = None, show_progress: bool = False):
        self.cache = cache or DiskCache(None)
        self.show_progress = show_progress

    def group(self, lattice: ZLattice) -> list[Matrix]:
        """O(lattice), read from the cache when one is configured."""
        key = [list(row) for row in lattice.gram]
        cached = self.cache.get("automorphisms", key)
        if cached is not None:
            return [tuple(tuple(row) for row in m) for m in cached]
        group = automorphism_group(lattice)
        self.cache.put("automorphisms", key, [[list(row) for row in m] for m in group])
        return group

    def orbit_good_pairs(
        self,
        K: ZLattice,  # noqa: N803
        L: ZLattice,  # noqa: N803
        s: int,
        v: Sequence[int],
        pinned: bool,
        member: str = "K",
    ) -> tuple[frozenset[Pair], OrbitReport]:
        """S_s(K, v): pairs all of whose cosets are good; pinned means tau(v) = (1, ..., 1)."""
        w = (1,) * L.rank if pinned else None
        if pinned and K != L:
            raise ContractViolation("a pinned search maps the lattice to itself")
        if pinned and any(matvec(g, v) == w for g in self.group(K)):
            report = OrbitReport(member=member, vector=tuple(v), good_pairs=s * s, complete=True)
            return all_pairs(s), report
        gram = np.array(K.gram, dtype=np.int64)
        v_arr = np.array(v, dtype=np.int64)
        ident = identity(K.rank)
        stab = [np.array(g, dtype=np.int64) for g in stabilizer(K, v, self.group(K)) if g != ident]
        moduli = sorted(p**e for p, e in factorint(s).items()) or [1]
        locs = [_local_classes(gram, v_arr % q, q, stab) for q in moduli]
        lifts = [1 if q == s else (s // q) * int(mod_inverse(s // q, q)) % s for q in moduli]
        shape = tuple(len(loc.reps) for loc in locs)
        good = np.zeros(shape, dtype=bool)
        bad = np.zeros(tuple(q * q for q in moduli), dtype=bool)
        weight = reduce(np.multiply.outer, [loc.sizes for loc in locs]).ravel()
        tested = 0
        order = np.argsort(-weight, kind="stable")
        for flat in tqdm(order, desc=member, disable=not self.show_progress, leave=False):
            t = np.unravel_index(flat, shape)
            if good[t]:
                continue
            block = np.ix_(*(loc.pairs[c] for loc, c in zip(locs, t, strict=True)))
            if bad[block].all():
                continue
            tested += 1
            u = sum(
                (loc.reps[c] * e for loc, c, e in zip(locs, t, lifts, strict=True)),
                np.zeros(K.rank, dtype=np.int64),
            ) % s
            if not is_good_coset(K, L, s, tuple(int(x) for x in u), v, w):
                bad[block] = True
                continue
            images = [t] + [
                tuple(loc.images[k][c] for loc, c in zip(locs, t, strict=True))
                for k in range(len(stab))
            ]
            for image in images:
                good[np.ix_(*(loc.down[c] for loc, c in zip(locs, image, strict=True)))] = True
        alphas, betas = [], []
        for q, e in zip(moduli, lifts, strict=True):
            idx = np.arange(q * q, dtype=np.int64)
            alphas.append(idx // q * e % s)
            betas.append(idx % q * e % s)
        keep = ~bad.ravel()
        alpha = _combine(alphas, [], "sum", s)[keep]
        beta = _combine(betas, [], "sum", s)[keep]
        pairs = frozenset(zip(alpha.tolist(), beta.tolist(), strict=True))
        report = OrbitReport(
            member=member,
            vector=tuple(v),
            good_pairs=len(pairs),
            complete=not bad.any(),
            classes=int(np.prod(shape)),
            tested=tested,
        )
        logger.debug(
            f"{member} v={tuple(v)} s={s}: {len(pairs)} good pairs, {tested} of "
            f"{report.classes} class tuples tested"
        )
        return pairs, report

    def member_good_set(
        self,
        member: GenusInput,
        L: ZLattice,  # noqa: N803
        A: int,  # noqa: N803
        s: int,
        pinned: bool,
        skip_divisible_by: int | None = None,
    ) -> tuple[GoodSet, MemberReport]:
        s_k = member.modulus or s
        if s % s_k:
            raise ContractViolation(f"member modulus {s_k} does not divide {s}")
        K = member.lattice  # noqa: N806
        report = MemberReport(name=member.name, modulus=s_k, pinned=pinned)
        pairs = all_pairs(s_k)
        for v in orbit_representatives(K, A):
            if skip_divisible_by and all(x % skip_divisible_by == 0 for x in matvec(K.gram, v)):
                report.skipped.append(v)
                continue
            good, orbit = self.orbit_good_pairs(K, L, s_k, v, pinned, member.name)
            report.orbits.append(orbit)
            pairs &= good
        result = GoodSet(modulus=s_k, pairs=pairs)
        if s_k != s:
            result = lift_good_set(result, s)
        report.pairs = result.sorted_pairs()
        return result, report

    def genus(
        self, cert: Certificate, complete: bool | None = None
    ) -> tuple[list[GenusInput], bool]:
        """The certificate's genus members and whether they are known to exhaust the genus.

        With ``complete`` (default: the ``complete_genus`` setting) a genus not marked
        complete is closed under p-neighbours; new classes are appended as K<i>.
        """
        settings = get_settings()
        complete = settings.complete_genus if complete is None else complete
        members = [
            GenusInput(name=m.name, lattice=m.lattice, modulus=m.modulus) for m in cert.genus
        ]
        if cert.genus_complete or not complete:
            return members, cert.genus_complete
        key = {"genus": [[list(r) for r in m.lattice.gram] for m in members]}
        cached = self.cache.get("genus", key)
        if cached is None:
            lattice = members[0].lattice
            primes = neighbour_primes(lattice, settings.genus_neighbour_primes)
            classes = genus_classes(lattice, [m.lattice for m in members[1:]], primes)
            cached = [[list(r) for r in k.gram] for k in classes[len(members) :]]
            self.cache.put("genus", key, cached)
        names = {m.name for m in members}
        index = len(members)
        for gram in cached:
            while f"K{index}" in names:
                index += 1
            members.append(GenusInput(name=f"K{index}", lattice=ZLattice.from_rows(gram)))
            names.add(f"K{index}")
        logger.info(f"Genus of {cert.label}: {len(members)} classes, {len(cached)} found")
        return members, True

    def compute(
        self,
        a: CoefficientVector | Sequence[int],
        s: int,
        genus: Sequence[GenusInput] | None = None,
        skip_divisible_by: int | None = None,
        genus_complete: bool = True,
    ) -> GoodSetReport:
        coeffs = coefficient_tuple(a)
        L = ZLattice.diagonal(*coeffs)  # noqa: N806
        members = list(genus) if genus else [GenusInput(name="L", lattice=L)]
        if members[0].lattice != L:
            raise ContractViolation("the first genus member must be the diagonal lattice")
        key = {
            "coeffs": list(coeffs),
            "s": s,
            "genus": [[list(r) for r in m.lattice.gram] for m in members],
            "moduli": [m.modulus for m in members],
            "skip": skip_divisible_by,
            "complete": genus_complete,
        }
        cached = self.cache.get("goodsets", key)
        if cached is not None:
            logger.debug(f"Good set for {coeffs} mod {s} read from cache")
            return GoodSetReport.model_validate(cached)
        pairs = all_pairs(s)
        reports = []
        members_iter = tqdm(members, desc=format_tuple(coeffs), disable=not self.show_progress)
        for i, member in enumerate(members_iter):
            good, report = self.member_good_set(
                member, L, sum(coeffs), s, pinned=(i == 0), skip_divisible_by=skip_divisible_by
            )
            reports.append(report)
            pairs &= good.pairs
        flags = [] if genus_complete else ["genus-partial"]
        result = GoodSetReport(
            coeffs=coeffs,
            modulus=s,
            good_set=GoodSet(modulus=s, pairs=pairs, certified=genus_complete, flags=flags),
            members=reports,
        )
        logger.info(f"Good set for {coeffs} mod {s}: {len(pairs)} pairs")
        self.cache.put("goodsets", key, result.model_dump(mode="json"))
        return result

    def compute_for(self, cert: Certificate, branch: Branch) -> GoodSetReport:
        genus, complete = self.genus(cert)
        return self.compute(
            cert.coeffs,
            branch.s,
            genus,
            skip_divisible_by=branch.skip_divisible_by,
            genus_complete=complete,
        )


def compute_S(  # noqa: N802
    a: CoefficientVector | Sequence[int],
    s: int,
    genus: Sequence[ZLattice] | None = None,
) -> GoodSet:
    """S_s for the tuple a over the given genus (default: the diagonal class only)."""
    members = None
    if genus is not None:
        members = [GenusInput(name=f"K{i}", lattice=k) for i, k in enumerate(genus)]
    return GoodSetComputer().compute(a, s, members).good_set


# Residues, intervals and windows


def pair_residue(pair: Pair, s: int) -> int:
    """(3/2)(alpha - beta) + beta mod s/2 for a parity-matched pair."""
    alpha, beta = pair
    if (alpha - beta) % 2:
        raise ContractViolation(f"pair {pair} is not parity-matched")
    if s == 1:
        return 0
    return (3 * (alpha - beta) // 2 + beta) % (s // 2)


def residue_image(good: GoodSet) -> tuple[list[int], bool]:
    """N(S) over parity-matched pairs and whether it is complete mod s/2."""
    s = good.modulus
    half = max(1, s // 2)
    image = sorted({pair_residue(p, s) for p in good.pairs if (p[0] - p[1]) % 2 == 0})
    return image, len(image) == half


def choose_r(n: int, good: GoodSet, pair: Pair) -> int:
    """r = 3 alpha - 2N mod 3s; b = r (mod 3s) puts (a, b) in the class of pair."""
    s = good.modulus
    if pair not in good.pairs:
        raise ContractViolation(f"pair {pair} is not in the good set")
    if (n - pair_residue(pair, s)) % max(1, s // 2):
        raise ContractViolation(f"N={n} does not match the residue of {pair} mod {s // 2}")
    return (3 * pair[0] - 2 * n) % (3 * s)


def interval(n: int, big_a: int) -> tuple[float, float]:
    """Endpoints of I_{N,A}; b in [lo, hi) gives A a - b^2 > 0 and b^2 >= (A-1) a."""
    if n < 1 or big_a < 1:
        raise ContractViolation(f"interval needs N, A >= 1, got {n}, {big_a}")
    c0 = (big_a - 1) / 6
    c1 = big_a / 6
    lo = sqrt(2 * (big_a - 1) * n / 3 + c0 * c0) + c0
    hi = sqrt(2 * big_a * n / 3 + c1 * c1) + c1
    return lo, hi


def width(n: int, big_a: int) -> float:
    lo, hi = interval(n, big_a)
    return hi - lo


def in_interval(n: int, big_a: int, b: int) -> bool:
    """Exact membership of an integer b in I_{N,A}."""
    return (
        b >= 0
        and 3 * b * b - (big_a - 1) * b - 2 * (big_a - 1) * n >= 0
        and 3 * b * b - big_a * b - 2 * big_a * n < 0
    )


def interval_candidates(n: int, big_a: int, modulus: int, residue: int) -> Iterator[int]:
    """Integers b in I_{N,A} with b = residue (mod modulus), increasing."""
    lo, hi = interval(n, big_a)
    start = max(0, floor(lo) - 1)
    start += (residue - start) % modulus
    for b in range(start, ceil(hi) + 2, modulus):
        if in_interval(n, big_a, b):
            yield b


def shift_orbit(pair: Pair, step: int, s: int) -> set[Pair]:
    alpha, beta = pair
    return {((alpha + step * j) % s, (beta + 3 * step * j) % s) for j in range(s)}


class WindowOutcome(BaseModel):
    passed: bool
    classes: int = 0
    failing: tuple[int, int, int] | None = Field(
        default=None, description="(a0, b0, modulus) of a class without a good candidate"
    )


def _window_class(
    cond: Condition, a0: int, b0: int, m: int, step: int, count: int, depth: int
) -> tuple[int, int, int] | None:
    verdicts = [cond.decide((a0 + step * k) % m, (b0 + 3 * step * k) % m, m) for k in range(count)]
    if any(v is True for v in verdicts):
        return None
    p = cond.refine_prime()
    if all(v is False for v in verdicts) or depth == 0 or p is None:
        return a0, b0, m
    for i in range(p):
        for j in range(p):
            failing = _window_class(cond, a0 + m * i, b0 + m * j, m * p, step, count, depth - 1)
            if failing is not None:
                return failing
    return None


def window_check(
    cond: Condition, s: int, pair: Pair, step: int, count: int, refine_depth: int = 10
) -> WindowOutcome:
    """Every start class in the shift orbit of pair has a candidate meeting cond.

    Candidates are (a0 + step*k, b0 + 3*step*k) for k < count.
    """
    m = lcm(cond.base_modulus, s, 2)
    classes = 0
    for pa, pb in sorted(shift_orbit(pair, step, s)):
        for i in range(m // s):
            for j in range(m // s):
                a0, b0 = pa + s * i, pb + s * j
                if (a0 - b0) % 2:
                    continue
                classes += 1
                failing = _window_class(cond, a0, b0, m, step, count, refine_depth)
                if failing is not None:
                    return WindowOutcome(passed=False, classes=classes, failing=failing)
    return WindowOutcome(passed=True, classes=classes)


class BranchReport(BaseModel):
    s: int
    n_min: int
    window: int
    needed: list[int]
    residue_image: list[int]
    good_pairs: int
    certified: bool
    rselection: dict[int, tuple[Pair, int]] = Field(default_factory=dict)
    uncovered: list[int] = Field(default_factory=list)
    failing: list[str] = Field(default_factory=list)
    width: float
    width_ok: bool
    minimal: bool
    passed: bool = True


class CertificateReport(BaseModel):
    label: str
    passed: bool = True
    certified: bool = Field(default=True, description="Every good set rests on a complete genus")
    branches: list[BranchReport] = Field(default_factory=list)
    failures: list[str] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)

    @property
    def status(self) -> str:
        if not self.passed:
            return "FAIL"
        return "PASS" if self.certified else "UNCERTIFIED"


class Certifier:
    """Verifies certificates and keeps their good sets and r-selection tables."""

    def __init__(self, computer: GoodSetComputer | None = None, refine_depth: int | None = None):
        settings = get_settings()
        self.computer = computer or GoodSetComputer()
        self.refine_depth = refine_depth if refine_depth is not None else settings.refine_depth
        self._good_sets: dict[tuple[tuple[int, ...], int], GoodSet] = {}
        self._reports: dict[tuple[int, ...], CertificateReport] = {}

    def good_set(self, cert: Certificate, branch: Branch) -> GoodSet:
        key = (cert.coeffs, branch.s)
        if key not in self._good_sets:
            self._good_sets[key] = self.computer.compute_for(cert, branch).good_set
        return self._good_sets[key]

    def use_good_set(self, cert: Certificate, good: GoodSet) -> None:
        """Register a precomputed good set for the branch with its modulus."""
        self._good_sets[(cert.coeffs, good.modulus)] = good

    def select(
        self, cond: Condition, branch: Branch, good: GoodSet, n: int
    ) -> tuple[tuple[Pair, int] | None, str | None]:
        s = branch.s
        last_failure = None
        candidates = sorted(
            p for p in good.pairs if (p[0] - p[1]) % 2 == 0 and pair_residue(p, s) == n
        )
        for pair in candidates:
            for step in branch.step_list:
                if not shift_orbit(pair, step, s) <= good.pairs:
                    continue
                count = branch.window_length // (3 * step)
                outcome = window_check(cond, s, pair, step, count, self.refine_depth)
                if outcome.passed:
                    return (pair, step), None
                a0, b0, m = outcome.failing
                last_failure = f"n={n} pair={pair} step={step}: class (a,b)=({a0},{b0}) mod {m}"
        return None, last_failure

    def verify_branch(self, cert: Certificate, branch: Branch) -> BranchReport:
        good = self.good_set(cert, branch)
        cond = cert.condition.with_clauses(tuple(branch.restrictions))
        image, _ = residue_image(good)
        needed = branch.needed_residues()
        w = width(branch.n_min, cert.A)
        report = BranchReport(
            s=branch.s,
            n_min=branch.n_min,
            window=branch.window_length,
            needed=needed,
            residue_image=image,
            good_pairs=len(good),
            certified=good.certified,
            width=w,
            width_ok=w >= branch.window_length,
            minimal=branch.n_min == 1 or width(branch.n_min - 1, cert.A) < branch.window_length,
        )
        for n in needed:
            selected, failure = self.select(cond, branch, good, n)
            if selected is None:
                report.uncovered.append(n)
                if failure:
                    report.failing.append(failure)
            else:
                report.rselection[n] = selected
        excluded = sorted(r for r in branch.excluded_residues if branch.serves(r))
        report.passed = report.width_ok and report.uncovered == excluded
        return report

    def verify(self, cert: Certificate) -> CertificateReport:
        if cert.coeffs in self._reports:
            return self._reports[cert.coeffs]
        flags = [f for f in cert.flags() if f != "genus-partial"]
        result = CertificateReport(label=cert.label, flags=flags)
        for branch in cert.effective_branches():
            try:
                report = self.verify_branch(cert, branch)
            except Pent63Error as e:
                logger.error(f"Branch s={branch.s} of {cert.label} failed: {e}")
                result.fail(f"s={branch.s}: {e}")
                continue
            result.branches.append(report)
            if not report.certified:
                result.certified = False
            if not report.width_ok:
                result.fail(f"s={branch.s}: width {report.width:.2f} < {report.window}")
            if not report.passed and report.width_ok:
                result.fail(f"s={branch.s}: uncovered residues {report.uncovered}")
                result.failures.extend(report.failing)
            if branch.s == cert.s_a and cert.quoted_pairs:
                missing = sorted(set(cert.quoted_pairs) - self.good_set(cert, branch).pairs)
                if missing:
                    result.fail(f"quoted pairs missing from the good set: {missing}")
        if not result.certified:
            result.flags.append("genus-partial")
        elif not cert.genus_complete:
            result.flags.append("genus completed by neighbours")
        if result.passed and not result.certified:
            logger.warning(f"Certificate {cert.label} passed on an incomplete genus")
        elif result.passed:
            logger.info(f"Certificate {cert.label} verified")
        else:
            logger.warning(f"Certificate {cert.label} failed: {result.failures}")
        self._reports[cert.coeffs] = result
        return result

    def _solve(self, coeffs: tuple[int, ...], n: int, b: int) -> tuple[int, ...] | None:
        a = (2 * n + b) // 3
        x = first_nonnegative_solution(coeffs, a, b)
        if x is not None and evaluate(coeffs, x) != n:
            raise Pent63Error(f"witness {x} for {coeffs} evaluates to {evaluate(coeffs, x)}")
        return x

    def represent(self, cert: Certificate, n: int) -> tuple[int, ...]:
        branch = cert.branch_for(n)
        if branch is None:
            raise ContractViolation(f"N={n} is not covered by the certificate of {cert.label}")
        if n % branch.half in branch.excluded_residues:
            raise ContractViolation(f"N={n} lies in an excluded residue mod {branch.half}")
        coeffs, big_a = cert.coeffs, cert.A
        cond = cert.condition.with_clauses(tuple(branch.restrictions))
        report = self.verify(cert)
        selection = next(
            (r.rselection.get(n % branch.half) for r in report.branches if r.s == branch.s),
            None,
        )
        if selection is None:
            raise WitnessNotFound(f"No r-selection for N={n} mod {branch.half} in {cert.label}")
        pair, step = selection
        r = choose_r(n, self.good_set(cert, branch), pair)
        count = branch.window_length // (3 * step)
        first = next(interval_candidates(n, big_a, 3 * step, r % (3 * step)), None)
        for k in range(count if first is not None else 0):
            b = first + 3 * step * k
            a = (2 * n + b) // 3
            if in_interval(n, big_a, b) and cond.holds(a, b):
                x = self._solve(coeffs, n, b)
                if x is not None:
                    return x
        raise WitnessNotFound(f"The window for N={n} gave no witness for {cert.label}")


def verify_certificate(cert: Certificate, certifier: Certifier | None = None) -> CertificateReport:
    return (certifier or Certifier()).verify(cert)


def constructive_represent(
    a: CoefficientVector | Sequence[int],
    n: int,
    cert: Certificate | None = None,
    certifier: Certifier | None = None,
    dataset_path: Path | None = None,
) -> tuple[int, ...]:
    """A non-negative x with sum a_i P5(x_i) = N, built through the certificate."""
    coeffs = coefficient_tuple(a)
    cert = cert or load(coeffs, dataset_path)
    if cert.coeffs != coeffs:
        raise ContractViolation(f"certificate {cert.label} does not belong to {coeffs}")
    return (certifier or Certifier()).represent(cert, n)


def sample_targets(cert: Certificate, count: int, rng: np.random.Generator) -> list[int]:
    """Pseudo-random N covered by the certificate, drawn from [n_min, 4 n_min]."""
    targets: list[int] = []
    branches = cert.effective_branches()
    while len(targets) < count:
        branch = branches[int(rng.integers(len(branches)))]
        n = int(rng.integers(branch.n_min, 4 * branch.n_min))
        if cert.branch_for(n) == branch and n % branch.half not in branch.excluded_residues:
            targets.append(n)
    return sorted(targets)

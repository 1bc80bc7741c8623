"""Tests for lattice enumeration, automorphisms, isometries and the pinned system."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pent63.errors import ContractViolation
from pent63.lattice import (
    SearchBudget,
    automorphism_group,
    determinant,
    diagonal_lattice,
    first_nonnegative_solution,
    is_isometric,
    is_positive_definite,
    identity,
    iter_scaled_embeddings,
    lll_reduce,
    matmul,
    matvec,
    nonneg_filter_and_N,
    orbit_representatives,
    orbits,
    rational_automorphisms,
    represents,
    solve_pinned_system,
    stabilizer,
    transpose,
    vectors_of_norm,
)
from pent63.models import ZLattice

K1125_K = ZLattice.from_rows([[1, 0, 0, 0], [0, 2, 1, 1], [0, 1, 2, 0], [0, 1, 0, 4]])
K1245_K2 = ZLattice.from_rows([[2, 1, 1, 0], [1, 3, 1, 1], [1, 1, 3, 1], [0, 1, 1, 4]])


def box_count(lattice: ZLattice, n: int) -> int:
    g = np.array(lattice.gram, dtype=float)
    inv = np.linalg.inv(g)
    bounds = [math.isqrt(int(n * inv[i][i]) + 1) + 1 for i in range(lattice.rank)]
    ranges = [range(-b, b + 1) for b in bounds]
    return sum(1 for x in itertools.product(*ranges) if lattice.Q(x) == n)


class TestVectorsOfNorm:
    def test_unit_vectors(self):
        vecs = vectors_of_norm(ZLattice.diagonal(1, 1, 1, 4), 1)
        assert len(vecs) == 6
        assert (1, 0, 0, 0) in vecs and (0, 0, -1, 0) in vecs

    def test_k1125_named_vectors(self):
        vecs = vectors_of_norm(ZLattice.diagonal(1, 1, 2, 5), 9)
        for v in [(1, 1, 1, 1), (3, 0, 0, 0), (2, 0, 0, 1), (1, 0, 2, 0)]:
            assert v in vecs

    def test_empty_when_norm_is_not_represented(self):
        assert vectors_of_norm(ZLattice.diagonal(1, 1, 2, 28), 14) == []

    def test_sorted_and_closed_under_negation(self):
        vecs = vectors_of_norm(K1245_K2, 12)
        assert vecs == sorted(vecs)
        assert {tuple(-x for x in v) for v in vecs} == set(vecs)

    def test_rejects_non_positive_norm(self):
        with pytest.raises(ContractViolation):
            vectors_of_norm(ZLattice.diagonal(1, 1), 0)

    @pytest.mark.parametrize("lattice", [ZLattice.diagonal(1, 2, 3, 5), K1125_K, K1245_K2])
    def test_counts_match_box_enumeration(self, lattice):
        for n in range(1, 31):
            assert len(vectors_of_norm(lattice, n)) == box_count(lattice, n), n

    @settings(max_examples=15, deadline=None)
    @given(
        entries=st.lists(st.integers(min_value=-2, max_value=2), min_size=16, max_size=16),
        n=st.integers(min_value=1, max_value=50),
    )
    def test_random_lattices_match_box_enumeration(self, entries, n):
        basis = np.array(entries).reshape(4, 4)
        assume(round(abs(np.linalg.det(basis))) >= 1)
        gram = basis.T @ basis
        lattice = ZLattice.from_rows(gram.tolist())
        inv = np.linalg.inv(gram.astype(float))
        assume(max(n * inv[i][i] for i in range(4)) <= 25)
        assert len(vectors_of_norm(lattice, n)) == box_count(lattice, n)


class TestAutomorphisms:
    def test_signed_permutations(self):
        assert len(automorphism_group(ZLattice.diagonal(1, 1, 1, 1))) == 384

    def test_distinct_diagonal_has_only_signs(self):
        assert len(automorphism_group(ZLattice.diagonal(1, 2, 3, 5))) == 16

    @pytest.mark.parametrize(
        "lattice", [ZLattice.diagonal(1, 2, 2, 3), K1125_K, K1245_K2, ZLattice.diagonal(1, 1, 2, 5)]
    )
    def test_group_axioms(self, lattice):
        group = automorphism_group(lattice)
        members = set(group)
        n = lattice.rank
        ident = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        minus = tuple(tuple(-x for x in row) for row in ident)
        assert ident in members and minus in members
        for u in group:
            assert matmul(matmul(transpose(u), lattice.gram), u) == lattice.gram
        for u, w in itertools.product(group[:12], group):
            assert matmul(u, w) in members

    def test_stabilizer_fixes_vector(self):
        lattice = ZLattice.diagonal(1, 1, 1, 1)
        stab = stabilizer(lattice, (1, 1, 1, 1))
        assert len(stab) == 24
        assert all(tuple(sum(r) for r in u) == (1, 1, 1, 1) for u in stab)


class TestOrbits:
    def test_single_orbit_of_unit_vectors(self):
        reps = orbit_representatives(ZLattice.diagonal(1, 1, 1, 4), 7)
        assert len(reps) == 1
        assert (1, 1, 1, 1) in orbits(ZLattice.diagonal(1, 1, 1, 4), 7)[0]

    def test_l1223_orbits(self):
        lattice = ZLattice.diagonal(1, 2, 2, 3)
        found = orbits(lattice, 8)
        assert len(found) == 3
        for named in [(1, 1, 1, 1), (2, 1, 1, 0), (0, 2, 0, 0)]:
            assert sum(named in orbit for orbit in found) == 1

    def test_k1125_orbits(self):
        assert len(orbit_representatives(ZLattice.diagonal(1, 1, 2, 5), 9)) == 4

    def test_representative_is_least(self):
        for orbit in orbits(K1125_K, 9):
            assert orbit[0] == min(orbit)

    @pytest.mark.parametrize(
        "lattice,n", [(K1125_K, 9), (K1245_K2, 12), (ZLattice.diagonal(1, 2, 4, 5), 12)]
    )
    def test_orbits_partition(self, lattice, n):
        group_order = len(automorphism_group(lattice))
        found = orbits(lattice, n)
        flat = [v for orbit in found for v in orbit]
        assert sorted(flat) == vectors_of_norm(lattice, n)
        assert all(group_order % len(orbit) == 0 for orbit in found)


class TestIsometry:
    def test_self(self):
        lattice = ZLattice.diagonal(1, 2, 4, 5)
        ident = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
        assert is_isometric(lattice, lattice) == ident

    def test_distinct_classes(self):
        assert is_isometric(ZLattice.diagonal(1, 2, 4, 5), ZLattice.diagonal(1, 1, 2, 20)) is None
        assert is_isometric(ZLattice.diagonal(1, 2, 4, 5), K1245_K2) is None

    def test_permuted_basis(self):
        left, right = ZLattice.diagonal(1, 1, 1, 4), ZLattice.diagonal(1, 1, 4, 1)
        u = is_isometric(left, right)
        assert u is not None
        assert matmul(matmul(transpose(u), left.gram), u) == right.gram

    def test_unimodular_change_of_basis(self):
        lattice = ZLattice.diagonal(1, 2, 3, 5)
        change = ((1, 1, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1), (0, 0, 0, 1))
        other = ZLattice.from_rows(matmul(matmul(transpose(change), lattice.gram), change))
        u = is_isometric(lattice, other)
        assert u is not None
        assert matmul(matmul(transpose(u), lattice.gram), u) == other.gram


class TestScaledEmbeddings:
    def test_budget_marks_exhaustion(self):
        budget = SearchBudget(limit=10)
        lattice = ZLattice.diagonal(1, 1, 1, 1)
        list(iter_scaled_embeddings(lattice, lattice, d=3, budget=budget))
        assert budget.exhausted

    def test_pinned_embeddings_map_vector(self):
        lattice = ZLattice.diagonal(1, 2, 2, 3)
        v, w = (2, 1, 1, 0), (1, 1, 1, 1)
        found = list(iter_scaled_embeddings(lattice, lattice, d=2, pin=(v, w)))
        assert found
        for m in found:
            assert tuple(sum(r[j] * v[j] for j in range(4)) for r in m) == (2, 2, 2, 2)

    def test_rational_automorphisms_fixing_diagonal(self):
        lattice = ZLattice.diagonal(1, 1, 1, 1)
        maps = rational_automorphisms(lattice, 2, fix=(1, 1, 1, 1))
        assert maps
        for rho in maps:
            assert rho.image((1, 1, 1, 1)) == (2, 2, 2, 2)


SKEW = ((1, 1, 0, 0), (0, 1, 0, 0), (0, 2, 1, 1), (0, 0, 0, 1))


def congruent(lattice: ZLattice, change) -> ZLattice:
    return ZLattice.from_rows(matmul(matmul(transpose(change), lattice.gram), change))


class TestReduction:
    def test_reduced_gram_matches_the_basis(self):
        skewed = congruent(ZLattice.diagonal(1, 2, 3, 5), SKEW)
        u, inv, reduced = lll_reduce(skewed)
        assert matmul(u, inv) == identity(4)
        assert matmul(matmul(transpose(u), skewed.gram), u) == reduced
        assert reduced[0][0] == 1
        assert determinant(ZLattice(gram=reduced)) == 30

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(-3, 3), min_size=6, max_size=6))
    def test_random_unimodular_changes(self, upper):
        it = iter(upper)
        change = tuple(
            tuple(1 if i == j else next(it) if j > i else 0 for j in range(4)) for i in range(4)
        )
        skewed = congruent(K1125_K, change)
        u, inv, reduced = lll_reduce(skewed)
        assert matmul(u, inv) == identity(4)
        assert matmul(matmul(transpose(u), skewed.gram), u) == reduced
        assert is_isometric(K1125_K, ZLattice(gram=reduced)) is not None

    def test_reduced_lattice_is_left_alone(self):
        u, _, reduced = lll_reduce(ZLattice.diagonal(1, 2, 4, 5))
        assert u == identity(4)
        assert reduced == ZLattice.diagonal(1, 2, 4, 5).gram

    def test_represents(self):
        target = ZLattice.diagonal(1, 1, 1, 1)
        source = congruent(ZLattice.diagonal(1, 1, 2, 2), SKEW)
        m = represents(source, target)
        assert m is not None
        assert matmul(matmul(transpose(m), target.gram), m) == source.gram
        assert represents(ZLattice.diagonal(1, 1, 1, 2), target) is None

    def test_anchored_representation(self):
        # e3 -> (0,0,1,1) and e4 -> (0,0,1,-1) give column sums (1, 1, 2, 0)
        target = ZLattice.diagonal(1, 1, 1, 1)
        source = congruent(ZLattice.diagonal(1, 1, 2, 2), SKEW)
        w = (1, 1, 1, 1)
        r = matvec(transpose(SKEW), (1, 1, 2, 0))
        m = represents(source, target, anchor=(w, r))
        assert m is not None
        assert matvec(transpose(m), w) == r
        assert matmul(matmul(transpose(m), target.gram), m) == source.gram


def test_determinant_and_definiteness():
    assert determinant(K1125_K) == 10
    assert determinant(K1245_K2) == 40
    assert is_positive_definite([[2, 1], [1, 2]])
    assert not is_positive_definite([[1, 2], [2, 1]])
    assert diagonal_lattice((1, 2, 4, 7)).det == 56


class TestPinnedSystem:
    def test_all_ones(self):
        assert (1, 1, 1, 1) in solve_pinned_system((1, 1, 1, 1), 4, 4)

    def test_zero_sum(self):
        sols = solve_pinned_system((1, 1, 1, 1), 4, 0)
        assert (1, 1, -1, -1) in sols
        assert len(sols) == 6

    def test_l1223_vector(self):
        assert (1, 1, 1, 1) in solve_pinned_system((1, 2, 2, 3), 8, 8)

    def test_cauchy_schwarz_obstruction(self):
        assert solve_pinned_system((1, 1, 1, 1), 4, 5) == []

    def test_needs_four_coefficients(self):
        with pytest.raises(ContractViolation):
            solve_pinned_system((1, 2, 3), 6, 6)

    @settings(max_examples=80, deadline=None)
    @given(
        coeffs=st.lists(st.integers(min_value=1, max_value=6), min_size=4, max_size=4),
        aval=st.integers(min_value=1, max_value=60),
        bval=st.integers(min_value=-20, max_value=20),
    )
    def test_matches_brute_force(self, coeffs, aval, bval):
        coeffs = tuple(sorted(coeffs))
        bound = math.isqrt(aval) + 1
        expected = sorted(
            x
            for x in itertools.product(range(-bound, bound + 1), repeat=4)
            if sum(c * t * t for c, t in zip(coeffs, x)) == aval
            and sum(c * t for c, t in zip(coeffs, x)) == bval
        )
        assert solve_pinned_system(coeffs, aval, bval) == expected

    def test_first_nonnegative(self):
        assert first_nonnegative_solution((1, 1, 1, 1), 4, 4) == (1, 1, 1, 1)
        assert first_nonnegative_solution((1, 1, 1, 1), 4, 0) is None


class TestNonnegFilter:
    def test_pentagonal_target(self):
        sols = solve_pinned_system((1, 1, 1, 1), 4, 4)
        assert nonneg_filter_and_N(sols, 5, 4, 4) == [((1, 1, 1, 1), 4)]

    def test_equal_values_collapse(self):
        for b in range(1, 10):
            assert nonneg_filter_and_N([], 5, b, b) == []
            assert nonneg_filter_and_N([(0, 0, 0, 0)], 5, b, b)[0][1] == b

    def test_negative_solutions_removed(self):
        sols = solve_pinned_system((1, 1, 1, 1), 4, 0)
        assert sols
        assert nonneg_filter_and_N(sols, 5, 4, 0, a=(1, 1, 1, 1)) == []

    def test_non_integral_target_rejected(self):
        with pytest.raises(ContractViolation):
            nonneg_filter_and_N([], 5, 4, 3)

    def test_positivity_bound_holds_on_samples(self):
        coeffs = (1, 2, 3, 7)
        for aval in range(2, 200, 2):
            for bval in range(0, 60, 2):
                if bval * bval < (13 - 1) * aval:
                    continue
                sols = solve_pinned_system(coeffs, aval, bval)
                assert all(min(x) >= 0 for x in sols)

"""Tests for the tabled sufficient conditions and their residue-class decisions."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pent63.conditions import (
    CONDITIONS,
    AnyPair,
    ExcludedForm,
    Implies,
    OddPair,
    Residue,
    get_condition,
    sufficient_condition,
)
from pent63.errors import ContractViolation


def smallest_partner(A: int, b: int) -> int:
    """Least a with a = b mod 2 and A*a - b*b > 0."""
    a = b * b // A + 1
    return a if (a - b) % 2 == 0 else a + 1


def positive_pairs(A: int, b: int):
    return st.integers(min_value=0, max_value=250).map(
        lambda k: (smallest_partner(A, b) + 2 * k, b)
    )


def test_every_quaternary_candidate_has_a_condition():
    assert len(CONDITIONS) == 35
    for cond_id, cond in CONDITIONS.items():
        assert cond.A == sum(int(c) for c in cond_id.strip("()").split(","))


@pytest.mark.parametrize(
    "cond_id,a,b,expected",
    [
        ("(1,1,1,4)", 6, 2, True),
        ("(1,1,1,4)", 5, 1, False),
        ("(1,2,2,2)", 2, 0, False),
        ("(1,2,2,2)", 3, 1, True),
        ("(1,2,2,3)", 3, 1, True),
        ("(1,2,2,3)", 2, 2, False),
        ("(1,2,3,7)", 4, 2, True),
        ("(1,1,3,4)", 2, 0, True),
        ("(1,1,3,4)", 4, 0, False),
        ("(1,1,3,4)", 1, 1, True),
    ],
)
def test_sufficient_condition_examples(cond_id, a, b, expected):
    assert sufficient_condition(cond_id, a, b) is expected


def test_condition_id_tolerates_spaces():
    assert get_condition("(1, 1, 1, 4)") is get_condition("(1,1,1,4)")


def test_unknown_condition_id():
    with pytest.raises(ContractViolation):
        get_condition("(1,2,4,9)")


def test_parity_mismatch_is_rejected():
    with pytest.raises(ContractViolation):
        sufficient_condition("(1,1,1,4)", 6, 1)


def test_indefinite_form_is_rejected():
    with pytest.raises(ContractViolation):
        sufficient_condition("(1,1,1,4)", 1, 3)


@given(st.integers(min_value=0, max_value=60).flatmap(lambda b: positive_pairs(13, b)))
def test_any_pair_condition_always_holds(pair):
    a, b = pair
    assert sufficient_condition("(1,2,3,7)", a, b)


class TestClauses:
    def test_odd_pair_needs_even_modulus(self):
        assert OddPair().decide(1, 1, 3, 7) is None
        assert OddPair().decide(1, 1, 2, 7) is True
        assert OddPair().decide(1, 0, 4, 7) is False

    def test_residue_needs_its_modulus(self):
        clause = Residue(variable="a", modulus=3, residues=(2,))
        assert clause.decide(2, 0, 2, 9) is None
        assert clause.decide(2, 0, 6, 9) is True
        assert clause.decide(1, 0, 6, 9) is False

    def test_negated_residue(self):
        clause = Residue(variable="b", modulus=5, residues=(0,), negate=True)
        assert clause.holds(1, 3, 5)
        assert not clause.holds(1, 10, 5)

    def test_excluded_form_undecided_until_refined(self):
        clause = ExcludedForm(prime=2, modulus=16, residue=14)
        # D = 7*1 - 1 = 6
        assert clause.decide(1, 1, 4, 7) is None
        assert clause.decide(1, 1, 16, 7) is True
        # D = 14
        assert clause.decide(2, 0, 16, 7) is False
        assert clause.refine_prime() == 2

    def test_excluded_form_strips_even_powers(self):
        clause = ExcludedForm(prime=2, modulus=8, residue=7)
        assert not clause.holds(7, 0, 4)
        assert not clause.holds(7 * 4, 0, 4)
        assert clause.holds(7 * 2, 0, 4)

    def test_excluded_form_without_stripping(self):
        clause = ExcludedForm(prime=2, modulus=16, residue=6, strip=False)
        assert not clause.holds(2, 0, 3)
        assert clause.holds(8, 0, 3)

    def test_implies(self):
        clause = Implies(
            premise=Residue(variable="b", modulus=3, residues=(0,)),
            conclusion=Residue(variable="a", modulus=3, residues=(2,)),
        )
        assert clause.modulus == 3
        assert clause.decide(1, 1, 3, 9) is True
        assert clause.decide(2, 0, 3, 9) is True
        assert clause.decide(1, 0, 3, 9) is False
        assert clause.decide(1, 0, 2, 9) is None

    def test_any_pair(self):
        assert AnyPair().decide(0, 1, 1, 9) is True
        assert AnyPair().describe() == "any a', b'"


class TestCondition:
    def test_base_modulus(self):
        assert get_condition("(1,1,1,4)").base_modulus == 4
        assert get_condition("(1,1,1,1)").base_modulus == 2
        assert get_condition("(1,1,2,9)").base_modulus == 26

    def test_refine_prime(self):
        assert get_condition("(1,2,2,2)").refine_prime() == 2
        assert get_condition("(1,2,3,3)").refine_prime() == 3
        assert get_condition("(1,1,1,1)").refine_prime() is None

    def test_with_clauses_adds_restrictions(self):
        cond = get_condition("(1,2,3,7)").with_clauses((OddPair(),))
        assert cond.cond_id == "(1,2,3,7)"
        assert not cond.holds(2, 0)
        assert cond.holds(3, 1)

    def test_describe(self):
        assert get_condition("(1,2,3,7)").describe() == "any a', b'"
        assert "D != 2^(2c)(16d+14)" in get_condition("(1,2,2,2)").describe()

    @pytest.mark.parametrize("cond_id", sorted(CONDITIONS))
    @given(
        b=st.integers(min_value=0, max_value=300),
        extra=st.integers(min_value=0, max_value=5_000),
        m=st.sampled_from([2, 4, 6, 8, 12, 16, 24, 32, 48, 72, 9 * 16]),
    )
    def test_decisions_agree_with_exact_evaluation(self, cond_id, b, extra, m):
        cond = get_condition(cond_id)
        a = smallest_partner(cond.A, b) + 2 * extra
        verdict = cond.decide(a % m, b % m, m)
        if verdict is not None:
            assert verdict == cond.holds(a, b)

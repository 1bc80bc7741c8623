"""Tests for the escalation tree, proper universal sums and the critical set."""

import pytest

from pent63.errors import ContractViolation
from pent63.escalate import (
    BAD_RESIDUES,
    CRITICAL_SET,
    CertifiedOracle,
    NodeDecision,
    build_tree,
    children_of,
    compare_table3,
    critical_set,
    level_counts,
    proper_rows,
    proper_universal_sums,
    reduction_argument,
    reduction_table,
    tree_rows,
    tree_to_json,
    universal_subsums,
    universality_check_63,
)
from pent63.models import EscalationNode, NodeStatus
from pent63.pentcore import pentagonal


@pytest.fixture(scope="module")
def tree() -> EscalationNode:
    return build_tree(CertifiedOracle(truant_limit=1000))


class ScriptedOracle:
    """Truant 2 for the empty sum and (1,); everything else as scripted."""

    def __init__(self, decisions: dict[tuple[int, ...], NodeDecision]):
        self.decisions = decisions

    def decide(self, coeffs: tuple[int, ...]) -> NodeDecision:
        if coeffs in self.decisions:
            return self.decisions[coeffs]
        return NodeDecision(status=NodeStatus.NON_UNIVERSAL, truant=2 if len(coeffs) < 2 else 1)


class TestChildren:
    def test_root(self):
        root = EscalationNode(coeffs=(), status=NodeStatus.NON_UNIVERSAL, truant=1)
        assert [c.coeffs for c in children_of(root)] == [(1,)]

    def test_ternary(self):
        node = EscalationNode(coeffs=(1, 2, 4), status=NodeStatus.NON_UNIVERSAL, truant=8)
        assert [c.coeffs[-1] for c in children_of(node)] == [4, 5, 6, 7, 8]

    def test_truant_below_last_coefficient(self):
        node = EscalationNode(coeffs=(1, 2, 4, 12), status=NodeStatus.NON_UNIVERSAL, truant=8)
        assert children_of(node) == []

    def test_universal_nodes_do_not_escalate(self):
        node = EscalationNode(coeffs=(1, 1, 1, 2), status=NodeStatus.UNIVERSAL)
        with pytest.raises(ContractViolation):
            children_of(node)


class TestOracle:
    @pytest.mark.parametrize(
        "coeffs,truant",
        [((), 1), ((1,), 2), ((1, 1), 3), ((1, 2), 4), ((1, 1, 1), 4), ((1, 1, 2), 9),
         ((1, 1, 3), 7), ((1, 2, 2), 6), ((1, 2, 3), 9), ((1, 2, 4), 8)],
    )
    def test_short_sums(self, coeffs, truant):
        decision = CertifiedOracle().decide(coeffs)
        assert decision.status == NodeStatus.NON_UNIVERSAL
        assert decision.truant == truant

    def test_quaternary_from_dataset(self):
        oracle = CertifiedOracle()
        assert oracle.decide((1, 1, 1, 2)).status == NodeStatus.UNIVERSAL
        decision = oracle.decide((1, 2, 3, 6))
        assert (decision.truant, decision.exceptional) == (63, [63])

    def test_open_case_keeps_its_flag(self):
        decision = CertifiedOracle().decide((1, 2, 4, 5))
        assert decision.truant == 13
        assert any("conjectural" in flag for flag in decision.flags)

    @pytest.mark.parametrize("coeffs,truant", [((1, 1, 3, 4, 7), 18), ((1, 2, 2, 5, 10), 33)])
    def test_non_universal_quinaries(self, coeffs, truant):
        decision = CertifiedOracle().decide(coeffs)
        assert decision.status == NodeStatus.NON_UNIVERSAL
        assert decision.truant == truant

    @pytest.mark.parametrize("c", [5, 6, 7, 8, 9, 10, 11, 13])
    def test_open_prefix_children_reduce(self, c):
        decision = CertifiedOracle().decide((1, 2, 4, 5, c))
        assert decision.status == NodeStatus.UNIVERSAL
        assert any("reduced mod 12" in flag for flag in decision.flags)

    def test_open_prefix_child_without_reduction(self):
        decision = CertifiedOracle().decide((1, 2, 4, 5, 12))
        assert decision.status == NodeStatus.UNIVERSAL
        assert decision.flags == ["covers E(1,2,4,12)"]

    def test_decisions_are_memoized(self):
        oracle = CertifiedOracle()
        assert oracle.decide((1, 2, 4)) is oracle.decide((1, 2, 4))


class TestReduction:
    @pytest.mark.parametrize("c", [5, 6, 7, 8, 9, 10, 11, 13])
    def test_every_bad_residue_moves(self, c):
        table = reduction_table(c)
        assert set(table) == set(BAD_RESIDUES)
        for n, x in table.items():
            assert x is not None
            assert (n - c * pentagonal(x)) % 12 not in BAD_RESIDUES

    def test_multiples_of_twelve_never_move(self):
        assert all(x is None for x in reduction_table(12).values())

    def test_least_argument(self):
        assert reduction_argument(8, 1) == 2
        assert reduction_argument(6, 10) == 1


class TestTree:
    def test_level_counts(self, tree):
        counts = level_counts(tree)
        assert counts[3].candidates == 6
        assert (counts[4].candidates, counts[4].universal) == (34, 15)
        assert (counts[5].candidates, counts[5].universal) == (366, 364)
        assert (counts[6].candidates, counts[6].universal) == (36, 36)
        assert not any(level.undecided or level.frontier for level in counts.values())

    def test_critical_set(self, tree):
        assert tuple(critical_set(tree)) == CRITICAL_SET
        assert max(critical_set(tree)) == 63

    def test_proper_universal_sums(self, tree):
        proper = [v.coeffs for v in proper_universal_sums(tree)]
        assert len(proper) == 15 + 364 + 36
        assert (1, 1, 1, 2) in proper
        assert (1, 2, 4, 5, 12) in proper
        assert (1, 1, 3, 4, 7) not in proper

    @pytest.mark.parametrize("coeffs", [(1, 1, 1, 2), (1, 2, 4, 6), (1, 1, 3, 4, 8)])
    def test_quaternary_and_quinary_leaves_are_strictly_proper(self, tree, coeffs):
        assert universal_subsums(coeffs) == []

    def test_some_senary_leaves_have_universal_subsums(self):
        assert (1, 2, 2, 5, 12) in universal_subsums((1, 2, 2, 5, 10, 12))

    def test_partial_tree_marks_frontier(self):
        partial = build_tree(CertifiedOracle(), max_depth=3)
        counts = level_counts(partial)
        assert counts[3].frontier == 6
        assert 4 not in counts
        assert critical_set(partial) == [1, 2, 3, 4, 6, 7, 8, 9]

    def test_undecided_nodes_block_the_results(self):
        oracle = ScriptedOracle({(1, 1): NodeDecision(status=NodeStatus.UNDECIDED)})
        partial = build_tree(oracle, max_depth=2)
        with pytest.raises(ContractViolation):
            critical_set(partial)
        with pytest.raises(ContractViolation):
            proper_universal_sums(partial)

    def test_max_depth_must_be_positive(self):
        with pytest.raises(ContractViolation):
            build_tree(ScriptedOracle({}), max_depth=0)

    def test_rows_and_json(self, tree):
        rows = list(tree_rows(tree))
        assert rows[0] == {"tuple": "()", "status": "non-universal", "truant": 1, "flags": ""}
        assert rows[1]["tuple"] == "(1)"
        assert len(rows) == 1 + 1 + 2 + 6 + 34 + 366 + 36
        data = tree_to_json(tree)
        assert data["coeffs"] == [] and data["truant"] == 1
        assert data["children"][0]["coeffs"] == [1]
        assert len(data["children"][0]["children"]) == 2


class TestTable3:
    def test_every_row_agrees(self, tree):
        comparison = compare_table3(tree)
        assert len(comparison) == 27
        assert all(row.passed for row in comparison), [
            (r.label, r.derived) for r in comparison if not r.passed
        ]

    def test_erratum_row(self, tree):
        row = next(r for r in compare_table3(tree) if r.label == "(1,1,3,4)")
        assert row.status == "erratum"
        assert row.derived == [4, 5, 6, 8, 9, 10, 11]
        assert row.note

    def test_rows_by_prefix(self, tree):
        rows = proper_rows(tree)
        assert rows[(1, 1, 1)] == [2]
        assert rows[(1, 1, 3, 4, 7)] == list(range(7, 19))


@pytest.mark.parametrize(
    "coeffs,expected",
    [
        ((1, 1, 1, 2), True),
        ((1, 2, 3, 6), False),
        ((1, 2, 4, 5), False),
        ((1, 2, 4, 5, 13), True),
        ((1, 1, 1, 1), False),
    ],
)
def test_universality_check_63(coeffs, expected):
    assert universality_check_63(coeffs) is expected


def test_critical_set_decides_every_tree_node(tree):
    for node in tree.walk():
        if node.coeffs:
            universal = node.status == NodeStatus.UNIVERSAL
            assert universality_check_63(node.coeffs) is universal, node.label

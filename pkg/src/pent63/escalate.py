"""Escalation of pentagonal sums, proper universal sums and the critical set."""

import logging
from collections import defaultdict
from collections.abc import Iterator, Sequence
from itertools import combinations
from typing import Literal, Protocol

from pydantic import BaseModel, Field
from tqdm import tqdm

from .config import get_settings
from .errors import CertificateNotFound, ContractViolation
from .genusdata import Dataset, Table3, load_dataset, load_table3
from .models import (
    CoefficientVector,
    EscalationNode,
    NodeStatus,
    coefficient_tuple,
    format_tuple,
)
from .pentcore import exceptional_set, is_representable, pentagonal, truant

logger = logging.getLogger(__name__)

CRITICAL_SET = (1, 2, 3, 4, 6, 7, 8, 9, 11, 13, 14, 17, 18, 19, 23, 28, 31, 33, 34, 39, 42, 63)

# (1,2,4,5) represents every N >= 355873 outside these classes mod 12.
OPEN_PREFIX = (1, 2, 4, 5)
BAD_RESIDUES = (1, 2, 5, 10)
RESIDUE_MODULUS = 12
REDUCTION_ARGUMENTS = range(5)

BLOCKS = {4: "quaternary", 5: "quinary", 6: "senary"}


class NodeDecision(BaseModel):
    status: NodeStatus
    truant: int | None = None
    exceptional: list[int] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)


class UniversalityOracle(Protocol):
    def decide(self, coeffs: tuple[int, ...]) -> NodeDecision: ...


def reduction_argument(c: int, n: int) -> int | None:
    """Least x <= 4 moving n - c*P5(x) out of the bad classes mod 12."""
    for x in REDUCTION_ARGUMENTS:
        if (n - c * pentagonal(x)) % RESIDUE_MODULUS not in BAD_RESIDUES:
            return x
    return None


def reduction_table(c: int) -> dict[int, int | None]:
    return {n: reduction_argument(c, n) for n in BAD_RESIDUES}


class CertifiedOracle:
    """Decides universality from certified E-sets and the exceptional-set chain.

    Ternary and shorter sums are decided by a truant search. Quaternary sums
    use the certificate dataset. Longer sums inherit the exceptional set of
    their prefix and drop the integers they represent.
    """

    def __init__(
        self,
        dataset: Dataset | None = None,
        truant_limit: int | None = None,
        recompute: bool = False,
        threads: int = 1,
    ):
        settings = get_settings()
        self.dataset = dataset or load_dataset()
        self.truant_limit = truant_limit or settings.truant_search_limit
        self.recompute = recompute
        self.threads = threads
        self._decisions: dict[tuple[int, ...], NodeDecision] = {}

    def _from_set(self, exceptional: list[int], flags: list[str]) -> NodeDecision:
        if not exceptional:
            return NodeDecision(status=NodeStatus.UNIVERSAL, flags=flags)
        return NodeDecision(
            status=NodeStatus.NON_UNIVERSAL,
            truant=exceptional[0],
            exceptional=exceptional,
            flags=flags,
        )

    def _by_truant(self, coeffs: tuple[int, ...]) -> NodeDecision:
        t = truant(coeffs, self.truant_limit, threads=self.threads)
        if t is None:
            return NodeDecision(
                status=NodeStatus.UNDECIDED, flags=[f"no truant up to {self.truant_limit}"]
            )
        return NodeDecision(status=NodeStatus.NON_UNIVERSAL, truant=t)

    def _quaternary(self, coeffs: tuple[int, ...]) -> NodeDecision:
        try:
            cert = self.dataset.get(coeffs)
        except CertificateNotFound:
            return self._by_truant(coeffs)
        expected = list(cert.E_expected)
        if self.recompute:
            computed = exceptional_set(coeffs, cert.sieve_limit, threads=self.threads)
            if computed != expected:
                logger.error(f"E-set of {cert.label} is {computed}, dataset has {expected}")
                return NodeDecision(
                    status=NodeStatus.UNDECIDED, flags=[f"E-set mismatch for {cert.label}"]
                )
        flags = [f for f in cert.flags() if f != "genus-partial"]
        return self._from_set(expected, flags)

    def _certified_subsum(self, coeffs: tuple[int, ...]) -> tuple[int, ...] | None:
        """A quaternary sub-sum with a proven E-set that ``coeffs`` fully represents."""
        for sub in sorted(set(combinations(coeffs, 4))):
            try:
                cert = self.dataset.get(sub)
            except CertificateNotFound:
                continue
            if cert.conjectural:
                continue
            if all(is_representable(coeffs, n) for n in cert.E_expected):
                return sub
        return None

    def _extended(self, coeffs: tuple[int, ...]) -> NodeDecision:
        parent = self.decide(coeffs[:-1])
        if parent.status == NodeStatus.UNDECIDED:
            return NodeDecision(status=NodeStatus.UNDECIDED, flags=list(parent.flags))
        if parent.status == NodeStatus.UNIVERSAL:
            return NodeDecision(status=NodeStatus.UNIVERSAL)
        if not parent.exceptional:
            return self._by_truant(coeffs)
        flags = []
        if coeffs[:-1] == OPEN_PREFIX:
            missing = [n for n, x in reduction_table(coeffs[-1]).items() if x is None]
            if missing:
                sub = self._certified_subsum(coeffs)
                if sub is None:
                    return NodeDecision(
                        status=NodeStatus.UNDECIDED,
                        flags=[f"no reduction for residues {missing} mod {RESIDUE_MODULUS}"],
                    )
                return NodeDecision(
                    status=NodeStatus.UNIVERSAL,
                    flags=[f"covers E{format_tuple(sub)}"],
                )
            flags.append(f"large N reduced mod {RESIDUE_MODULUS} onto {format_tuple(OPEN_PREFIX)}")
        remaining = [n for n in parent.exceptional if not is_representable(coeffs, n)]
        return self._from_set(remaining, flags)

    def decide(self, coeffs: tuple[int, ...]) -> NodeDecision:
        coeffs = tuple(coeffs)
        if coeffs in self._decisions:
            return self._decisions[coeffs]
        if not coeffs:
            decision = NodeDecision(status=NodeStatus.NON_UNIVERSAL, truant=1)
        elif len(coeffs) <= 3:
            decision = self._by_truant(coeffs)
        elif len(coeffs) == 4:
            decision = self._quaternary(coeffs)
        else:
            decision = self._extended(coeffs)
        if decision.status == NodeStatus.UNDECIDED:
            logger.warning(f"Universality of {format_tuple(coeffs)} undecided: {decision.flags}")
        self._decisions[coeffs] = decision
        return decision


def children_of(node: EscalationNode) -> list[CoefficientVector]:
    """Extensions a || c with a_k <= c <= t for a node with truant t."""
    if node.status not in (NodeStatus.NON_UNIVERSAL, NodeStatus.FRONTIER) or node.truant is None:
        raise ContractViolation(f"{node.label} is {node.status}; only non-universal nodes escalate")
    low = node.coeffs[-1] if node.coeffs else 1
    return [CoefficientVector(coeffs=(*node.coeffs, c)) for c in range(low, node.truant + 1)]


def build_tree(
    oracle: UniversalityOracle | None = None,
    max_depth: int = 6,
    show_progress: bool = False,
) -> EscalationNode:
    """Escalation tree from the empty sum; non-universal nodes at max_depth become frontier."""
    if max_depth < 1:
        raise ContractViolation(f"max_depth must be positive, got {max_depth}")
    oracle = oracle or CertifiedOracle()
    bar = tqdm(desc="escalation", unit="node", disable=not show_progress)

    def grow(coeffs: tuple[int, ...]) -> EscalationNode:
        decision = oracle.decide(coeffs)
        bar.update(1)
        status, children = decision.status, []
        if status == NodeStatus.NON_UNIVERSAL:
            if len(coeffs) >= max_depth:
                status = NodeStatus.FRONTIER
            else:
                parent = EscalationNode(coeffs=coeffs, status=status, truant=decision.truant)
                children = [grow(child.coeffs) for child in children_of(parent)]
        return EscalationNode(
            coeffs=coeffs,
            status=status,
            truant=decision.truant,
            children=children,
            flags=decision.flags,
        )

    try:
        tree = grow(())
    finally:
        bar.close()
    counts = level_counts(tree)
    for k, level in sorted(counts.items()):
        logger.info(f"Level {k}: {level.candidates} candidates, {level.universal} universal")
    return tree


class LevelCount(BaseModel):
    candidates: int = 0
    universal: int = 0
    non_universal: int = 0
    frontier: int = 0
    undecided: int = 0


def level_counts(tree: EscalationNode) -> dict[int, LevelCount]:
    counts: dict[int, LevelCount] = defaultdict(LevelCount)
    for node in tree.walk():
        level = counts[len(node.coeffs)]
        level.candidates += 1
        match node.status:
            case NodeStatus.UNIVERSAL:
                level.universal += 1
            case NodeStatus.NON_UNIVERSAL:
                level.non_universal += 1
            case NodeStatus.FRONTIER:
                level.frontier += 1
            case NodeStatus.UNDECIDED:
                level.undecided += 1
    return dict(counts)


def _require_decided(tree: EscalationNode) -> None:
    undecided = [n.label for n in tree.walk() if n.status == NodeStatus.UNDECIDED]
    if undecided:
        raise ContractViolation(f"tree has undecided nodes: {', '.join(undecided)}")


def proper_universal_sums(tree: EscalationNode) -> list[CoefficientVector]:
    """Universal nodes of the escalation, which all have a non-universal parent."""
    _require_decided(tree)
    found = [n.coeffs for n in tree.walk() if n.status == NodeStatus.UNIVERSAL]
    return [CoefficientVector(coeffs=c) for c in sorted(found)]


def critical_set(tree: EscalationNode) -> list[int]:
    """Union of the truants of the tree."""
    _require_decided(tree)
    return sorted({n.truant for n in tree.walk() if n.truant is not None})


def universality_check_63(a: CoefficientVector | Sequence[int]) -> bool:
    """Whether the sum represents every integer of the critical set."""
    coeffs = coefficient_tuple(a)
    return all(is_representable(coeffs, n) for n in CRITICAL_SET)


def universal_subsums(
    a: CoefficientVector | Sequence[int], oracle: CertifiedOracle | None = None
) -> list[tuple[int, ...]]:
    """Sums with one coefficient deleted that are universal."""
    coeffs = coefficient_tuple(a)
    oracle = oracle or CertifiedOracle()
    found = []
    for sub in sorted({coeffs[:i] + coeffs[i + 1 :] for i in range(len(coeffs))}):
        if not sub:
            continue
        if oracle.decide(sub).status == NodeStatus.UNIVERSAL:
            found.append(sub)
    return found


def tree_rows(tree: EscalationNode) -> Iterator[dict]:
    """Flat (tuple, status, truant, flags) rows in depth-first order."""
    for node in tree.walk():
        yield {
            "tuple": node.label,
            "status": str(node.status),
            "truant": node.truant,
            "flags": ";".join(node.flags),
        }


def tree_to_json(node: EscalationNode) -> dict:
    return {
        "coeffs": list(node.coeffs),
        "status": str(node.status),
        "truant": node.truant,
        "flags": list(node.flags),
        "children": [tree_to_json(child) for child in node.children],
    }


RowStatus = Literal["match", "erratum", "mismatch", "extra"]


class Table3Comparison(BaseModel):
    label: str
    block: str
    expected: list[int] = Field(default_factory=list)
    derived: list[int] = Field(default_factory=list)
    status: RowStatus
    note: str | None = None

    @property
    def passed(self) -> bool:
        return self.status in ("match", "erratum")


def proper_rows(tree: EscalationNode) -> dict[tuple[int, ...], list[int]]:
    """Proper universal sums grouped by everything but their last coefficient."""
    rows: dict[tuple[int, ...], list[int]] = defaultdict(list)
    for vector in proper_universal_sums(tree):
        rows[vector.coeffs[:-1]].append(vector.coeffs[-1])
    return dict(rows)


def compare_table3(tree: EscalationNode, reference: Table3 | None = None) -> list[Table3Comparison]:
    """Row-by-row comparison of the derived proper universal sums with the reference."""
    reference = reference or load_table3()
    derived = proper_rows(tree)
    result = []
    for row in reference.rows:
        values = derived.pop(row.prefix, [])
        block = BLOCKS.get(len(row.prefix) + 1, "other")
        if values == row.values:
            status, note = "match", None
        elif row.corrected_high is not None and values == row.corrected_values:
            status, note = "erratum", row.erratum
            logger.warning(f"Reference row {row.label} differs from print: {row.erratum}")
        else:
            status, note = "mismatch", None
            logger.error(f"Reference row {row.label}: derived {values}, expected {row.values}")
        result.append(
            Table3Comparison(
                label=row.label,
                block=block,
                expected=row.values,
                derived=values,
                status=status,
                note=note,
            )
        )
    for prefix, values in sorted(derived.items()):
        logger.error(f"Derived row {format_tuple(prefix)} is missing from the reference")
        result.append(
            Table3Comparison(
                label=format_tuple(prefix),
                block=BLOCKS.get(len(prefix) + 1, "other"),
                derived=values,
                status="extra",
            )
        )
    return result

"""Sufficient conditions for [A, b', a'] to be represented by the genus of L_a.

Each quaternary tuple carries a conjunction of clauses over a', b' and the
discriminant D = A a' - b'^2. Besides the exact evaluation, every clause can
be decided on a residue class (a' mod M, b' mod M); the certificate verifier
uses this to check windows over finite residue systems.
"""

import logging
from math import lcm
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field

from .errors import ContractViolation

logger = logging.getLogger(__name__)

Decision = bool | None


def _p_part(m: int, p: int) -> int:
    """Largest power of p dividing m."""
    q = 1
    while m % (q * p) == 0:
        q *= p
    return q


def _value(variable: str, a: int, b: int, big_a: int) -> int:
    if variable == "a":
        return a
    if variable == "b":
        return b
    return big_a * a - b * b


class OddPair(BaseModel):
    """a' and b' both odd."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["odd_pair"] = "odd_pair"

    @property
    def modulus(self) -> int:
        return 2

    def holds(self, a: int, b: int, big_a: int) -> bool:
        return a % 2 == 1 and b % 2 == 1

    def decide(self, a: int, b: int, m: int, big_a: int) -> Decision:
        if m % 2:
            return None
        return self.holds(a, b, big_a)

    def refine_prime(self) -> int | None:
        return None

    def describe(self) -> str:
        return "a' = b' = 1 (mod 2)"


class Residue(BaseModel):
    """``variable mod modulus`` in ``residues`` (or outside them when negated)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["residue"] = "residue"
    variable: Literal["a", "b", "D"]
    modulus: int = Field(..., ge=2)
    residues: tuple[int, ...]
    negate: bool = False

    def holds(self, a: int, b: int, big_a: int) -> bool:
        inside = _value(self.variable, a, b, big_a) % self.modulus in self.residues
        return inside != self.negate

    def decide(self, a: int, b: int, m: int, big_a: int) -> Decision:
        if m % self.modulus:
            return None
        return self.holds(a, b, big_a)

    def refine_prime(self) -> int | None:
        return None

    def describe(self) -> str:
        name = {"a": "a'", "b": "b'", "D": "D"}[self.variable]
        rel = "!=" if self.negate else "="
        res = ",".join(str(r) for r in self.residues)
        return f"{name} {rel} {res} (mod {self.modulus})"


class ExcludedForm(BaseModel):
    """D != p^(2c) (modulus*d + residue) for all c, d >= 0.

    With ``strip`` off only c = 0 is excluded.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["excluded_form"] = "excluded_form"
    prime: int = Field(..., ge=2)
    modulus: int = Field(..., ge=2)
    residue: int = Field(..., ge=0)
    strip: bool = True

    def _reduced(self, d: int) -> int:
        if self.strip:
            square = self.prime * self.prime
            while d % square == 0:
                d //= square
        return d

    def holds(self, a: int, b: int, big_a: int) -> bool:
        d = big_a * a - b * b
        if d <= 0:
            return True
        return self._reduced(d) % self.modulus != self.residue

    def decide(self, a: int, b: int, m: int, big_a: int) -> Decision:
        pe = _p_part(m, self.prime)
        r = (big_a * a - b * b) % pe
        if not self.strip:
            if pe % self.modulus:
                return None
            return r % self.modulus != self.residue
        if r == 0:
            return None
        # v_p(D) is known exactly, strip the even part of it
        square = self.prime * self.prime
        stripped = 1
        while r % (stripped * square) == 0:
            stripped *= square
        if pe % (stripped * self.modulus):
            return None
        return (r // stripped) % self.modulus != self.residue

    def refine_prime(self) -> int | None:
        return self.prime

    def describe(self) -> str:
        form = f"{self.modulus}d+{self.residue}"
        if self.strip:
            return f"D != {self.prime}^(2c)({form})"
        return f"D != {form}"


class AnyPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["any"] = "any"

    @property
    def modulus(self) -> int:
        return 1

    def holds(self, a: int, b: int, big_a: int) -> bool:
        return True

    def decide(self, a: int, b: int, m: int, big_a: int) -> Decision:
        return True

    def refine_prime(self) -> int | None:
        return None

    def describe(self) -> str:
        return "any a', b'"


Atom = Annotated[OddPair | Residue | ExcludedForm | AnyPair, Field(discriminator="kind")]


class Implies(BaseModel):
    """premise => conclusion."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["implies"] = "implies"
    premise: Atom
    conclusion: Atom

    @property
    def modulus(self) -> int:
        return lcm(self.premise.modulus, self.conclusion.modulus)

    def holds(self, a: int, b: int, big_a: int) -> bool:
        return not self.premise.holds(a, b, big_a) or self.conclusion.holds(a, b, big_a)

    def decide(self, a: int, b: int, m: int, big_a: int) -> Decision:
        premise = self.premise.decide(a, b, m, big_a)
        if premise is False:
            return True
        conclusion = self.conclusion.decide(a, b, m, big_a)
        if premise is True:
            return conclusion
        return True if conclusion is True else None

    def refine_prime(self) -> int | None:
        return self.premise.refine_prime() or self.conclusion.refine_prime()

    def describe(self) -> str:
        return f"{self.premise.describe()} => {self.conclusion.describe()}"


Clause = Annotated[
    OddPair | Residue | ExcludedForm | AnyPair | Implies, Field(discriminator="kind")
]


class Condition(BaseModel):
    """Conjunction of clauses, keyed by the tuple it belongs to."""

    model_config = ConfigDict(frozen=True)

    cond_id: str
    A: int = Field(..., ge=1)
    clauses: tuple[Clause, ...] = ()

    def holds(self, a: int, b: int) -> bool:
        return all(c.holds(a, b, self.A) for c in self.clauses)

    def decide(self, a: int, b: int, m: int) -> Decision:
        """Decide the class (a mod m, b mod m); None when m is too coarse."""
        undecided = False
        for clause in self.clauses:
            verdict = clause.decide(a, b, m, self.A)
            if verdict is False:
                return False
            if verdict is None:
                undecided = True
        return None if undecided else True

    @property
    def base_modulus(self) -> int:
        return lcm(2, *(c.modulus for c in self.clauses))

    def refine_prime(self) -> int | None:
        return next((p for c in self.clauses if (p := c.refine_prime())), None)

    def with_clauses(self, extra: tuple[Clause, ...]) -> "Condition":
        return Condition(cond_id=self.cond_id, A=self.A, clauses=(*self.clauses, *extra))

    def describe(self) -> str:
        if not self.clauses:
            return "any a', b'"
        return " and ".join(c.describe() for c in self.clauses)


def _odd() -> OddPair:
    return OddPair()


def _not_div(variable: str, p: int) -> Residue:
    return Residue(variable=variable, modulus=p, residues=(0,), negate=True)


def _res(variable: str, m: int, *residues: int) -> Residue:
    return Residue(variable=variable, modulus=m, residues=residues)


def _form(p: int, m: int, r: int, strip: bool = True) -> ExcludedForm:
    return ExcludedForm(prime=p, modulus=m, residue=r, strip=strip)


_TABLE: dict[tuple[int, ...], tuple] = {
    (1, 1, 1, 1): (_odd(),),
    (1, 1, 1, 2): (_not_div("b", 5),),
    (1, 1, 1, 3): (_res("a", 3, 2),),
    (1, 1, 1, 4): (_res("a", 4, 2),),
    (1, 1, 2, 2): (_odd(),),
    (1, 1, 2, 3): (_not_div("b", 7),),
    (1, 1, 2, 4): (_odd(),),
    (1, 1, 2, 5): (_not_div("D", 5),),
    (1, 1, 2, 6): (_not_div("b", 5),),
    (1, 1, 2, 7): (AnyPair(),),
    (1, 1, 2, 8): (_odd(),),
    (1, 1, 2, 9): (_not_div("b", 13),),
    (1, 1, 3, 3): (_res("D", 3, 1), _odd()),
    (1, 1, 3, 4): (Implies(premise=_res("b", 3, 0), conclusion=_res("a", 3, 2)),),
    (1, 1, 3, 5): (_not_div("b", 5),),
    (1, 1, 3, 6): (Residue(variable="D", modulus=3, residues=(2,), negate=True), _not_div("b", 11)),
    (1, 1, 3, 7): (_not_div("D", 7),),
    (1, 2, 2, 2): (_form(2, 16, 14),),
    (1, 2, 2, 3): (_odd(),),
    (1, 2, 2, 4): (_form(2, 8, 7),),
    (1, 2, 2, 5): (AnyPair(),),
    (1, 2, 2, 6): (_not_div("b", 11),),
    (1, 2, 3, 3): (_form(3, 3, 1),),
    (1, 2, 3, 4): (_odd(),),
    (1, 2, 3, 5): (_not_div("b", 11),),
    (1, 2, 3, 6): (_form(2, 8, 7),),
    (1, 2, 3, 7): (AnyPair(),),
    (1, 2, 3, 8): (_odd(),),
    (1, 2, 3, 9): (Implies(premise=_res("b", 3, 0), conclusion=_res("a", 3, 0)),),
    (1, 2, 4, 4): (_form(2, 16, 6, strip=False), _not_div("b", 11)),
    (1, 2, 4, 5): (_form(2, 16, 6),),
    (1, 2, 4, 6): (_form(2, 8, 5),),
    (1, 2, 4, 7): (AnyPair(),),
    (1, 2, 4, 8): (_form(2, 8, 7),),
    (1, 2, 4, 12): (_form(2, 16, 10),),
}


def _label(coeffs: tuple[int, ...]) -> str:
    return "(" + ",".join(str(c) for c in coeffs) + ")"


CONDITIONS: dict[str, Condition] = {
    _label(coeffs): Condition(cond_id=_label(coeffs), A=sum(coeffs), clauses=clauses)
    for coeffs, clauses in _TABLE.items()
}


def get_condition(cond_id: str) -> Condition:
    try:
        return CONDITIONS[cond_id.replace(" ", "")]
    except KeyError as e:
        raise ContractViolation(f"Unknown condition id {cond_id!r}") from e


def sufficient_condition(cond_id: str, a: int, b: int) -> bool:
    """Evaluate the tabled sufficient condition at (a', b')."""
    cond = get_condition(cond_id)
    if (a - b) % 2:
        raise ContractViolation(f"a'={a} and b'={b} differ in parity")
    if cond.A * a - b * b <= 0:
        raise ContractViolation(f"[{cond.A},{b},{a}] is not positive definite")
    return cond.holds(a, b)

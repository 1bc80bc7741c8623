"""Per-tuple certificate dataset: bounds, E-sets, genus representatives, branches."""

import json
import logging
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .cache import DiskCache
from .conditions import Clause, Condition, get_condition
from .config import get_settings
from .errors import CertificateNotFound, DatasetIntegrityError, Pent63Error
from .genus import genus_classes, neighbour_primes
from .lattice import is_isometric, orbit_representatives
from .models import CoefficientVector, ScaledIsometry, ZLattice, format_tuple
from .pentcore import build_table, export_bits, import_bits

logger = logging.getLogger(__name__)

DATASET_FILE = "certificates.json"
TABLE3_FILE = "table3.json"


class SeedMatrix(BaseModel):
    """A quoted tau = numerator / denom mapping the member into L."""

    numerator: list[list[int]]
    denom: int = Field(..., ge=1)

    def as_tuple(self) -> tuple[tuple[tuple[int, ...], ...], int]:
        return tuple(tuple(row) for row in self.numerator), self.denom


class GenusMember(BaseModel):
    name: str
    diag: list[int] | None = None
    gram: list[list[int]] | None = None
    orbit_count: int | None = Field(default=None, description="Quoted |R(A,K)/O(K)|")
    modulus: int | None = Field(default=None, description="Compute the good set at this s")
    seeds: list[SeedMatrix] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_shape(self) -> "GenusMember":
        if (self.diag is None) == (self.gram is None):
            raise ValueError(f"member {self.name} needs exactly one of diag or gram")
        return self

    @property
    def lattice(self) -> ZLattice:
        if self.diag is not None:
            return ZLattice.diagonal(*self.diag)
        return ZLattice.from_rows(self.gram)


class Branch(BaseModel):
    """One line of argument: a modulus s, a bound and the residues of N it serves."""

    s: int = Field(..., ge=1)
    n_min: int = Field(..., ge=1)
    B: int = Field(default=1, ge=1)
    window: int | None = None
    steps: list[int] | None = None
    serve_modulus: int = Field(default=1, ge=1)
    serve_residues: list[int] = Field(default_factory=lambda: [0])
    excluded_residues: list[int] = Field(default_factory=list)
    restrictions: list[Clause] = Field(default_factory=list)
    skip_divisible_by: int | None = None

    @model_validator(mode="after")
    def validate_steps(self) -> "Branch":
        for h in self.step_list:
            if self.s % h or self.window_length % (3 * h):
                raise ValueError(f"step {h} must divide s={self.s} and window/3")
        if self.half % self.serve_modulus:
            raise ValueError(f"serve modulus {self.serve_modulus} must divide {self.half}")
        return self

    @property
    def half(self) -> int:
        return max(1, self.s // 2)

    @property
    def window_length(self) -> int:
        return self.window if self.window is not None else 3 * self.s * self.B

    @property
    def step_list(self) -> list[int]:
        return self.steps if self.steps is not None else [self.s]

    def serves(self, n: int) -> bool:
        """Whether N = n (mod serve_modulus) falls in this branch."""
        return n % self.serve_modulus in self.serve_residues

    def needed_residues(self) -> list[int]:
        return [n for n in range(self.half) if self.serves(n)]


class Certificate(BaseModel):
    coeffs: tuple[int, ...]
    type_class: int = Field(..., ge=1, le=4)
    N_a: int = Field(..., ge=1)
    s_a: int = Field(..., ge=1)
    B_a: int = Field(..., ge=1)
    E_expected: list[int] = Field(default_factory=list)
    class_number: int | None = None
    genus: list[GenusMember]
    genus_complete: bool = True
    branches: list[Branch] = Field(default_factory=list)
    verified_limit: int | None = None
    conjectural: bool = False
    quoted_pairs: list[tuple[int, int]] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @field_validator("coeffs")
    @classmethod
    def validate_coeffs(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if len(v) != 4:
            raise ValueError(f"certificates cover quaternary tuples, got {v}")
        CoefficientVector(coeffs=v)
        return v

    @model_validator(mode="after")
    def validate_genus(self) -> "Certificate":
        if not self.genus or self.genus[0].lattice != ZLattice.diagonal(*self.coeffs):
            raise ValueError(f"first genus member of {self.label} must be the diagonal lattice")
        det = self.genus[0].lattice.det
        for member in self.genus[1:]:
            if member.lattice.det != det:
                raise ValueError(f"{self.label}: member {member.name} has another determinant")
        if sorted(self.E_expected) != self.E_expected:
            raise ValueError(f"{self.label}: E_expected must be sorted")
        return self

    @property
    def label(self) -> str:
        return format_tuple(self.coeffs)

    @property
    def vector(self) -> CoefficientVector:
        return CoefficientVector(coeffs=self.coeffs)

    @property
    def A(self) -> int:  # noqa: N802
        return sum(self.coeffs)

    @property
    def cond_id(self) -> str:
        return self.label

    @property
    def condition(self) -> Condition:
        return get_condition(self.cond_id)

    @property
    def lattices(self) -> list[ZLattice]:
        return [m.lattice for m in self.genus]

    @property
    def sieve_limit(self) -> int:
        return self.verified_limit if self.verified_limit is not None else self.N_a

    def effective_branches(self) -> list[Branch]:
        if self.branches:
            return self.branches
        return [Branch(s=self.s_a, n_min=self.N_a, B=self.B_a)]

    def branch_for(self, n: int) -> Branch | None:
        """The branch proving N = n, if any."""
        for branch in self.effective_branches():
            if n >= branch.n_min and branch.serves(n):
                return branch
        return None

    def flags(self) -> list[str]:
        out = []
        if not self.genus_complete:
            out.append("genus-partial")
        if self.conjectural:
            out.append(f"E-set beyond {self.sieve_limit} conjectural")
        return out


class Dataset(BaseModel):
    certificates: list[Certificate]

    @model_validator(mode="after")
    def validate_unique(self) -> "Dataset":
        seen = set()
        for cert in self.certificates:
            if cert.coeffs in seen:
                raise ValueError(f"duplicate certificate {cert.label}")
            seen.add(cert.coeffs)
        return self

    def get(self, coeffs: tuple[int, ...]) -> Certificate:
        for cert in self.certificates:
            if cert.coeffs == tuple(coeffs):
                return cert
        raise CertificateNotFound(f"No certificate for {format_tuple(coeffs)}")


class Table3Row(BaseModel):
    prefix: tuple[int, ...]
    low: int
    high: int
    exclude: list[int] = Field(default_factory=list)
    corrected_high: int | None = Field(
        default=None, description="Upper bound implied by the computed truant of the prefix"
    )
    erratum: str | None = None

    @property
    def values(self) -> list[int]:
        return [c for c in range(self.low, self.high + 1) if c not in self.exclude]

    @property
    def corrected_values(self) -> list[int]:
        high = self.corrected_high if self.corrected_high is not None else self.high
        return [c for c in range(self.low, high + 1) if c not in self.exclude]

    @property
    def label(self) -> str:
        return format_tuple(self.prefix)


class Table3(BaseModel):
    rows: list[Table3Row]


def _read_json(path: Path | None, name: str) -> Any:
    try:
        if path is None:
            text = files("pent63").joinpath("data", name).read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetIntegrityError(f"Cannot read {path or name}: {e}") from e


@lru_cache(maxsize=8)
def load_dataset(path: Path | None = None) -> Dataset:
    """Load and validate the certificate dataset (bundled file by default)."""
    raw = _read_json(path, DATASET_FILE)
    try:
        dataset = Dataset.model_validate(raw)
    except ValidationError as e:
        raise DatasetIntegrityError(f"Certificate dataset failed validation: {e}") from e
    logger.debug(f"Loaded {len(dataset.certificates)} certificates")
    return dataset


def load(a: CoefficientVector | tuple[int, ...], path: Path | None = None) -> Certificate:
    coeffs = a.coeffs if isinstance(a, CoefficientVector) else tuple(a)
    return load_dataset(path).get(coeffs)


@lru_cache(maxsize=1)
def load_table3() -> Table3:
    try:
        return Table3.model_validate(_read_json(None, TABLE3_FILE))
    except ValidationError as e:
        raise DatasetIntegrityError(f"Proper-sum reference table failed validation: {e}") from e


class RowCheck(BaseModel):
    label: str
    passed: bool = True
    scaled: bool = False
    limit: int = 0
    E_computed: list[int] = Field(default_factory=list)
    E_expected: list[int] = Field(default_factory=list)
    failures: list[str] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)


class ValidationReport(BaseModel):
    rows: list[RowCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


class DatasetValidator:
    """Necessary-condition checks of every certificate row."""

    def __init__(
        self,
        dataset: Dataset | None = None,
        threads: int = 1,
        limit_overrides: dict[tuple[int, ...], int] | None = None,
        check_sets: bool = True,
        check_genus: bool = True,
        cache: DiskCache | None = None,
    ):
        self.dataset = dataset or load_dataset()
        self.threads = threads
        self.limit_overrides = limit_overrides or {}
        self.check_sets = check_sets
        self.check_genus_data = check_genus
        self.cache = cache or DiskCache(None)

    def exceptional(self, coeffs: tuple[int, ...], limit: int) -> list[int]:
        key = {"coeffs": list(coeffs), "limit": limit}
        data = self.cache.get_bytes("tables", key)
        if data is not None:
            return import_bits(data, coeffs, limit).exceptional()
        table = build_table(coeffs, limit, threads=self.threads)
        self.cache.put_bytes("tables", key, export_bits(table))
        return table.exceptional()

    def check_genus(self, cert: Certificate, row: RowCheck) -> None:
        lattices = cert.lattices
        for i in range(len(lattices)):
            for j in range(i + 1, len(lattices)):
                if is_isometric(lattices[i], lattices[j]) is not None:
                    row.fail(f"{cert.genus[i].name} and {cert.genus[j].name} are isometric")
        for member in cert.genus:
            if member.orbit_count is None:
                continue
            found = len(orbit_representatives(member.lattice, cert.A))
            if found != member.orbit_count:
                quoted = member.orbit_count
                row.fail(f"{member.name}: {found} orbits on R({cert.A}), quoted {quoted}")
        for member in cert.genus:
            for seed in member.seeds:
                m, d = seed.as_tuple()
                try:
                    ScaledIsometry(numerator=m, denom=d, source=member.lattice, target=lattices[0])
                except ValidationError as e:
                    reason = e.errors()[0]["msg"]
                    row.fail(f"{member.name}: seed is not a scaled isometry into L ({reason})")
        if row.passed and (cert.genus_complete or cert.class_number is not None):
            self.check_class_number(cert, row)

    def check_class_number(self, cert: Certificate, row: RowCheck) -> None:
        lattices = cert.lattices
        primes = neighbour_primes(lattices[0], get_settings().genus_neighbour_primes)
        found = len(genus_classes(lattices[0], lattices[1:], primes))
        if cert.class_number is not None and found != cert.class_number:
            row.fail(f"{found} classes in the genus, quoted class number {cert.class_number}")
        if cert.genus_complete and found != len(lattices):
            row.fail(f"genus marked complete but {found - len(lattices)} classes are missing")

    def check_exceptions(self, cert: Certificate, row: RowCheck) -> None:
        limit = cert.sieve_limit
        override = self.limit_overrides.get(cert.coeffs)
        if override is not None and override < limit:
            limit, row.scaled = override, True
        row.limit = limit
        expected = [n for n in cert.E_expected if n <= limit]
        row.E_expected = expected
        row.E_computed = self.exceptional(cert.coeffs, limit)
        if row.E_computed != expected:
            row.fail(f"E up to {limit} is {row.E_computed}, expected {expected}")

    def check(self, cert: Certificate) -> RowCheck:
        row = RowCheck(label=cert.label, flags=cert.flags())
        try:
            if self.check_genus_data:
                self.check_genus(cert, row)
            if self.check_sets:
                self.check_exceptions(cert, row)
        except Pent63Error as e:
            logger.error(f"Validation of {cert.label} failed: {e}")
            row.fail(str(e))
        if row.passed:
            logger.info(f"Certificate {cert.label} validated")
        return row

    def validate_all(self) -> ValidationReport:
        report = ValidationReport()
        for cert in self.dataset.certificates:
            report.rows.append(self.check(cert))
        return report


def validate_all(**kwargs) -> ValidationReport:
    return DatasetValidator(**kwargs).validate_all()

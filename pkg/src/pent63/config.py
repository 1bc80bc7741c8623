"""Environment-driven configuration using pydantic-settings."""

import os
from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigurationError

OutputFormat = Literal["text", "json", "csv"]


def parse_tuple_label(label: str) -> tuple[int, ...]:
    """Parse ``"1,2,4,5"`` or ``"(1,2,4,5)"`` into a coefficient tuple."""
    body = label.strip().strip("()")
    try:
        coeffs = tuple(int(part) for part in body.split(",") if part.strip())
    except ValueError as e:
        raise ConfigurationError(f"Invalid coefficient tuple {label!r}: {e}") from e
    if not coeffs:
        raise ConfigurationError(f"Empty coefficient tuple {label!r}")
    return coeffs


def parse_limit_overrides(spec: str) -> dict[tuple[int, ...], int]:
    """Parse ``"1,1,2,5=1000;1,2,4,7=5000"`` into a mapping tuple -> limit."""
    overrides: dict[tuple[int, ...], int] = {}
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigurationError(f"Limit override {item!r} must look like 1,1,2,5=1000")
        label, value = item.rsplit("=", 1)
        try:
            limit = int(value)
        except ValueError as e:
            raise ConfigurationError(f"Limit override {item!r} has a non-integer limit") from e
        overrides[parse_tuple_label(label)] = limit
    return overrides


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PENT63_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Execution
    threads: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        description="Worker threads for sieves and coverage evaluation",
    )
    seed: int = Field(default=0, description="Seed for sampled end-to-end checks")
    output_format: OutputFormat = Field(default="text", description="Emitted data format")

    # Storage
    cache_dir: Path | None = Field(
        default=None, description="Directory for cached automorphism groups and good sets"
    )
    dataset_path: Path | None = Field(
        default=None, description="Alternate certificate dataset (defaults to the bundled one)"
    )

    # Representability
    table_cache_size: int = Field(
        default=2**20, description="Size of the cached (a1, a2) table used by point queries"
    )
    truant_search_limit: int = Field(
        default=1000, description="Search limit for truants of unary to ternary sums"
    )
    conjecture_limit: int = Field(
        default=10**7, description="Sweep limit for the open E-set of (1,2,4,5)"
    )

    # Scaled isometry search
    isometry_node_budget: int = Field(
        default=2_000_000, description="Candidate columns allowed per scaled isometry search"
    )

    # Genus
    complete_genus: bool = Field(
        default=True, description="Close genera not marked complete under p-neighbours"
    )
    genus_neighbour_primes: int = Field(
        default=2, ge=1, description="Odd primes prime to det(L) used for neighbour steps"
    )

    # Certificates
    refine_depth: int = Field(
        default=10, description="How often an undecided residue class may be split"
    )

    # Comma/semicolon separated overrides, e.g. "1,1,2,5=1000;1,2,4,7=5000"
    limit_overrides: str = Field(default="", description="Lowered sieve limits per tuple")

    @property
    def limit_override_map(self) -> dict[tuple[int, ...], int]:
        """Parse limit overrides from the semicolon-separated string."""
        if not self.limit_overrides:
            return {}
        return parse_limit_overrides(self.limit_overrides)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


class RunConfig(BaseModel):
    """Per-invocation configuration assembled by the command line."""

    threads: int = Field(default=1, ge=1)
    cache_dir: Path | None = None
    dataset_path: Path | None = None
    limit_overrides: dict[tuple[int, ...], int] = Field(default_factory=dict)
    output_format: OutputFormat = "text"
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("limit_overrides")
    @classmethod
    def validate_overrides(cls, v: dict[tuple[int, ...], int]) -> dict[tuple[int, ...], int]:
        for coeffs, limit in v.items():
            if limit < 1:
                raise ValueError(f"override for {coeffs} must be positive, got {limit}")
        return v

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "RunConfig":
        """Build a run configuration from settings, letting explicit values win."""
        values = {
            "threads": settings.threads,
            "cache_dir": settings.cache_dir,
            "dataset_path": settings.dataset_path,
            "limit_overrides": settings.limit_override_map,
            "output_format": settings.output_format,
            "seed": settings.seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def effective_limit(self, coeffs: tuple[int, ...], certified: int) -> tuple[int, bool]:
        """Return ``(limit, scaled)`` for a tuple whose certified limit is ``certified``."""
        override = self.limit_overrides.get(tuple(coeffs))
        if override is None:
            return certified, False
        if override >= certified:
            raise ConfigurationError(
                f"Override {override} for {coeffs} does not lower the certified limit {certified}"
            )
        return override, True

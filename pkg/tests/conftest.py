"""Shared fixtures."""

import os

import pytest

from pent63.config import get_settings
from pent63.genusdata import Dataset, load_dataset
from pent63.models import ZLattice


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are re-read per test; PENT63_ variables from the shell are ignored."""
    for key in list(os.environ):
        if key.startswith("PENT63_"):
            monkeypatch.delenv(key)
    monkeypatch.setenv("PENT63_THREADS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def dataset() -> Dataset:
    return load_dataset()


@pytest.fixture
def l1223_lattice() -> ZLattice:
    return ZLattice.diagonal(1, 2, 2, 3)


@pytest.fixture
def k1125_member() -> ZLattice:
    return ZLattice.from_rows([[1, 0, 0, 0], [0, 2, 1, 1], [0, 1, 2, 0], [0, 1, 0, 4]])

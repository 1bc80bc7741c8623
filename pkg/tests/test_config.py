import pytest
from pydantic import ValidationError

from pent63.config import (
    RunConfig,
    Settings,
    get_settings,
    parse_limit_overrides,
    parse_tuple_label,
)
from pent63.errors import ConfigurationError


@pytest.mark.parametrize(
    "label,expected",
    [("1,2,4,5", (1, 2, 4, 5)), ("(1,2,4,5)", (1, 2, 4, 5)), (" 1, 1 ,3 ", (1, 1, 3)), ("7", (7,))],
)
def test_parse_tuple_label(label, expected):
    assert parse_tuple_label(label) == expected


@pytest.mark.parametrize("label", ["", "()", "1,x,3"])
def test_parse_tuple_label_rejects(label):
    with pytest.raises(ConfigurationError):
        parse_tuple_label(label)


def test_parse_limit_overrides():
    assert parse_limit_overrides("1,1,2,5=1000;1,2,4,7=5000;") == {
        (1, 1, 2, 5): 1000,
        (1, 2, 4, 7): 5000,
    }
    assert parse_limit_overrides("") == {}


@pytest.mark.parametrize("spec", ["1,1,2,5", "1,1,2,5=ten"])
def test_parse_limit_overrides_rejects(spec):
    with pytest.raises(ConfigurationError):
        parse_limit_overrides(spec)


class TestSettings:
    def test_environment(self, monkeypatch):
        monkeypatch.setenv("PENT63_REFINE_DEPTH", "3")
        monkeypatch.setenv("PENT63_LIMIT_OVERRIDES", "1,1,1,1=200")
        get_settings.cache_clear()
        settings = get_settings()
        assert settings.refine_depth == 3
        assert settings.threads == 1
        assert settings.limit_override_map == {(1, 1, 1, 1): 200}

    def test_defaults(self):
        settings = Settings(_env_file=None)
        assert settings.truant_search_limit == 1000
        assert settings.conjecture_limit == 10**7
        assert settings.limit_override_map == {}
        assert settings.complete_genus
        assert settings.genus_neighbour_primes == 2
        assert settings.isometry_node_budget > 0

    def test_genus_completion_can_be_disabled(self, monkeypatch):
        monkeypatch.setenv("PENT63_COMPLETE_GENUS", "false")
        monkeypatch.setenv("PENT63_GENUS_NEIGHBOUR_PRIMES", "1")
        settings = Settings(_env_file=None)
        assert not settings.complete_genus
        assert settings.genus_neighbour_primes == 1

    def test_at_least_one_neighbour_prime(self, monkeypatch):
        monkeypatch.setenv("PENT63_GENUS_NEIGHBOUR_PRIMES", "0")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)

    def test_bad_output_format(self, monkeypatch):
        monkeypatch.setenv("PENT63_OUTPUT_FORMAT", "xml")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)


class TestRunConfig:
    def test_explicit_values_win(self):
        settings = Settings(_env_file=None, seed=5, output_format="csv")
        config = RunConfig.from_settings(settings, threads=3, seed=None)
        assert config.threads == 3
        assert config.seed == 5
        assert config.output_format == "csv"

    def test_effective_limit(self):
        config = RunConfig(limit_overrides={(1, 1, 1, 1): 200})
        assert config.effective_limit((1, 1, 1, 1), 711) == (200, True)
        assert config.effective_limit((1, 1, 1, 4), 5453) == (5453, False)

    def test_override_must_lower_the_limit(self):
        config = RunConfig(limit_overrides={(1, 1, 1, 1): 1000})
        with pytest.raises(ConfigurationError):
            config.effective_limit((1, 1, 1, 1), 711)

    def test_override_must_be_positive(self):
        with pytest.raises(ValidationError):
            RunConfig(limit_overrides={(1, 1, 1, 1): 0})

import pytest

from pent63.cache import DiskCache, cache_key


def test_disabled_cache_is_a_no_op():
    cache = DiskCache(None)
    assert not cache.enabled
    cache.put("goodsets", {"s": 2}, [1, 2])
    assert cache.get("goodsets", {"s": 2}) is None
    assert cache.get_bytes("tables", "x") is None


def test_json_entries(tmp_path):
    cache = DiskCache(tmp_path)
    assert cache.get("goodsets", {"s": 2}) is None
    cache.put("goodsets", {"s": 2}, {"pairs": [[0, 1]]})
    assert cache.get("goodsets", {"s": 2}) == {"pairs": [[0, 1]]}


def test_byte_entries(tmp_path):
    cache = DiskCache(tmp_path)
    cache.put_bytes("tables", ["(1,1,1,1)", 711], b"\x01\x02")
    assert cache.get_bytes("tables", ["(1,1,1,1)", 711]) == b"\x01\x02"
    assert not list((tmp_path / "tables").glob(".tmp-*"))


def test_unknown_namespace(tmp_path):
    with pytest.raises(ValueError):
        DiskCache(tmp_path).get("lattices", 1)


def test_corrupt_entry_is_ignored(tmp_path):
    cache = DiskCache(tmp_path)
    cache.put("automorphisms", "L", [1])
    (path,) = (tmp_path / "automorphisms").iterdir()
    path.write_text("{", encoding="utf-8")
    assert cache.get("automorphisms", "L") is None


def test_key_ignores_dict_order():
    assert cache_key({"a": 1, "b": [2, 3]}) == cache_key({"b": [2, 3], "a": 1})
    assert cache_key({"a": 1}) != cache_key({"a": 2})

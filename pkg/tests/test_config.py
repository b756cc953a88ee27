"""Key-value config parsing."""

import pytest

from towerlab.config import format_kv, parse_kv_file, parse_kv_text


def test_basic_parse():
    text = "a = 1\n# comment\n\nb.2 = two words  # trailing\n"
    assert parse_kv_text(text) == {"a": "1", "b.2": "two words"}


def test_parse_errors_carry_location():
    with pytest.raises(ValueError, match="cfg:2"):
        parse_kv_text("a = 1\nnonsense\n", source="cfg")
    with pytest.raises(ValueError, match="empty key or value"):
        parse_kv_text("a =\n")
    with pytest.raises(ValueError, match="duplicate"):
        parse_kv_text("a = 1\na = 2\n")


def test_value_may_contain_equals():
    assert parse_kv_text("expr = x = y\n") == {"expr": "x = y"}


def test_format_roundtrip():
    items = {"b": 2, "a": "one", "M.1": 4}
    text = format_kv(items)
    assert text == "M.1 = 4\na = one\nb = 2\n"
    assert parse_kv_text(text) == {k: str(v) for k, v in items.items()}


def test_parse_file(tmp_path):
    p = tmp_path / "x.cfg"
    p.write_text("k = v\n")
    assert parse_kv_file(p) == {"k": "v"}

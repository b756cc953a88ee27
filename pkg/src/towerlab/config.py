"""Plain-text key-value configuration files.

One ``key = value`` pair per line, ``#`` starts a comment, blank lines are
ignored.  Keys are dotted words (``M.1``, ``dbar.blocks``).  The same format
is used for stage schedules and for experiment configs.  Environment
variables are never consulted.
"""

from __future__ import annotations

__all__ = ["parse_kv_text", "parse_kv_file", "format_kv"]


def parse_kv_text(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse key-value text into an ordered dict of raw string values."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ValueError(f"{source}:{lineno}: empty key or value in {raw!r}")
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_kv_file(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), source=str(path))


def format_kv(items: dict[str, object]) -> str:
    """Render a dict back to canonical key-value text (sorted keys)."""
    return "".join(f"{k} = {items[k]}\n" for k in sorted(items))

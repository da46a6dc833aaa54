from __future__ import annotations

import difflib
import random

import pytest

from xlr.corpus import ChangeRecord


def make_record(
    i: int,
    label: int = 0,
    language: str = "cpp",
    origin: str = "real",
    split: str | None = None,
    source_id: str | None = None,
    old_code: str = "int x;\n",
    diff: str = "",
) -> ChangeRecord:
    if origin == "synthetic" and source_id is None:
        source_id = f"src{i:03d}"
    return ChangeRecord(
        id=f"r{i:03d}",
        language=language,
        old_code=old_code,
        diff=diff,
        label=label,
        origin=origin,
        source_id=source_id,
        split=split,
    )


_LINE_POOL = (
    "alpha", "beta = 1;", "gamma()", "delta {", "}", "while (x < 3) {",
    "return x;", "int y = 0;", "", "  indent", "foo(bar, baz)",
)


def random_text(rng: random.Random, max_lines: int = 12) -> str:
    n = rng.randrange(0, max_lines + 1)
    lines = [rng.choice(_LINE_POOL) for _ in range(n)]
    return "\n".join(lines) + ("\n" if lines else "")


def mutate_text(rng: random.Random, text: str, max_edits: int = 4) -> str:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for _ in range(rng.randrange(1, max_edits + 1)):
        op = rng.choice(("insert", "delete", "replace"))
        if op == "insert" or not lines:
            lines.insert(rng.randrange(len(lines) + 1), rng.choice(_LINE_POOL))
        elif op == "delete":
            del lines[rng.randrange(len(lines))]
        else:
            lines[rng.randrange(len(lines))] = rng.choice(_LINE_POOL)
    return "\n".join(lines) + ("\n" if lines else "")


def _content_lines(text: str) -> list[str]:
    if not text:
        return []
    parts = text.split("\n")
    if parts[-1] == "":
        parts.pop()
    return parts


def difflib_unified(old: str, new: str, context: int = 3) -> str:
    """Independent diff text oracle built on difflib (newline-terminated inputs)."""
    lines = list(difflib.unified_diff(_content_lines(old), _content_lines(new),
                                      fromfile="a", tofile="b", lineterm="",
                                      n=context))
    return "\n".join(lines) + ("\n" if lines else "")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)

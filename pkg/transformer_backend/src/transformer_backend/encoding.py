"""Record serialization and tokenization for the encoder.

A record becomes: before-code, a separator line "====", then the diff text.
When a window is imposed, the diff side is kept preferentially (the change
carries the label signal) and the before-code is cut first; the diff's first
line survives any truncation the window allows.
"""

from __future__ import annotations

import re

SEPARATOR = "====\n"

PAD_ID = 0
CLS_ID = 1
SEP_ID = 2
RESERVED = 3

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def encode_record(record: dict, window: int | None = None) -> str:
    """Deterministic model input text for one change record (dict form)."""
    old = record.get("old_code") or ""
    diff = record.get("diff") or ""
    if old and not old.endswith("\n"):
        old += "\n"
    text = old + SEPARATOR + diff
    if window is None or len(text) <= window:
        return text
    budget = window - len(SEPARATOR)
    if budget <= 0:
        return text[-window:] if window > 0 else ""
    if len(diff) <= budget:
        old_part = old[: budget - len(diff)]
        return old_part + SEPARATOR + diff
    first_line_end = diff.find("\n")
    first_line = diff if first_line_end < 0 else diff[: first_line_end + 1]
    kept = diff[:budget]
    if len(first_line) > len(kept):
        kept = first_line[:budget]
    return SEPARATOR + kept


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def token_ids(tokens: list[str], vocab_size: int) -> list[int]:
    space = vocab_size - RESERVED
    return [RESERVED + _fnv1a64(t.encode("utf-8")) % space for t in tokens]


def build_input_ids(record: dict, max_len: int, vocab_size: int) -> list[int]:
    """[CLS] + before-code head + [SEP] + diff head, diff kept preferentially."""
    old = record.get("old_code") or ""
    diff = record.get("diff") or ""
    old_ids = token_ids(tokenize(old), vocab_size)
    diff_ids = token_ids(tokenize(diff), vocab_size)
    budget = max_len - 2  # CLS and SEP
    diff_kept = diff_ids[:budget]
    old_kept = old_ids[: budget - len(diff_kept)]
    return [CLS_ID] + old_kept + [SEP_ID] + diff_kept

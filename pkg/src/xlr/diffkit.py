"""Unified diff parsing, application, and rendering.

Diffs are line based. A hunk line is (kind, text, no_newline) where kind is
one of "context", "add", "remove"; no_newline marks the
"\\ No newline at end of file" condition for that line. Text never includes
the line terminator. Only LF line endings are understood.

Hunk headers follow "@@ -a,b +c,d @@" with b or d defaulting to 1 when
omitted. A zero old length means the hunk inserts after old line a (a=0
inserts at the top of the file), which matches what patch tools emit.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, replace

from .errors import XlrError

CONTEXT = "context"
ADD = "add"
REMOVE = "remove"

NO_NEWLINE_MARKER = "\\ No newline at end of file"

_KIND_BY_PREFIX = {" ": CONTEXT, "+": ADD, "-": REMOVE}
_PREFIX_BY_KIND = {CONTEXT: " ", ADD: "+", REMOVE: "-"}

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


class DiffParseError(XlrError):
    pass


class DiffApplyError(XlrError):
    pass


class DiffInvariantError(XlrError):
    pass


@dataclass(frozen=True)
class Line:
    kind: str
    text: str
    no_newline: bool = False


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[Line, ...]


@dataclass(frozen=True)
class Diff:
    hunks: tuple[Hunk, ...] = ()


def _check_invariants(diff: Diff) -> None:
    prev_end = None
    prev_start = None
    for k, hunk in enumerate(diff.hunks):
        n_context = sum(1 for ln in hunk.lines if ln.kind == CONTEXT)
        n_add = sum(1 for ln in hunk.lines if ln.kind == ADD)
        n_remove = sum(1 for ln in hunk.lines if ln.kind == REMOVE)
        if n_context + n_remove != hunk.old_len:
            raise DiffInvariantError(
                f"hunk {k + 1}: old_len {hunk.old_len} but {n_context + n_remove} old-side lines"
            )
        if n_context + n_add != hunk.new_len:
            raise DiffInvariantError(
                f"hunk {k + 1}: new_len {hunk.new_len} but {n_context + n_add} new-side lines"
            )
        if prev_end is not None and hunk.old_start < prev_end:
            raise DiffInvariantError(
                f"hunk {k + 1} starting at old line {hunk.old_start} overlaps hunk "
                f"{k} starting at old line {prev_start}"
            )
        prev_start = hunk.old_start
        # A zero-length hunk still claims its insertion point, so the next
        # hunk must begin strictly after it.
        prev_end = hunk.old_start + max(hunk.old_len, 1)


def parse_unified_diff(text: str) -> Diff:
    """Parse unified diff text into a Diff.

    ---/+++ header lines are optional and ignored; hunk header trailing
    section text (after the closing @@) is ignored. Raises DiffParseError on
    malformed headers, body lines, count mismatches, or overlapping hunks.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    hunks: list[Hunk] = []
    i = 0
    n = len(lines)
    while i < n:
        raw = lines[i]
        if raw.startswith("--- ") or raw.startswith("+++ ") or raw in ("---", "+++"):
            i += 1
            continue
        m = _HUNK_RE.match(raw)
        if m is None:
            raise DiffParseError(f"line {i + 1}: expected hunk header, got {raw!r}")
        header_line = i + 1
        old_start = int(m.group(1))
        old_len = int(m.group(2)) if m.group(2) is not None else 1
        new_start = int(m.group(3))
        new_len = int(m.group(4)) if m.group(4) is not None else 1
        i += 1
        body: list[Line] = []
        old_rem = old_len
        new_rem = new_len
        while old_rem > 0 or new_rem > 0:
            if i >= n:
                raise DiffParseError(
                    f"hunk at line {header_line}: ran out of input with "
                    f"{old_rem} old-side and {new_rem} new-side lines unaccounted for"
                )
            raw = lines[i]
            i += 1
            if raw.startswith("\\"):
                if not body:
                    raise DiffParseError(f"line {i}: no-newline marker before any hunk line")
                body[-1] = replace(body[-1], no_newline=True)
                continue
            if raw == "":
                # Tolerate context lines whose leading space was stripped.
                kind, text_part = CONTEXT, ""
            else:
                kind = _KIND_BY_PREFIX.get(raw[0])
                if kind is None:
                    raise DiffParseError(f"line {i}: unexpected hunk body line {raw!r}")
                text_part = raw[1:]
            if kind in (CONTEXT, REMOVE):
                if old_rem == 0:
                    raise DiffParseError(
                        f"hunk at line {header_line}: more old-side lines than "
                        f"the header count {old_len}"
                    )
                old_rem -= 1
            if kind in (CONTEXT, ADD):
                if new_rem == 0:
                    raise DiffParseError(
                        f"hunk at line {header_line}: more new-side lines than "
                        f"the header count {new_len}"
                    )
                new_rem -= 1
            body.append(Line(kind, text_part))
        if i < n and lines[i].startswith("\\"):
            body[-1] = replace(body[-1], no_newline=True)
            i += 1
        hunks.append(Hunk(old_start, old_len, new_start, new_len, tuple(body)))
    diff = Diff(tuple(hunks))
    try:
        _check_invariants(diff)
    except DiffInvariantError as exc:
        raise DiffParseError(str(exc)) from None
    return diff


def render(diff: Diff) -> str:
    """Render the canonical text form; parse_unified_diff(render(d)) == d.

    Always writes explicit counts ("@@ -a,b +c,d @@") and no ---/+++ headers.
    """
    _check_invariants(diff)
    out: list[str] = []
    for hunk in diff.hunks:
        out.append(f"@@ -{hunk.old_start},{hunk.old_len} +{hunk.new_start},{hunk.new_len} @@\n")
        for ln in hunk.lines:
            out.append(_PREFIX_BY_KIND[ln.kind] + ln.text + "\n")
            if ln.no_newline:
                out.append(NO_NEWLINE_MARKER + "\n")
    return "".join(out)


def _split_source(text: str) -> tuple[list[str], list[bool]]:
    """Split source text into lines plus a has-trailing-newline flag per line."""
    if text == "":
        return [], []
    parts = text.split("\n")
    if parts[-1] == "":
        lines = parts[:-1]
        flags = [True] * len(lines)
    else:
        lines = parts
        flags = [True] * (len(lines) - 1) + [False]
    return lines, flags


def apply(old_code: str, diff: Diff) -> str:
    """Apply a parsed diff to its before-state and return the after-state.

    Context is matched exactly (no fuzz). Raises DiffApplyError naming the
    hunk and old line on mismatch or when a hunk range exceeds the input.
    """
    _check_invariants(diff)
    olds, olds_nl = _split_source(old_code)
    out: list[tuple[str, bool]] = []
    cursor = 0
    for k, hunk in enumerate(diff.hunks, start=1):
        pos = hunk.old_start - 1 if hunk.old_len > 0 else hunk.old_start
        if pos < cursor:
            raise DiffApplyError(f"hunk {k}: starts before the previous hunk ended")
        if pos + hunk.old_len > len(olds):
            raise DiffApplyError(
                f"hunk {k}: range {hunk.old_start},{hunk.old_len} exceeds input "
                f"of {len(olds)} lines"
            )
        out.extend((olds[j], olds_nl[j]) for j in range(cursor, pos))
        cursor = pos
        for ln in hunk.lines:
            if ln.kind in (CONTEXT, REMOVE):
                found = olds[cursor]
                if found != ln.text or olds_nl[cursor] == ln.no_newline:
                    raise DiffApplyError(
                        f"hunk {k}, old line {cursor + 1}: context mismatch: "
                        f"expected {ln.text!r}, found {found!r}"
                    )
                cursor += 1
            if ln.kind in (CONTEXT, ADD):
                out.append((ln.text, not ln.no_newline))
    out.extend((olds[j], olds_nl[j]) for j in range(cursor, len(olds)))
    for text, has_nl in out[:-1]:
        if not has_nl:
            raise DiffApplyError("no-newline line is not the last line of the result")
    return "".join(text + ("\n" if has_nl else "") for text, has_nl in out)


def changed_lines(diff: Diff) -> tuple[list[str], list[str]]:
    """Return (added, removed) line texts in diff order."""
    added = [ln.text for hunk in diff.hunks for ln in hunk.lines if ln.kind == ADD]
    removed = [ln.text for hunk in diff.hunks for ln in hunk.lines if ln.kind == REMOVE]
    return added, removed


def invert(diff: Diff) -> Diff:
    """Swap the roles of old and new so applying the result undoes the diff."""
    hunks = []
    for hunk in diff.hunks:
        swapped = {ADD: REMOVE, REMOVE: ADD, CONTEXT: CONTEXT}
        lines = tuple(Line(swapped[ln.kind], ln.text, ln.no_newline) for ln in hunk.lines)
        hunks.append(Hunk(hunk.new_start, hunk.new_len, hunk.old_start, hunk.old_len, lines))
    return Diff(tuple(hunks))


def diff_texts(old: str, new: str) -> Diff:
    """Compute a zero-context Diff turning old into new (difflib under the hood)."""
    a, a_nl = _split_source(old)
    b, b_nl = _split_source(new)
    # Compare lines with newline-ness attached so a final line gaining or
    # losing its terminator shows up as a change.
    a_keyed = [(t, nl) for t, nl in zip(a, a_nl)]
    b_keyed = [(t, nl) for t, nl in zip(b, b_nl)]
    matcher = difflib.SequenceMatcher(a=a_keyed, b=b_keyed, autojunk=False)
    hunks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        lines = []
        for j in range(i1, i2):
            lines.append(Line(REMOVE, a[j], not a_nl[j]))
        for j in range(j1, j2):
            lines.append(Line(ADD, b[j], not b_nl[j]))
        old_len = i2 - i1
        new_len = j2 - j1
        old_start = i1 + 1 if old_len > 0 else i1
        new_start = j1 + 1 if new_len > 0 else j1
        hunks.append(Hunk(old_start, old_len, new_start, new_len, tuple(lines)))
    return Diff(tuple(hunks))

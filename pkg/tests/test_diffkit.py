import random

import pytest

from xlr import diffkit
from xlr.diffkit import (
    ADD,
    CONTEXT,
    REMOVE,
    Diff,
    DiffApplyError,
    DiffInvariantError,
    DiffParseError,
    Hunk,
    Line,
)

from conftest import difflib_unified, mutate_text, random_text

FOO_BAR = "@@ -1,1 +1,1 @@\n-foo\n+bar\n"


def test_parse_empty_string():
    assert diffkit.parse_unified_diff("") == Diff(())


def test_parse_single_hunk():
    d = diffkit.parse_unified_diff(FOO_BAR)
    assert len(d.hunks) == 1
    hunk = d.hunks[0]
    assert (hunk.old_start, hunk.old_len, hunk.new_start, hunk.new_len) == (1, 1, 1, 1)
    assert hunk.lines == (Line(REMOVE, "foo"), Line(ADD, "bar"))


def test_parse_ignores_file_headers():
    text = "--- a/x.c\n+++ b/x.c\n" + FOO_BAR
    assert diffkit.parse_unified_diff(text) == diffkit.parse_unified_diff(FOO_BAR)


def test_parse_omitted_counts_default_to_one():
    d = diffkit.parse_unified_diff("@@ -2 +2 @@\n-foo\n+bar\n")
    assert d.hunks[0].old_len == 1
    assert d.hunks[0].new_len == 1


def test_parse_count_mismatch():
    with pytest.raises(DiffParseError, match="old-side"):
        diffkit.parse_unified_diff("@@ -1,2 +1,1 @@\n-foo\n")


def test_parse_malformed_header_reports_line():
    with pytest.raises(DiffParseError, match="line 1"):
        diffkit.parse_unified_diff("@@ bogus @@\n")


def test_parse_overlapping_hunks_rejected():
    text = "@@ -1,3 +1,3 @@\n x\n y\n z\n@@ -2,1 +2,1 @@\n-y\n+Y\n"
    with pytest.raises(DiffParseError, match="overlap"):
        diffkit.parse_unified_diff(text)


def test_apply_empty_diff_is_identity():
    for text in ("", "a\n", "a\nb\nc\n", "no trailing newline"):
        assert diffkit.apply(text, Diff(())) == text


def test_apply_single_line_replacement():
    d = diffkit.parse_unified_diff("@@ -2,1 +2,1 @@\n-b\n+B\n")
    assert diffkit.apply("a\nb\nc\n", d) == "a\nB\nc\n"


def test_apply_context_mismatch_names_hunk_and_line():
    d = diffkit.parse_unified_diff("@@ -1,1 +1,1 @@\n-z\n+y\n")
    with pytest.raises(DiffApplyError, match="hunk 1, old line 1"):
        diffkit.apply("a\n", d)


def test_apply_range_beyond_input():
    d = diffkit.parse_unified_diff("@@ -5,1 +5,1 @@\n-x\n+y\n")
    with pytest.raises(DiffApplyError, match="exceeds"):
        diffkit.apply("a\n", d)


def test_apply_insertion_hunks():
    top = diffkit.parse_unified_diff("@@ -0,0 +1,1 @@\n+first\n")
    assert diffkit.apply("a\nb\n", top) == "first\na\nb\n"
    after = diffkit.parse_unified_diff("@@ -1,0 +2,1 @@\n+mid\n")
    assert diffkit.apply("a\nb\n", after) == "a\nmid\nb\n"


def test_apply_insert_into_empty_file():
    d = diffkit.parse_unified_diff("@@ -0,0 +1,2 @@\n+a\n+b\n")
    assert diffkit.apply("", d) == "a\nb\n"


def test_apply_multi_hunk_by_hand():
    old = "one\ntwo\nthree\nfour\nfive\nsix\n"
    text = (
        "@@ -1,1 +1,1 @@\n-one\n+ONE\n"
        "@@ -3,2 +3,1 @@\n-three\n-four\n+THREE-FOUR\n"
        "@@ -6,1 +5,1 @@\n-wrong\n+SIX\n"  # deliberately wrong context
    )
    with pytest.raises(DiffApplyError, match="hunk 3"):
        diffkit.apply(old, diffkit.parse_unified_diff(text))
    good = (
        "@@ -1,1 +1,1 @@\n-one\n+ONE\n"
        "@@ -3,2 +3,1 @@\n-three\n-four\n+THREE-FOUR\n"
        "@@ -6,1 +5,1 @@\n-six\n+SIX\n"
    )
    d = diffkit.parse_unified_diff(good)
    assert diffkit.apply(old, d) == "ONE\ntwo\nTHREE-FOUR\nfive\nSIX\n"


def test_render_empty():
    assert diffkit.render(Diff(())) == ""


def test_render_canonical_form():
    d = diffkit.parse_unified_diff(FOO_BAR)
    assert diffkit.render(d) == FOO_BAR


def test_render_rejects_invariant_violations():
    bad = Diff((Hunk(1, 2, 1, 1, (Line(REMOVE, "foo"),)),))
    with pytest.raises(DiffInvariantError):
        diffkit.render(bad)


def test_render_makes_counts_explicit():
    d = diffkit.parse_unified_diff("@@ -2 +2 @@\n-foo\n+bar\n")
    assert diffkit.render(d) == "@@ -2,1 +2,1 @@\n-foo\n+bar\n"


def test_changed_lines():
    assert diffkit.changed_lines(Diff(())) == ([], [])
    d = diffkit.parse_unified_diff(FOO_BAR)
    assert diffkit.changed_lines(d) == (["bar"], ["foo"])
    ctx = diffkit.parse_unified_diff("@@ -1,2 +1,2 @@\n a\n b\n")
    assert diffkit.changed_lines(ctx) == ([], [])


def test_no_newline_marker_round_trip():
    text = "@@ -1,1 +1,1 @@\n-foo\n+bar\n\\ No newline at end of file\n"
    d = diffkit.parse_unified_diff(text)
    assert d.hunks[0].lines[1] == Line(ADD, "bar", no_newline=True)
    assert diffkit.render(d) == text


def test_no_newline_apply_removes_final_terminator():
    d = diffkit.parse_unified_diff(
        "@@ -1,1 +1,1 @@\n-foo\n+bar\n\\ No newline at end of file\n"
    )
    assert diffkit.apply("foo\n", d) == "bar"


def test_no_newline_apply_adds_final_terminator():
    d = diffkit.parse_unified_diff(
        "@@ -1,1 +1,1 @@\n-foo\n\\ No newline at end of file\n+bar\n"
    )
    assert diffkit.apply("foo", d) == "bar\n"


def test_no_newline_context_must_match():
    d = diffkit.parse_unified_diff(
        "@@ -1,1 +1,1 @@\n-foo\n\\ No newline at end of file\n+bar\n"
    )
    with pytest.raises(DiffApplyError, match="mismatch"):
        diffkit.apply("foo\n", d)  # old actually ends with a newline


def test_diff_texts_handles_missing_final_newline():
    rng = random.Random(7)
    for _ in range(200):
        old = random_text(rng)
        new = mutate_text(rng, old)
        if rng.random() < 0.3 and old.endswith("\n"):
            old = old[:-1]
        if rng.random() < 0.3 and new.endswith("\n"):
            new = new[:-1]
        d = diffkit.diff_texts(old, new)
        assert diffkit.apply(old, d) == new


def test_round_trip_on_500_generated_diffs():
    rng = random.Random(42)
    checked = 0
    while checked < 500:
        old = random_text(rng)
        new = mutate_text(rng, old)
        text = difflib_unified(old, new, context=rng.choice((0, 1, 3)))
        d = diffkit.parse_unified_diff(text)
        assert diffkit.parse_unified_diff(diffkit.render(d)) == d
        assert diffkit.apply(old, d) == new
        assert diffkit.apply(new, diffkit.invert(d)) == old
        checked += 1


def test_hunk_arithmetic_matches_headers():
    rng = random.Random(99)
    for _ in range(100):
        old = random_text(rng)
        new = mutate_text(rng, old)
        d = diffkit.parse_unified_diff(difflib_unified(old, new))
        for hunk in d.hunks:
            n_ctx = sum(1 for ln in hunk.lines if ln.kind == CONTEXT)
            n_add = sum(1 for ln in hunk.lines if ln.kind == ADD)
            n_rem = sum(1 for ln in hunk.lines if ln.kind == REMOVE)
            assert n_ctx + n_rem == hunk.old_len
            assert n_ctx + n_add == hunk.new_len

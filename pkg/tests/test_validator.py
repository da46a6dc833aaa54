import json
import random

import pytest

from xlr import diffkit, validator
from xlr.validator import (
    COMMENT,
    IDENTIFIER,
    NUMBER,
    PUNCT,
    LexError,
    Ruleset,
    Token,
    check_balance,
    filter_corpus,
    lex,
    validate_record,
)

from conftest import make_record


def synthetic(new_line: str, old_code: str = "int f() {\n    return 0;\n}\n", i: int = 0):
    """Synthetic record whose diff adds one line at the top of the body."""
    diff = f"@@ -1,0 +2,1 @@\n+{new_line}\n"
    return make_record(i, origin="synthetic", old_code=old_code, diff=diff)


class TestLex:
    def test_empty(self):
        assert lex("") == []

    def test_statement_with_comment(self):
        kinds = [(t.kind, t.text) for t in lex("int x = 42; // done")]
        assert kinds == [
            (IDENTIFIER, "int"), (IDENTIFIER, "x"), (PUNCT, "="),
            (NUMBER, "42"), (PUNCT, ";"), (COMMENT, "// done"),
        ]

    def test_unterminated_string(self):
        with pytest.raises(LexError) as err:
            lex('"abc')
        assert err.value.rule == "unterminated_literal"
        assert err.value.line == 1

    def test_string_may_not_span_lines(self):
        with pytest.raises(LexError) as err:
            lex('int x;\n"abc\ndef"')
        assert err.value.line == 2

    def test_unterminated_block_comment(self):
        with pytest.raises(LexError) as err:
            lex("int x;\n/* started")
        assert err.value.rule == "unterminated_comment"
        assert err.value.line == 2

    def test_block_comment_spans_lines(self):
        tokens = lex("/* a\n b */ int")
        assert tokens[0].kind == COMMENT
        assert tokens[1] == Token(IDENTIFIER, "int", 2, tokens[1].start)

    def test_escapes_inside_literals(self):
        tokens = lex(r'"a\"b" + ' + r"'\''")
        assert [t.kind for t in tokens] == ["string_lit", PUNCT, "char_lit"]

    def test_preprocessor_line(self):
        tokens = lex('#include <vector>\nint x;')
        assert tokens[0].kind == "preprocessor"
        assert tokens[0].text == "#include <vector>"
        assert tokens[1].text == "int"

    def test_hash_mid_line_is_punct(self):
        tokens = lex("a # b")
        assert [t.kind for t in tokens] == [IDENTIFIER, PUNCT, IDENTIFIER]

    def test_line_numbers(self):
        tokens = lex("a\nb\n\nc")
        assert [(t.text, t.line) for t in tokens] == [("a", 1), ("b", 2), ("c", 4)]

    def reconstruct(self, code):
        tokens = lex(code)
        cursor = 0
        rebuilt = []
        for tok in tokens:
            gap = code[cursor:tok.start]
            assert gap.strip() == "", f"non-whitespace gap {gap!r}"
            assert code[tok.start:tok.start + len(tok.text)] == tok.text
            rebuilt.append(gap)
            rebuilt.append(tok.text)
            cursor = tok.start + len(tok.text)
        tail = code[cursor:]
        assert tail.strip() == ""
        rebuilt.append(tail)
        return "".join(rebuilt)

    def test_reconstruction_from_tokens_and_gaps(self):
        code = 'int f(int n) { /* body\n*/ return "s;{" + n; } // tail\n#define X 1\n'
        assert self.reconstruct(code) == code

    def test_reconstruction_across_fixture_corpus(self):
        from xlr import diffkit, fixtures

        for record in fixtures.planted_corpus(20, 20, seed=77).records:
            assert self.reconstruct(record.old_code) == record.old_code
            new_code = diffkit.apply(record.old_code,
                                     diffkit.parse_unified_diff(record.diff))
            assert self.reconstruct(new_code) == new_code


class TestBalance:
    def check(self, code):
        return check_balance(lex(code))

    def test_balanced(self):
        assert self.check("int f(){return 0;}") == []

    def test_missing_closer(self):
        violations = self.check("int f(){")
        assert violations[0].rule == "unbalanced"
        assert "}" in violations[0].detail

    def test_wrong_closer(self):
        violations = self.check("f(]")
        assert violations[0].rule == "unbalanced"

    def test_stray_closer(self):
        violations = self.check("f)")
        assert violations[0].rule == "unbalanced"

    def test_delimiters_in_literals_do_not_count(self):
        assert self.check("char c = '{';") == []
        assert self.check('s = "(((";') == []
        assert self.check("// spare ( [\nint x;") == []
        assert self.check("/* } */ int f() { return 0; }") == []

    def test_angle_brackets_not_checked(self):
        assert self.check("std::vector<int> v; bool b = a < b;") == []

    def test_literal_shielding_property(self):
        rng = random.Random(11)
        delimiters = "(){}[]"
        for _ in range(100):
            inner = "".join(rng.choice(delimiters) for _ in range(rng.randrange(1, 6)))
            style = rng.choice(("str", "char", "line", "block"))
            if style == "str":
                code = f'const char* s = "{inner}"; int f() {{ return 0; }}'
            elif style == "char":
                code = f"char c = '{inner}'; int f() {{ return 0; }}"
            elif style == "line":
                code = f"// {inner}\nint f() {{ return 0; }}"
            else:
                code = f"/* {inner} */ int f() {{ return 0; }}"
            assert self.check(code) == [], code

    def test_single_deletion_always_detected(self):
        code = "int f(int a[3]) { if (g(a[0])) { return (a[1] + a[2]); } return 0; }"
        assert self.check(code) == []
        for i, ch in enumerate(code):
            if ch in "(){}[]":
                mutated = code[:i] + code[i + 1:]
                assert self.check(mutated) != [], f"deletion at {i} missed"


class TestValidateRecord:
    def test_happy_path(self):
        record = synthetic("    int y = 1;")
        verdict = validate_record(record, Ruleset(denylist=()))
        assert verdict.valid
        assert verdict.violations == ()

    def test_requires_synthetic_origin(self):
        with pytest.raises(ValueError, match="synthetic"):
            validate_record(make_record(0, origin="real"))

    def test_missing_brace_is_unbalanced(self):
        # the diff drops the closing brace from the post-change code
        record = make_record(
            1, origin="synthetic", old_code="int f() {\n    return 0;\n}\n",
            diff="@@ -3,1 +3,1 @@\n-}\n+\n",
        )
        verdict = validate_record(record)
        assert not verdict.valid
        assert verdict.violations[0].rule == "unbalanced"

    def test_leakage_detected_with_default_denylist(self):
        record = synthetic('    System.out.println("x");')
        verdict = validate_record(record)
        assert not verdict.valid
        assert {v.rule for v in verdict.violations} == {"leakage"}

    def test_diff_apply_failure_rule(self):
        record = make_record(
        2, origin="synthetic", old_code="int x;\n",
        diff="@@ -1,1 +1,1 @@\n-not there\n+int y;\n",
        )
        verdict = validate_record(record)
        assert not verdict.valid
        assert verdict.violations[0].rule == "diff_apply"

    def test_empty_after_comment_stripping(self):
        record = make_record(
            3, origin="synthetic", old_code="// just a comment\n", diff="",
        )
        verdict = validate_record(record)
        assert not verdict.valid
        assert {v.rule for v in verdict.violations} == {"empty"}

    def test_unterminated_literal_in_old_code(self):
        record = make_record(
            4, origin="synthetic", old_code='const char* s = "broken;\n', diff="",
        )
        verdict = validate_record(record)
        assert not verdict.valid
        assert "unterminated_literal" in {v.rule for v in verdict.violations}


class TestFilterCorpus:
    def make_batch(self):
        good = [synthetic("    int y = 1;", i=i) for i in range(4)]
        bad = make_record(
            9, origin="synthetic", old_code="int f() {\n    return 0;\n}\n",
            diff="@@ -3,1 +3,1 @@\n-}\n+\n",
        )
        return good[:2] + [bad] + good[2:]

    def test_partition_counts_and_order(self):
        batch = self.make_batch()
        kept, rejected = filter_corpus(batch, Ruleset(denylist=()))
        assert len(kept) == 4
        assert len(rejected) == 1
        assert rejected[0][0].id == "r009"
        assert rejected[0][1].violations[0].rule == "unbalanced"
        assert [r.id for r in kept] + [r.id for r, _ in rejected] != []
        # exact partition, order preserved within each side
        assert [r.id for r in kept] == [r.id for r in batch if r.id != "r009"]

    def test_empty_input(self):
        assert filter_corpus([], Ruleset()) == ([], [])

    def test_all_valid_pass_through(self):
        batch = [synthetic("    int y = 1;", i=i) for i in range(5)]
        kept, rejected = filter_corpus(batch, Ruleset(denylist=()))
        assert len(kept) == 5 and rejected == []

    def test_rejection_report_format(self, tmp_path):
        _, rejected = filter_corpus(self.make_batch(), Ruleset(denylist=()))
        path = tmp_path / "rejected.jsonl"
        assert validator.write_rejection_report(rejected, path) == 1
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1
        obj = json.loads(lines[0])
        assert set(obj) == {"id", "rule", "line", "detail"}
        assert obj["id"] == "r009"
        assert obj["rule"] == "unbalanced"


def test_verdict_valid_iff_no_violations():
    good = validate_record(synthetic("    int y = 1;"), Ruleset(denylist=()))
    assert good.valid == (len(good.violations) == 0)
    bad = validate_record(synthetic('    System.out.println("x");'))
    assert bad.valid == (len(bad.violations) == 0)

"""Lexical validation of generated target-language code.

"Static analysis" here means: the code tokenizes (terminated literals and
comments), (), {} and [] nest properly outside literals and comments, the
post-change code is non-empty once comments are stripped, and no denylisted
source-language fragment leaks through. Angle brackets are deliberately not
balance-checked (template syntax vs comparison is not decidable lexically).
Raw string literals and digraphs lex as ordinary tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import diffkit
from .corpus import ChangeRecord
from .errors import XlrError

IDENTIFIER = "identifier"
NUMBER = "number"
STRING_LIT = "string_lit"
CHAR_LIT = "char_lit"
PUNCT = "punct"
PREPROCESSOR = "preprocessor"
COMMENT = "comment"

RULES = ("unbalanced", "unterminated_literal", "unterminated_comment", "empty", "leakage", "diff_apply")

DEFAULT_DENYLIST = ("System.out", "@Override", "import java", "public static void main")

_ID_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_ID_CONT = _ID_START | set("0123456789")
_OPENERS = {"(": ")", "{": "}", "[": "]"}
_CLOSERS = {")": "(", "}": "{", "]": "["}


class LexError(XlrError):
    def __init__(self, rule: str, line: int, message: str):
        super().__init__(message)
        self.rule = rule
        self.line = line


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    start: int


@dataclass(frozen=True)
class Violation:
    rule: str
    line: int
    detail: str


@dataclass(frozen=True)
class Verdict:
    valid: bool
    violations: tuple[Violation, ...] = ()


@dataclass(frozen=True)
class Ruleset:
    denylist: tuple[str, ...] = DEFAULT_DENYLIST


def lex(code: str, family: str = "c-like") -> list[Token]:
    """Tokenize C-family source.

    Recognizes // and /* */ comments, "..." and '...' literals with backslash
    escapes, whole lines starting with # as preprocessor tokens, identifiers,
    numbers, and single-character punctuation. Whitespace is skipped but the
    surviving tokens carry offsets, so tokens plus the gaps reconstruct the
    input exactly.
    """
    if family != "c-like":
        raise ValueError(f"unsupported lexer family {family!r}")
    tokens: list[Token] = []
    i = 0
    n = len(code)
    line = 1
    at_line_start = True
    while i < n:
        ch = code[i]
        if ch in " \t\r\f\v":
            i += 1
            continue
        if ch == "\n":
            line += 1
            i += 1
            at_line_start = True
            continue
        start = i
        start_line = line
        if ch == "#" and at_line_start:
            while i < n and code[i] != "\n":
                i += 1
            tokens.append(Token(PREPROCESSOR, code[start:i], start_line, start))
        elif ch == "/" and i + 1 < n and code[i + 1] == "/":
            while i < n and code[i] != "\n":
                i += 1
            tokens.append(Token(COMMENT, code[start:i], start_line, start))
        elif ch == "/" and i + 1 < n and code[i + 1] == "*":
            i += 2
            while True:
                if i >= n:
                    raise LexError(
                        "unterminated_comment", start_line,
                        f"line {start_line}: unterminated block comment",
                    )
                if code[i] == "\n":
                    line += 1
                    i += 1
                elif code[i] == "*" and i + 1 < n and code[i + 1] == "/":
                    i += 2
                    break
                else:
                    i += 1
            tokens.append(Token(COMMENT, code[start:i], start_line, start))
        elif ch in "\"'":
            quote = ch
            kind = STRING_LIT if quote == '"' else CHAR_LIT
            i += 1
            while True:
                if i >= n or code[i] == "\n":
                    raise LexError(
                        "unterminated_literal", start_line,
                        f"line {start_line}: unterminated {kind} starting with {quote}",
                    )
                if code[i] == "\\" and i + 1 < n:
                    if code[i + 1] == "\n":
                        line += 1
                    i += 2
                    continue
                if code[i] == quote:
                    i += 1
                    break
                i += 1
            tokens.append(Token(kind, code[start:i], start_line, start))
        elif ch in _ID_START:
            while i < n and code[i] in _ID_CONT:
                i += 1
            tokens.append(Token(IDENTIFIER, code[start:i], start_line, start))
        elif ch.isdigit():
            i += 1
            while i < n and (code[i] in _ID_CONT or code[i] == "."):
                i += 1
            tokens.append(Token(NUMBER, code[start:i], start_line, start))
        else:
            i += 1
            tokens.append(Token(PUNCT, ch, start_line, start))
        at_line_start = False
    return tokens


def check_balance(tokens: Sequence[Token]) -> list[Violation]:
    """Check (), {}, [] nesting over punct tokens only.

    Returns at most one violation: the first mismatched closer, or the
    earliest opener left unclosed at end of input.
    """
    stack: list[Token] = []
    for tok in tokens:
        if tok.kind != PUNCT:
            continue
        if tok.text in _OPENERS:
            stack.append(tok)
        elif tok.text in _CLOSERS:
            if not stack:
                return [Violation("unbalanced", tok.line,
                                  f"unmatched {tok.text!r} with no opener")]
            opener = stack.pop()
            if opener.text != _CLOSERS[tok.text]:
                return [Violation("unbalanced", tok.line,
                                  f"expected {_OPENERS[opener.text]!r} to close "
                                  f"{opener.text!r} from line {opener.line}, found {tok.text!r}")]
    if stack:
        opener = stack[0]
        return [Violation("unbalanced", opener.line,
                          f"unclosed {opener.text!r}, missing {_OPENERS[opener.text]!r}")]
    return []


def _lex_and_balance(code: str, label: str) -> tuple[list[Token] | None, list[Violation]]:
    try:
        tokens = lex(code)
    except LexError as exc:
        return None, [Violation(exc.rule, exc.line, f"{label}: {exc}")]
    violations = check_balance(tokens)
    return tokens, [Violation(v.rule, v.line, f"{label}: {v.detail}") for v in violations]


def validate_record(record: ChangeRecord, ruleset: Ruleset = Ruleset()) -> Verdict:
    """Validate one synthetic record; valid iff no violations.

    Checks, in order: old_code lexes and balances; the diff applies; the
    post-change code lexes and balances; the post-change code is non-empty
    after comment stripping; no denylist substring occurs in it.
    """
    if record.origin != "synthetic":
        raise ValueError(f"validate_record expects a synthetic record, got origin={record.origin!r}")
    violations: list[Violation] = []
    _, old_violations = _lex_and_balance(record.old_code, "before-code")
    violations.extend(old_violations)
    new_code = None
    try:
        new_code = diffkit.apply(record.old_code, diffkit.parse_unified_diff(record.diff))
    except (diffkit.DiffParseError, diffkit.DiffApplyError) as exc:
        violations.append(Violation("diff_apply", 0, f"diff does not apply: {exc}"))
    if new_code is not None:
        new_tokens, new_violations = _lex_and_balance(new_code, "post-change code")
        violations.extend(new_violations)
        if new_tokens is not None and not any(t.kind != COMMENT for t in new_tokens):
            violations.append(Violation("empty", 1, "no code left after comment stripping"))
        for needle in ruleset.denylist:
            pos = new_code.find(needle)
            if pos >= 0:
                violations.append(Violation(
                    "leakage", new_code.count("\n", 0, pos) + 1,
                    f"denylisted fragment {needle!r} in post-change code",
                ))
    return Verdict(valid=not violations, violations=tuple(violations))


def filter_corpus(
    records: Iterable[ChangeRecord], ruleset: Ruleset = Ruleset()
) -> tuple[list[ChangeRecord], list[tuple[ChangeRecord, Verdict]]]:
    """Partition records into (kept, rejected-with-verdicts), order preserved."""
    kept: list[ChangeRecord] = []
    rejected: list[tuple[ChangeRecord, Verdict]] = []
    for record in records:
        verdict = validate_record(record, ruleset)
        if verdict.valid:
            kept.append(record)
        else:
            rejected.append((record, verdict))
    return kept, rejected


def write_rejection_report(
    rejected: Sequence[tuple[ChangeRecord, Verdict]], path: str | Path
) -> int:
    """One JSONL line {id, rule, line, detail} per rejected record (first violation)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record, verdict in rejected:
            first = verdict.violations[0]
            handle.write(json.dumps(
                {"id": record.id, "rule": first.rule, "line": first.line, "detail": first.detail},
                ensure_ascii=False,
            ) + "\n")
    return len(rejected)

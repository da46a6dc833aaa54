"""Deterministic planted-signal corpora for tests, demos, and the bundled fixture.

Every generated record is a small class with one edited method. The review
label is a pure function of the edit: label 1 records add a marker line
containing the standalone token "todo", label 0 records add a "note" marker
line and never the token "todo". The fixed marker lines give the classes a
wide margin, so linear training must separate them within the default epoch
budget, while the surrounding edit keeps enough vocabulary variety for
feature hashing to matter.

Generated diffs are built from the before/after texts, so they always apply
cleanly, and the code bodies stay lexically well formed and free of the
default leakage denylist once run through the mock translator.
"""

from __future__ import annotations

import random

from . import diffkit
from .corpus import ChangeRecord, CorpusStore

_NAMES = ("Widget", "Ledger", "Router", "Bucket", "Cursor", "Sampler", "Gauge", "Relay")
_WORDS = ("bounds", "buffer", "cache", "cursor", "flag", "guard", "index",
          "limit", "offset", "retry", "slack", "window")
_NUMS = (3, 7, 10, 16, 25, 40, 64, 90)


def _java_old(rng: random.Random, idx: int) -> list[str]:
    name = rng.choice(_NAMES)
    limit = rng.choice(_NUMS)
    word = rng.choice(_WORDS)
    return [
        f"public class {name}{idx} {{",
        "    private final String label;",
        "    private boolean active = false;",
        f"    private int count = {rng.choice(_NUMS)};",
        "",
        "    int refresh(int delta) {",
        "        count = count + delta;",
        f"        if (count > {limit}) {{",
        f'            System.out.println("{word}" + count);',
        "        }",
        "        return count;",
        "    }",
        "",
        "    int drain(int step) {",
        "        count = count - step;",
        "        return count;",
        "    }",
        "}",
    ]


def _cpp_old(rng: random.Random, idx: int) -> list[str]:
    name = rng.choice(_NAMES)
    limit = rng.choice(_NUMS)
    word = rng.choice(_WORDS)
    return [
        f"class {name}{idx} {{",
        "  public:",
        "    int refresh(int delta) {",
        "        count_ = count_ + delta;",
        f"        if (count_ > {limit}) {{",
        f'            std::cout << "{word}" << count_;',
        "        }",
        "        return count_;",
        "    }",
        "",
        "    int drain(int step) {",
        "        count_ = count_ - step;",
        "        return count_;",
        "    }",
        "",
        "  private:",
        "    std::string label_;",
        "    bool active_ = false;",
        f"    int count_ = {rng.choice(_NUMS)};",
        "};",
    ]


SIGNAL_LINE = "        // todo review this change"
NEUTRAL_LINE = "        // note routine change"


def _noise_line(rng: random.Random, lang: str) -> str:
    count = "count" if lang == "java" else "count_"
    choices = [
        f"        {count} = {count} + {rng.choice(_NUMS)};",
        f"        int {rng.choice(_WORDS)}Step = {rng.choice(_NUMS)};",
    ]
    return rng.choice(choices)


def planted_record(rng: random.Random, lang: str, idx: int, label: int) -> ChangeRecord:
    old_lines = _java_old(rng, idx) if lang == "java" else _cpp_old(rng, idx)
    # Edit inside the refresh() body. Only internally balanced statement
    # lines may be deleted, so generated code always stays well formed.
    if lang == "java":
        removable, insert_points = (6, 8), (6, 7)
    else:
        removable, insert_points = (3, 5), (3, 4)
    new_lines = list(old_lines)
    insert_at = rng.choice(insert_points)
    if rng.random() < 0.4:
        remove_at = rng.choice(removable)
        del new_lines[remove_at]
        if insert_at > remove_at:
            insert_at -= 1
    added = [SIGNAL_LINE if label == 1 else NEUTRAL_LINE]
    if rng.random() < 0.5:
        added.append(_noise_line(rng, lang))
    rng.shuffle(added)
    new_lines[insert_at:insert_at] = added
    old_code = "\n".join(old_lines) + "\n"
    new_code = "\n".join(new_lines) + "\n"
    diff = diffkit.render(diffkit.diff_texts(old_code, new_code))
    return ChangeRecord(
        id=f"{lang}-{idx:04d}",
        language=lang,
        old_code=old_code,
        diff=diff,
        label=label,
        origin="real",
        source_id=None,
        split=None,
    )


def planted_corpus(
    n_src: int = 300,
    n_real: int = 100,
    seed: int = 20250801,
    src_lang: str = "java",
    dst_lang: str = "cpp",
) -> CorpusStore:
    """Source-language records plus real target-language records, labels ~50/50."""
    rng = random.Random(seed)
    records = []
    for i in range(n_src):
        records.append(planted_record(rng, src_lang, i, i % 2))
    for i in range(n_real):
        records.append(planted_record(rng, dst_lang, i, i % 2))
    return CorpusStore(tuple(records))

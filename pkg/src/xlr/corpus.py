"""Labeled code-change corpora: JSONL ingest, stratified split, select, export.

The corpus file format is UTF-8 JSONL with LF line endings, one record per
line, fields in the fixed order id, language, old_code, diff, label, origin,
source_id, split. Unknown fields are an error in strict mode and are
preserved (and otherwise ignored) in lenient mode.
"""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from . import diffkit
from .errors import XlrError

log = logging.getLogger(__name__)

FIELD_ORDER = ("id", "language", "old_code", "diff", "label", "origin", "source_id", "split")

ORIGINS = ("real", "synthetic")
SPLITS = (None, "train", "test")


class CorpusError(XlrError):
    pass


@dataclass(frozen=True)
class ChangeRecord:
    id: str
    language: str
    old_code: str
    diff: str
    label: int
    origin: str
    source_id: str | None = None
    split: str | None = None
    extras: tuple[tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise CorpusError("record id must be a non-empty string")
        if not isinstance(self.language, str) or self.language != self.language.lower():
            raise CorpusError(f"record {self.id}: language must be a lowercase tag")
        if not isinstance(self.old_code, str) or not isinstance(self.diff, str):
            raise CorpusError(f"record {self.id}: old_code and diff must be strings")
        if isinstance(self.label, bool) or self.label not in (0, 1):
            raise CorpusError(f"record {self.id}: label must be 0 or 1, got {self.label!r}")
        if self.origin not in ORIGINS:
            raise CorpusError(f"record {self.id}: origin must be one of {ORIGINS}")
        if (self.origin == "synthetic") != (self.source_id is not None):
            raise CorpusError(
                f"record {self.id}: source_id must be set exactly when origin is synthetic"
            )
        if self.split not in SPLITS:
            raise CorpusError(f"record {self.id}: split must be null, train, or test")


def to_json_obj(record: ChangeRecord) -> dict:
    obj = {name: getattr(record, name) for name in FIELD_ORDER}
    for key, value in record.extras:
        obj[key] = value
    return obj


def from_json_obj(obj: Mapping, strict: bool = False, where: str = "") -> ChangeRecord:
    missing = [name for name in FIELD_ORDER if name not in obj]
    if missing:
        raise CorpusError(f"{where}missing fields: {', '.join(missing)}")
    extras = {k: v for k, v in obj.items() if k not in FIELD_ORDER}
    if strict and extras:
        raise CorpusError(f"{where}unknown fields: {', '.join(sorted(extras))}")
    try:
        return ChangeRecord(
            id=obj["id"],
            language=obj["language"],
            old_code=obj["old_code"],
            diff=obj["diff"],
            label=obj["label"],
            origin=obj["origin"],
            source_id=obj["source_id"],
            split=obj["split"],
            extras=tuple(sorted(extras.items())),
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}{exc}") from None


@dataclass(frozen=True)
class CorpusStore:
    """Immutable ordered record collection; operations return new stores."""

    records: tuple[ChangeRecord, ...] = ()
    manifest: Mapping[tuple, int] = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        seen = set()
        for record in self.records:
            if record.id in seen:
                raise CorpusError(f"duplicate record id {record.id!r}")
            seen.add(record.id)
        counts = Counter(
            (r.language, r.origin, r.label, r.split) for r in self.records
        )
        object.__setattr__(self, "manifest", dict(counts))

    def __len__(self) -> int:
        return len(self.records)


def ingest(path: str | Path, strict: bool = False) -> CorpusStore:
    """Load a JSONL corpus file.

    Malformed JSON, schema violations, and duplicate ids raise CorpusError
    naming the line. In strict mode, records whose diff does not parse and
    apply cleanly to old_code are dropped (with a logged warning), and
    unknown fields are an error.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    records = []
    ids = set()
    dropped = 0
    for lineno, line in enumerate(lines, start=1):
        where = f"{path}:{lineno}: "
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{where}malformed JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise CorpusError(f"{where}expected a JSON object")
        record = from_json_obj(obj, strict=strict, where=where)
        if record.id in ids:
            raise CorpusError(f"{where}duplicate record id {record.id!r}")
        ids.add(record.id)
        if strict:
            try:
                diffkit.apply(record.old_code, diffkit.parse_unified_diff(record.diff))
            except (diffkit.DiffParseError, diffkit.DiffApplyError) as exc:
                log.warning("%sdropping record %s: diff does not apply: %s", where, record.id, exc)
                dropped += 1
                continue
        records.append(record)
    if dropped:
        log.warning("strict ingest dropped %d of %d records", dropped, dropped + len(records))
    return CorpusStore(tuple(records))


def _round_half_away_from_zero(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def split(
    store: CorpusStore, test_fraction: float, seed: int, overwrite: bool = False
) -> CorpusStore:
    """Assign train/test splits, stratified per label class.

    Per class, exactly round(test_fraction * class_count) records become
    "test" (round = half away from zero), chosen by a seeded shuffle of the
    class members sorted by id, so the assignment is stable across ingest
    reorderings of the same record set.
    """
    if not 0.0 <= test_fraction <= 1.0:
        raise CorpusError(f"test_fraction must be in [0, 1], got {test_fraction}")
    if len(store) == 0:
        raise CorpusError("cannot split an empty store")
    if not overwrite:
        assigned = [r.id for r in store.records if r.split is not None]
        if assigned:
            raise CorpusError(
                f"{len(assigned)} records already have a split (first: {assigned[0]}); "
                "pass overwrite to redo"
            )
    by_label: dict[int, list[str]] = {0: [], 1: []}
    for record in store.records:
        by_label[record.label].append(record.id)
    rng = random.Random(seed)
    test_ids = set()
    for label in (0, 1):
        members = sorted(by_label[label])
        if not members:
            continue
        rng.shuffle(members)
        n_test = _round_half_away_from_zero(test_fraction * len(members))
        test_ids.update(members[:n_test])
    new_records = tuple(
        replace(r, split="test" if r.id in test_ids else "train") for r in store.records
    )
    return CorpusStore(new_records)


def select(store: CorpusStore, query: Mapping[str, object] | None = None) -> list[ChangeRecord]:
    """Records matching every provided filter field, in store order."""
    query = dict(query or {})
    allowed = {"language", "origin", "split", "label"}
    unknown = set(query) - allowed
    if unknown:
        raise KeyError(f"unknown filter fields: {sorted(unknown)}")
    return [
        r for r in store.records if all(getattr(r, k) == v for k, v in query.items())
    ]


def store_of(records: Iterable[ChangeRecord]) -> CorpusStore:
    return CorpusStore(tuple(records))


def export(
    store: CorpusStore, query: Mapping[str, object] | None, path: str | Path
) -> int:
    """Write matching records as JSONL; returns the record count written."""
    selected = select(store, query)
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            for record in selected:
                handle.write(json.dumps(to_json_obj(record), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise CorpusError(f"cannot write corpus file {path}: {exc}") from None
    return len(selected)

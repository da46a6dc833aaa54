"""Confusion matrices, the four headline metrics, and comparison reports.

The positive class is label 1 ("requires review"). Zero-denominator metrics
are defined as 0, not NaN, so reports stay total and comparable. Each metric
is computed as a single integer division, which makes the floats exactly
equal to the correctly rounded rational values (f1 uses the equivalent
closed form 2*tp / (2*tp + fp + fn)).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .corpus import ChangeRecord
from .errors import XlrError


class EvalError(XlrError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalRow:
    name: str
    cm: ConfusionMatrix
    metrics: Metrics
    fingerprint: str


@dataclass(frozen=True)
class EvalReport:
    fingerprint: str
    rows: tuple[EvalRow, ...]
    deltas: tuple[Mapping[str, float], ...]
    config: Mapping | None = None


def confusion(pairs: Iterable[tuple[int, int]]) -> ConfusionMatrix:
    """Count (label, decision) pairs; tp=(1,1), fp=(0,1), fn=(1,0), tn=(0,0)."""
    tp = fp = fn = tn = 0
    for label, decision in pairs:
        if label not in (0, 1) or decision not in (0, 1):
            raise EvalError(f"labels and decisions must be 0 or 1, got {(label, decision)}")
        if label == 1 and decision == 1:
            tp += 1
        elif label == 0 and decision == 1:
            fp += 1
        elif label == 1 and decision == 0:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise EvalError("cannot compute metrics over zero records")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1_den = 2 * cm.tp + cm.fp + cm.fn
    f1 = 2 * cm.tp / f1_den if f1_den else 0.0
    return Metrics(accuracy, precision, recall, f1)


def test_set_fingerprint(records: Sequence[ChangeRecord]) -> str:
    ids = sorted(r.id for r in records)
    return hashlib.sha256("\n".join(ids).encode("utf-8")).hexdigest()


def evaluate(backend, test: Sequence[ChangeRecord]) -> tuple[ConfusionMatrix, Metrics]:
    """Predict every test record with the backend and score it.

    The backend must expose predict_probabilities(records) and a threshold
    attribute. Synthetic records in the test set are a hard error: scoring on
    them would invalidate the real-vs-synthetic comparison.
    """
    if not test:
        raise EvalError("test set is empty")
    for record in test:
        if record.origin != "real":
            raise EvalError(
                f"test set contains a synthetic record ({record.id}); "
                "evaluation must use real records only"
            )
    probs = backend.predict_probabilities(test)
    threshold = backend.threshold
    pairs = [(r.label, 1 if p >= threshold else 0) for r, p in zip(test, probs)]
    cm = confusion(pairs)
    return cm, metrics(cm)


_METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


def compare(rows: Sequence[EvalRow], fingerprint: str | None = None,
            config: Mapping | None = None) -> EvalReport:
    """Assemble rows evaluated on one test set; deltas are row_k minus row_0."""
    if not rows:
        raise EvalError("compare needs at least one row")
    expected = fingerprint if fingerprint is not None else rows[0].fingerprint
    for row in rows:
        if row.fingerprint != expected:
            raise EvalError(
                f"row {row.name!r} was evaluated on a different test set "
                f"({row.fingerprint[:12]} != {expected[:12]})"
            )
    base = rows[0].metrics
    deltas = tuple(
        {name: getattr(row.metrics, name) - getattr(base, name) for name in _METRIC_NAMES}
        for row in rows
    )
    return EvalReport(expected, tuple(rows), deltas, config)


def _round2(value: float) -> str:
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_report(report: EvalReport, fmt: str = "json") -> str:
    """Render a report as machine JSON (full precision) or a markdown table.

    The markdown table rounds to 2 decimals, half away from zero, under the
    header "Training Data | Accuracy | Precision | Recall | F1".
    """
    if fmt == "json":
        payload = {
            "fingerprint": report.fingerprint,
            "config": dict(report.config) if report.config is not None else None,
            "rows": [
                {
                    "name": row.name,
                    "cm": {"tp": row.cm.tp, "fp": row.cm.fp, "fn": row.cm.fn, "tn": row.cm.tn},
                    "metrics": {
                        "accuracy": row.metrics.accuracy,
                        "precision": row.metrics.precision,
                        "recall": row.metrics.recall,
                        "f1": row.metrics.f1,
                    },
                }
                for row in report.rows
            ],
            "deltas": [dict(d) for d in report.deltas],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "markdown-table":
        lines = [
            "Training Data | Accuracy | Precision | Recall | F1",
            "--- | --- | --- | --- | ---",
        ]
        for row in report.rows:
            name = row.name if row.name else "(unnamed)"
            m = row.metrics
            lines.append(
                f"{name} | {_round2(m.accuracy)} | {_round2(m.precision)} | "
                f"{_round2(m.recall)} | {_round2(m.f1)}"
            )
        return "\n".join(lines) + "\n"
    raise EvalError(f"unknown report format {fmt!r}")


def parse_report_json(text: str) -> EvalReport:
    payload = json.loads(text)
    rows = tuple(
        EvalRow(
            name=row["name"],
            cm=ConfusionMatrix(**row["cm"]),
            metrics=Metrics(**row["metrics"]),
            fingerprint=payload["fingerprint"],
        )
        for row in payload["rows"]
    )
    return EvalReport(
        payload["fingerprint"], rows, tuple(payload["deltas"]), payload.get("config")
    )

import json
import random
from fractions import Fraction

import pytest

from xlr import evalkit
from xlr.evalkit import (
    ConfusionMatrix,
    EvalError,
    EvalRow,
    Metrics,
    compare,
    confusion,
    evaluate,
    metrics,
    parse_report_json,
    render_report,
)

from xlr.evalkit import test_set_fingerprint as fingerprint_of

from conftest import make_record


class ConstantBackend:
    def __init__(self, probability, threshold=0.5):
        self.probability = probability
        self.threshold = threshold

    def predict_probabilities(self, records):
        return [self.probability] * len(records)


class OracleBackend:
    threshold = 0.5

    def predict_probabilities(self, records):
        return [0.9 if r.label == 1 else 0.1 for r in records]


class TestConfusion:
    def test_empty(self):
        assert confusion([]) == ConfusionMatrix(0, 0, 0, 0)

    def test_all_correct(self):
        pairs = [(1, 1)] * 3 + [(0, 0)] * 2
        assert confusion(pairs) == ConfusionMatrix(3, 0, 0, 2)

    def test_mixed_counts_by_hand(self):
        pairs = [(1, 1), (1, 1), (0, 1), (1, 0), (0, 0), (0, 0)]
        assert confusion(pairs) == ConfusionMatrix(2, 1, 1, 2)

    def test_rejects_non_binary(self):
        with pytest.raises(EvalError):
            confusion([(2, 1)])


class TestMetrics:
    def test_perfect(self):
        m = metrics(ConfusionMatrix(3, 0, 0, 2))
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_mixed_by_hand(self):
        m = metrics(ConfusionMatrix(2, 1, 1, 2))
        assert m.accuracy == pytest.approx(4 / 6)
        assert m.precision == pytest.approx(2 / 3)
        assert m.recall == pytest.approx(2 / 3)
        assert m.f1 == pytest.approx(2 / 3)

    def test_zero_denominator_conventions(self):
        m = metrics(ConfusionMatrix(0, 0, 3, 3))
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
        assert m.accuracy == 0.5
        all_negative = metrics(ConfusionMatrix(0, 0, 0, 4))
        assert (all_negative.precision, all_negative.recall, all_negative.f1) == (0.0, 0.0, 0.0)

    def test_total_zero_is_an_error(self):
        with pytest.raises(EvalError):
            metrics(ConfusionMatrix(0, 0, 0, 0))

    def test_oracle_equivalence_1000_random_vectors(self):
        rng = random.Random(314159)
        for _ in range(1000):
            n = rng.randrange(1, 50)
            pairs = [(rng.randrange(2), rng.randrange(2)) for _ in range(n)]
            cm = confusion(pairs)
            m = metrics(cm)
            # brute-force recount, then exact rational metrics
            tp = sum(1 for y, d in pairs if y == 1 and d == 1)
            fp = sum(1 for y, d in pairs if y == 0 and d == 1)
            fn = sum(1 for y, d in pairs if y == 1 and d == 0)
            tn = sum(1 for y, d in pairs if y == 0 and d == 0)
            assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
            assert m.accuracy == float(Fraction(tp + tn, n))
            assert m.precision == (float(Fraction(tp, tp + fp)) if tp + fp else 0.0)
            assert m.recall == (float(Fraction(tp, tp + fn)) if tp + fn else 0.0)
            p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
            r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
            expected_f1 = float(2 * p * r / (p + r)) if p + r else 0.0
            assert m.f1 == expected_f1

    def test_bounds_and_f1_between_precision_and_recall(self):
        rng = random.Random(2718)
        for _ in range(300):
            cm = ConfusionMatrix(*(rng.randrange(0, 12) for _ in range(4)))
            if cm.total == 0:
                continue
            m = metrics(cm)
            for value in (m.accuracy, m.precision, m.recall, m.f1):
                assert 0.0 <= value <= 1.0
            if m.precision > 0 and m.recall > 0:
                assert min(m.precision, m.recall) - 1e-12 <= m.f1
                assert m.f1 <= max(m.precision, m.recall) + 1e-12


class TestEvaluate:
    def real_test_set(self, n=10):
        return [make_record(i, label=i % 2, split="test") for i in range(n)]

    def test_perfect_oracle(self):
        cm, m = evaluate(OracleBackend(), self.real_test_set(5))
        assert m == Metrics(1.0, 1.0, 1.0, 1.0)
        assert cm.total == 5

    def test_constant_positive_on_balanced_set(self):
        cm, m = evaluate(ConstantBackend(0.75), self.real_test_set(10))
        assert m.accuracy == 0.5
        assert m.recall == 1.0
        assert m.precision == 0.5
        assert m.f1 == pytest.approx(2 / 3)

    def test_threshold_tie_goes_positive(self):
        cm, _ = evaluate(ConstantBackend(0.5), self.real_test_set(4))
        assert cm.tp + cm.fp == 4

    def test_synthetic_record_is_a_hard_error(self):
        test = self.real_test_set(4) + [make_record(99, origin="synthetic", split="test")]
        with pytest.raises(EvalError, match="synthetic"):
            evaluate(ConstantBackend(0.9), test)

    def test_empty_test_set(self):
        with pytest.raises(EvalError, match="empty"):
            evaluate(ConstantBackend(0.9), [])


def row(name, metrics_values, fingerprint="f" * 64, cm=None):
    return EvalRow(name, cm or ConfusionMatrix(1, 0, 0, 1),
                   Metrics(*metrics_values), fingerprint)


class TestCompare:
    def test_single_row_zero_deltas(self):
        report = compare([row("only", (0.9, 0.8, 0.7, 0.75))])
        assert len(report.rows) == 1
        assert report.deltas[0] == {"accuracy": 0.0, "precision": 0.0,
                                    "recall": 0.0, "f1": 0.0}

    def test_known_reference_deltas(self):
        real = row("Real C++", (0.65, 0.64, 0.65, 0.64))
        synthetic = row("Synthetic C++", (0.65, 0.65, 0.68, 0.66))
        report = compare([real, synthetic])
        assert report.deltas[1]["f1"] == pytest.approx(0.02)
        assert report.deltas[1]["recall"] == pytest.approx(0.03)

    def test_fingerprint_mismatch(self):
        with pytest.raises(EvalError, match="different test set"):
            compare([row("a", (1, 1, 1, 1)), row("b", (1, 1, 1, 1), fingerprint="e" * 64)])

    def test_explicit_fingerprint_enforced(self):
        with pytest.raises(EvalError):
            compare([row("a", (1, 1, 1, 1))], fingerprint="0" * 64)

    def test_no_rows(self):
        with pytest.raises(EvalError):
            compare([])


class TestRenderReport:
    def reference_report(self):
        return compare([
            row("Real C++", (0.65, 0.64, 0.65, 0.64)),
            row("Synthetic C++", (0.65, 0.65, 0.68, 0.66)),
        ])

    def test_markdown_header_and_rows_exact(self):
        text = render_report(self.reference_report(), "markdown-table")
        lines = text.splitlines()
        assert lines[0] == "Training Data | Accuracy | Precision | Recall | F1"
        assert lines[2] == "Real C++ | 0.65 | 0.64 | 0.65 | 0.64"
        assert lines[3] == "Synthetic C++ | 0.65 | 0.65 | 0.68 | 0.66"

    def test_rounding_half_away_from_zero(self):
        report = compare([row("edge", (0.645, 0.005, 0.994995, 1.0))])
        line = render_report(report, "markdown-table").splitlines()[2]
        assert line == "edge | 0.65 | 0.01 | 0.99 | 1.00"

    def test_unnamed_row_placeholder(self):
        report = compare([row("", (1, 1, 1, 1))])
        assert "(unnamed) | " in render_report(report, "markdown-table")

    def test_json_round_trip_numerically_identical(self):
        report = self.reference_report()
        text = render_report(report, "json")
        again = parse_report_json(text)
        for a, b in zip(report.rows, again.rows):
            assert a.metrics == b.metrics
            assert a.cm == b.cm
        assert again.fingerprint == report.fingerprint

    def test_json_carries_fingerprint_and_full_precision(self):
        report = compare([row("x", (1 / 3, 2 / 3, 0.1, 0.2))])
        payload = json.loads(render_report(report, "json"))
        assert payload["fingerprint"] == "f" * 64
        assert payload["rows"][0]["metrics"]["accuracy"] == 1 / 3

    def test_unknown_format(self):
        with pytest.raises(EvalError):
            render_report(self.reference_report(), "csv")


def test_fingerprint_depends_on_ids_not_order():
    a = [make_record(i) for i in range(5)]
    assert fingerprint_of(a) == fingerprint_of(list(reversed(a)))
    b = [make_record(i) for i in range(1, 6)]
    assert fingerprint_of(a) != fingerprint_of(b)

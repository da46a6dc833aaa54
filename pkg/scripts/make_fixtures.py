#!/usr/bin/env python3
"""Regenerate the bundled fixtures under fixtures/.

Everything here is deterministic, so re-running must reproduce the committed
files byte for byte (test_cli has a guard asserting exactly that).
"""

from __future__ import annotations

import json
from pathlib import Path

from xlr import corpus, fixtures

ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = ROOT / "fixtures"

CORPUS_SEED = 20250801
CONFORMANCE_SEED = 777
CONFORMANCE_SPLIT_SEED = 99


def write_corpus() -> None:
    store = fixtures.planted_corpus(n_src=300, n_real=100, seed=CORPUS_SEED)
    corpus.export(store, {}, FIXTURE_DIR / "fixture_corpus.jsonl")


def write_pipeline_config() -> None:
    config = {
        "seed": 42,
        "test_fraction": 0.2,
        "src_lang": "java",
        "dst_lang": "cpp",
        "strict": True,
        "provider": {
            "kind": "mock",
            "model": "mock-java-cpp",
            "max_concurrency": 4,
            "timeout": 30.0,
            "corruption_rate": 0.0,
            "retry": {"max_attempts": 3, "base_delay": 0.5, "jitter_seed": 0},
        },
        "hyperparams": {
            "learning_rate": 0.1,
            "epochs": 5,
            "l2": 0.0001,
            "hash_dim": 262144,
        },
        "threshold": 0.5,
        "denylist": ["System.out", "@Override", "import java", "public static void main"],
        "paths": {
            "corpus_in": "fixtures/fixture_corpus.jsonl",
            "workdir": "runs/fixture",
        },
    }
    (FIXTURE_DIR / "pipeline_config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8"
    )


def conformance_requests() -> list[dict]:
    """Recorded request transcript for external-backend conformance replay.

    handshake, train on the 80-record train slice of the 100-record planted
    fixture, predict the 20-record held-out slice, shutdown.
    """
    store = fixtures.planted_corpus(n_src=0, n_real=100, seed=CONFORMANCE_SEED)
    split_store = corpus.split(store, 0.2, seed=CONFORMANCE_SPLIT_SEED)
    train = corpus.select(split_store, {"split": "train"})
    test = corpus.select(split_store, {"split": "test"})
    return [
        {"id": 1, "cmd": "handshake"},
        {"id": 2, "cmd": "train",
         "records": [corpus.to_json_obj(r) for r in train],
         "params": {"seed": 7}},
        {"id": 3, "cmd": "predict",
         "records": [corpus.to_json_obj(r) for r in test]},
        {"id": 4, "cmd": "shutdown"},
    ]


def write_conformance_transcript() -> None:
    lines = [json.dumps(req, ensure_ascii=False) for req in conformance_requests()]
    (FIXTURE_DIR / "backend_conformance_requests.jsonl").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )


def main() -> None:
    FIXTURE_DIR.mkdir(exist_ok=True)
    write_corpus()
    write_pipeline_config()
    write_conformance_transcript()
    for name in ("fixture_corpus.jsonl", "pipeline_config.json",
                 "backend_conformance_requests.jsonl"):
        size = (FIXTURE_DIR / name).stat().st_size
        print(f"wrote fixtures/{name} ({size} bytes)")


if __name__ == "__main__":
    main()

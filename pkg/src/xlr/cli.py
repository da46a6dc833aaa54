"""Command-line orchestration: ingest -> split -> translate -> validate ->
train -> evaluate -> compare, plus a pipeline command running the whole flow.

Config is JSON; flags always win over config. One master seed fans out to
per-component seeds through a labeled hash so adding a component never
perturbs existing streams. All diagnostics go to stderr; data goes to files
under the workdir with fixed names. Exit codes: 0 success, 1 operational
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import corpus as corpuslib
from . import evalkit, translator, validator
from .errors import XlrError
from .model import (
    ExternalBackend,
    Hyperparams,
    NativeBackend,
    load_model,
    save_model,
    train_native,
)

log = logging.getLogger("xlr")

DISPLAY_NAMES = {"cpp": "C++", "java": "Java"}


def derive_seed(master: int, label: str) -> int:
    """Stable per-component seed: first 8 bytes of sha256("label:master")."""
    digest = hashlib.sha256(f"{label}:{master}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RunConfig:
    seed: int = 42
    test_fraction: float = 0.2
    src_lang: str = "java"
    dst_lang: str = "cpp"
    strict: bool = True
    provider: translator.ProviderConfig = field(default_factory=translator.ProviderConfig)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    threshold: float = 0.5
    denylist: tuple[str, ...] = validator.DEFAULT_DENYLIST
    backend_kind: str = "native"
    backend_command: tuple[str, ...] = ()
    backend_workdir: str | None = None
    corpus_in: str | None = None
    workdir: str = "."
    report_out: str | None = None

    def snapshot(self) -> dict:
        """Config as stable JSON-able data; paths excluded so report.json is
        byte-identical across machines."""
        return {
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "src_lang": self.src_lang,
            "dst_lang": self.dst_lang,
            "strict": self.strict,
            "provider": {
                "kind": self.provider.kind,
                "model": self.provider.model,
                "max_concurrency": self.provider.max_concurrency,
                "timeout": self.provider.timeout,
                "corruption_rate": self.provider.corruption_rate,
                "retry": {
                    "max_attempts": self.provider.retry.max_attempts,
                    "base_delay": self.provider.retry.base_delay,
                    "jitter_seed": self.provider.retry.jitter_seed,
                },
            },
            "hyperparams": {
                "learning_rate": self.hyperparams.learning_rate,
                "epochs": self.hyperparams.epochs,
                "l2": self.hyperparams.l2,
                "hash_dim": self.hyperparams.hash_dim,
            },
            "threshold": self.threshold,
            "denylist": list(self.denylist),
            "backend": self.backend_kind,
        }


def _config_from_dict(data: dict, where: str) -> RunConfig:
    cfg = RunConfig()
    known = {
        "seed", "test_fraction", "src_lang", "dst_lang", "strict", "provider",
        "hyperparams", "threshold", "denylist", "backend", "paths",
    }
    unknown = set(data) - known
    if unknown:
        raise XlrError(f"{where}: unknown config keys: {sorted(unknown)}")
    for key in ("seed", "test_fraction", "src_lang", "dst_lang", "strict", "threshold"):
        if key in data:
            setattr(cfg, key, data[key])
    if "provider" in data:
        p = dict(data["provider"])
        retry_data = p.pop("retry", {})
        try:
            retry = translator.RetryPolicy(
                max_attempts=retry_data.get("max_attempts", 3),
                base_delay=retry_data.get("base_delay", 0.5),
                jitter_seed=retry_data.get("jitter_seed", 0),
            )
            cfg.provider = translator.ProviderConfig(retry=retry, **p)
        except (TypeError, ValueError) as exc:
            raise XlrError(f"{where}: bad provider config: {exc}") from None
    if "hyperparams" in data:
        try:
            cfg.hyperparams = Hyperparams(**data["hyperparams"])
        except TypeError as exc:
            raise XlrError(f"{where}: bad hyperparams: {exc}") from None
    if "denylist" in data:
        cfg.denylist = tuple(data["denylist"])
    if "backend" in data:
        b = data["backend"]
        cfg.backend_kind = b.get("kind", "native")
        cfg.backend_command = tuple(b.get("command", ()))
        cfg.backend_workdir = b.get("workdir")
        if cfg.backend_kind not in ("native", "external"):
            raise XlrError(f"{where}: backend kind must be native or external")
        if cfg.backend_kind == "external" and not cfg.backend_command:
            raise XlrError(f"{where}: external backend needs a command")
    if "paths" in data:
        paths = data["paths"]
        cfg.corpus_in = paths.get("corpus_in", cfg.corpus_in)
        cfg.workdir = paths.get("workdir", cfg.workdir)
        cfg.report_out = paths.get("report_out", cfg.report_out)
    return cfg


def load_run_config(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise XlrError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise XlrError(f"{path}: malformed JSON: {exc.msg}") from None
        cfg = _config_from_dict(data, str(path))
    else:
        cfg = RunConfig()
    # Flags always win over config.
    for flag, attr in (
        ("seed", "seed"), ("test_frac", "test_fraction"), ("src", "src_lang"),
        ("dst", "dst_lang"), ("workdir", "workdir"), ("report_out", "report_out"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "corpus_in", None) is not None:
        cfg.corpus_in = args.corpus_in
    if getattr(args, "strict", None) is not None:
        cfg.strict = args.strict
    try:
        if getattr(args, "corruption_rate", None) is not None:
            cfg.provider = replace(cfg.provider, corruption_rate=args.corruption_rate)
        if getattr(args, "provider", None) is not None:
            cfg.provider = replace(cfg.provider, kind=args.provider,
                                   endpoint=getattr(args, "endpoint", None)
                                   or cfg.provider.endpoint)
    except ValueError as exc:
        raise XlrError(f"bad provider flags: {exc}") from None
    return cfg


def _workdir(cfg: RunConfig) -> Path:
    path = Path(cfg.workdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_corpus_in(cfg: RunConfig) -> str:
    if not cfg.corpus_in:
        raise XlrError("no input corpus: pass --in or set paths.corpus_in in the config")
    return cfg.corpus_in


def _artifact_in(args: argparse.Namespace, cfg: RunConfig, default_name: str) -> Path:
    """Input for stages that consume an earlier stage's workdir artifact.

    An explicit --in always wins; config paths.corpus_in is deliberately not
    consulted, since it names the raw input corpus, not the artifact.
    """
    explicit = getattr(args, "corpus_in", None)
    if explicit:
        return Path(explicit)
    candidate = _workdir(cfg) / default_name
    if not candidate.exists():
        raise XlrError(f"no input: pass --in or produce {candidate} first")
    return candidate


def _jitter_seeded_retry(cfg: RunConfig) -> translator.RetryPolicy:
    retry = cfg.provider.retry
    if retry.jitter_seed == 0:
        retry = replace(retry, jitter_seed=derive_seed(cfg.seed, "translator.jitter"))
    return retry


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_require_corpus_in(cfg), strict=cfg.strict)
    out = _workdir(cfg) / "corpus.jsonl"
    count = corpuslib.export(store, {}, out)
    log.info("ingested %d records -> %s", count, out)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_require_corpus_in(cfg), strict=False)
    store = corpuslib.split(store, cfg.test_fraction,
                            derive_seed(cfg.seed, "corpus.split"),
                            overwrite=bool(getattr(args, "overwrite", False)))
    out = _workdir(cfg) / "corpus.jsonl"
    count = corpuslib.export(store, {}, out)
    log.info("split %d records (test fraction %.3f) -> %s", count, cfg.test_fraction, out)
    return 0


def cmd_translate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_require_corpus_in(cfg), strict=False)
    provider = translator.make_provider(cfg.provider, cfg.src_lang, cfg.dst_lang)
    synthetic, stats = translator.translate_corpus(
        store, provider, cfg.src_lang, cfg.dst_lang,
        retry=_jitter_seeded_retry(cfg),
        max_concurrency=cfg.provider.max_concurrency,
    )
    out = _workdir(cfg) / "synthetic.jsonl"
    corpuslib.export(corpuslib.store_of(synthetic), {}, out)
    log.info("translate: %s -> %s", translator.export_stats(stats), out)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_artifact_in(args, cfg, "synthetic.jsonl"), strict=False)
    ruleset = validator.Ruleset(denylist=cfg.denylist)
    kept, rejected = validator.filter_corpus(store.records, ruleset)
    workdir = _workdir(cfg)
    corpuslib.export(corpuslib.store_of(kept), {}, workdir / "synthetic.jsonl")
    validator.write_rejection_report(rejected, workdir / "rejected.jsonl")
    log.info("validate: kept %d, rejected %d", len(kept), len(rejected))
    return 0


def _select_args_query(args: argparse.Namespace) -> dict:
    query: dict = {}
    if getattr(args, "language", None):
        query["language"] = args.language
    if getattr(args, "origin", None):
        query["origin"] = args.origin
    if getattr(args, "split", None):
        query["split"] = None if args.split == "null" else args.split
    return query


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_artifact_in(args, cfg, "corpus.jsonl"), strict=False)
    records = corpuslib.select(store, _select_args_query(args))
    model = train_native(records, cfg.hyperparams,
                         derive_seed(cfg.seed, "model.train"), cfg.threshold)
    out = _workdir(cfg) / "model.bin"
    save_model(model, out)
    log.info("trained on %d records -> %s", len(records), out)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    store = corpuslib.ingest(_artifact_in(args, cfg, "corpus.jsonl"), strict=False)
    query = _select_args_query(args)
    query.setdefault("split", "test")
    test = corpuslib.select(store, query)
    model = load_model(args.model or str(_workdir(cfg) / "model.bin"))
    backend = NativeBackend(model.hyperparams, model.threshold)
    backend.model = model
    cm, m = evalkit.evaluate(backend, test)
    row = evalkit.EvalRow(args.name, cm, m, evalkit.test_set_fingerprint(test))
    out = Path(args.out) if args.out else _workdir(cfg) / "eval.json"
    out.write_text(json.dumps({
        "name": row.name,
        "fingerprint": row.fingerprint,
        "cm": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
        "metrics": {"accuracy": m.accuracy, "precision": m.precision,
                    "recall": m.recall, "f1": m.f1},
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("evaluated %d test records -> %s", len(test), out)
    return 0


def _read_row(path: str) -> evalkit.EvalRow:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return evalkit.EvalRow(
        name=data["name"],
        cm=evalkit.ConfusionMatrix(**data["cm"]),
        metrics=evalkit.Metrics(**data["metrics"]),
        fingerprint=data["fingerprint"],
    )


def _write_report(report: evalkit.EvalReport, cfg: RunConfig) -> None:
    workdir = _workdir(cfg)
    report_json = evalkit.render_report(report, "json")
    (workdir / "report.json").write_text(report_json, encoding="utf-8", newline="\n")
    (workdir / "report.md").write_text(
        evalkit.render_report(report, "markdown-table"), encoding="utf-8", newline="\n"
    )
    if cfg.report_out:
        Path(cfg.report_out).write_text(report_json, encoding="utf-8", newline="\n")


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    rows = [_read_row(path) for path in args.rows]
    report = evalkit.compare(rows, config=cfg.snapshot())
    _write_report(report, cfg)
    log.info("compared %d rows -> %s", len(rows), _workdir(cfg) / "report.json")
    return 0


def _make_backend(cfg: RunConfig):
    if cfg.backend_kind == "external":
        return ExternalBackend(cfg.backend_command, cfg.backend_workdir,
                               threshold=cfg.threshold)
    return NativeBackend(cfg.hyperparams, cfg.threshold)


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    workdir = _workdir(cfg)
    display = DISPLAY_NAMES.get(cfg.dst_lang, cfg.dst_lang)

    store = corpuslib.ingest(_require_corpus_in(cfg), strict=cfg.strict)
    log.info("ingested %d records", len(store))

    real_dst = corpuslib.store_of(
        corpuslib.select(store, {"language": cfg.dst_lang, "origin": "real"})
    )
    if len(real_dst) == 0:
        raise XlrError(f"no real {cfg.dst_lang} records to split for evaluation")
    split_store = corpuslib.split(real_dst, cfg.test_fraction,
                                  derive_seed(cfg.seed, "corpus.split"))
    by_id = {r.id: r for r in split_store.records}
    merged = corpuslib.store_of(by_id.get(r.id, r) for r in store.records)
    corpuslib.export(merged, {}, workdir / "corpus.jsonl")

    provider = translator.make_provider(cfg.provider, cfg.src_lang, cfg.dst_lang)
    synthetic, stats = translator.translate_corpus(
        merged, provider, cfg.src_lang, cfg.dst_lang,
        retry=_jitter_seeded_retry(cfg),
        max_concurrency=cfg.provider.max_concurrency,
    )
    log.info("translate: %s", translator.export_stats(stats))

    kept, rejected = validator.filter_corpus(
        synthetic, validator.Ruleset(denylist=cfg.denylist)
    )
    corpuslib.export(corpuslib.store_of(kept), {}, workdir / "synthetic.jsonl")
    validator.write_rejection_report(rejected, workdir / "rejected.jsonl")
    log.info("validate: kept %d, rejected %d", len(kept), len(rejected))

    train_real = corpuslib.select(merged, {"language": cfg.dst_lang,
                                           "origin": "real", "split": "train"})
    test = corpuslib.select(merged, {"language": cfg.dst_lang,
                                     "origin": "real", "split": "test"})
    if not train_real or not test or not kept:
        raise XlrError(
            f"pipeline needs non-empty training and test sets "
            f"(real train {len(train_real)}, test {len(test)}, synthetic {len(kept)})"
        )
    fingerprint = evalkit.test_set_fingerprint(test)

    rows = []
    backend = _make_backend(cfg)
    try:
        for name, train_set, seed_label in (
            (f"Real {display}", train_real, "model.train.real"),
            (f"Synthetic {display}", kept, "model.train.synthetic"),
        ):
            seed = derive_seed(cfg.seed, seed_label)
            backend.train(train_set, seed)
            if isinstance(backend, NativeBackend):
                suffix = "real" if seed_label.endswith("real") else "synthetic"
                save_model(backend.model, workdir / f"model_{suffix}.bin")
            cm, m = evalkit.evaluate(backend, test)
            rows.append(evalkit.EvalRow(name, cm, m, fingerprint))
            log.info("%s: trained on %d records, accuracy %.3f f1 %.3f",
                     name, len(train_set), m.accuracy, m.f1)
    finally:
        if isinstance(backend, ExternalBackend):
            backend.shutdown()

    report = evalkit.compare(rows, fingerprint, config=cfg.snapshot())
    _write_report(report, cfg)
    log.info("report -> %s", workdir / "report.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlr",
        description="Cross-language code-review data pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_langs: bool = False) -> None:
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--in", dest="corpus_in", help="input corpus JSONL")
        p.add_argument("--workdir", help="output directory (default .)")
        p.add_argument("--seed", type=int, help="master seed")
        if with_langs:
            p.add_argument("--src", help="source language tag")
            p.add_argument("--dst", help="destination language tag")

    p = sub.add_parser("ingest", help="load and normalize a corpus")
    common(p)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None,
                   help="reject records whose diff does not apply")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="assign stratified train/test splits")
    common(p)
    p.add_argument("--test-frac", dest="test_frac", type=float,
                   help="test fraction in [0, 1]")
    p.add_argument("--overwrite", action="store_true",
                   help="re-split records that already have a split")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("translate", help="translate source-language records")
    common(p, with_langs=True)
    p.add_argument("--provider", choices=("mock", "http"), help="provider kind")
    p.add_argument("--endpoint", help="http provider endpoint")
    p.add_argument("--corruption-rate", dest="corruption_rate", type=float,
                   help="mock corruption rate in [0, 1]")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("validate", help="filter synthetic records lexically")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train the native classifier")
    common(p)
    p.add_argument("--language", help="filter training records by language")
    p.add_argument("--origin", choices=("real", "synthetic"))
    p.add_argument("--split", choices=("train", "test", "null"))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on the real test split")
    common(p)
    p.add_argument("--model", help="model file (default workdir/model.bin)")
    p.add_argument("--name", default="model", help="row name for reports")
    p.add_argument("--language", help="filter test records by language")
    p.add_argument("--origin", choices=("real", "synthetic"))
    p.add_argument("--split", choices=("train", "test", "null"))
    p.add_argument("--out", help="row output file (default workdir/eval.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="combine evaluation rows into a report")
    common(p)
    p.add_argument("--rows", nargs="+", required=True, help="eval row JSON files")
    p.add_argument("--report-out", dest="report_out", help="extra report.json copy")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pipeline", help="run the whole flow")
    common(p, with_langs=True)
    p.add_argument("--test-frac", dest="test_frac", type=float)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--corruption-rate", dest="corruption_rate", type=float)
    p.add_argument("--report-out", dest="report_out")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except XlrError as exc:
        print(f"xlr {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

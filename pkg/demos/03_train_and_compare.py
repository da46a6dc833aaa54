#!/usr/bin/env python3
# The desk-scale experiment: train one classifier on real target-language
# changes and one on translated synthetic changes, evaluate both on the same
# held-out real test set, and render the comparison table.

from xlr import corpus, evalkit, fixtures, translator, validator
from xlr.model import Hyperparams, NativeBackend

store = fixtures.planted_corpus(n_src=120, n_real=60, seed=23)

# Real target-language records get the stratified train/test split.
real = corpus.store_of(corpus.select(store, {"language": "cpp", "origin": "real"}))
real = corpus.split(real, test_fraction=0.2, seed=9)
train_real = corpus.select(real, {"split": "train"})
test = corpus.select(real, {"split": "test"})
print(f"real: {len(train_real)} train / {len(test)} test")

# Synthetic training data comes from translating the java records.
synthetic, stats = translator.translate_corpus(
    store, translator.MockProvider(), "java", "cpp", max_concurrency=4)
train_synthetic, _ = validator.filter_corpus(synthetic)
print(f"synthetic: {len(train_synthetic)} records after validation")

hp = Hyperparams(hash_dim=2 ** 16)
fingerprint = evalkit.test_set_fingerprint(test)
rows = []
for name, records, seed in (("Real C++", train_real, 1),
                            ("Synthetic C++", train_synthetic, 2)):
    backend = NativeBackend(hp)
    backend.train(records, seed=seed)
    cm, metrics = evalkit.evaluate(backend, test)
    rows.append(evalkit.EvalRow(name, cm, metrics, fingerprint))
    print(f"{name}: tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}")

report = evalkit.compare(rows)
print()
print(evalkit.render_report(report, "markdown-table"))
print("f1 delta (synthetic - real):", report.deltas[1]["f1"])

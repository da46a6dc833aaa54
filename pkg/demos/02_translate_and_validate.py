#!/usr/bin/env python3
# Translating labeled java changes to cpp with the mock provider, then
# filtering the output with the lexical validator.

from xlr import fixtures, translator, validator

store = fixtures.planted_corpus(n_src=8, n_real=0, seed=11)
record = store.records[0]
print("source record", record.id, "label", record.label)
print(record.old_code)

# The prompt embeds the code and diff in OLD/DIFF fenced blocks; the provider
# must reply in the same shape.
prompt = translator.build_prompt(record, "cpp", translator.DEFAULT_TEMPLATE)
print("--- prompt head ---")
print("\n".join(prompt.splitlines()[:6]))

# corruption_rate=0.5 makes the mock drop the last "}" from about half the
# outputs (seeded per record id), which is what the validator is for.
provider = translator.MockProvider(corruption_rate=0.5)
synthetic, stats = translator.translate_corpus(store, provider, "java", "cpp")
print("stats:", translator.export_stats(stats))
print("labels carried:", [(r.source_id, r.label) for r in synthetic[:4]])

kept, rejected = validator.filter_corpus(synthetic)
print(f"validator kept {len(kept)}, rejected {len(rejected)}")
for record, verdict in rejected[:3]:
    violation = verdict.violations[0]
    print(f"  {record.id}: {violation.rule} at line {violation.line}: {violation.detail}")

# Leakage detection: untranslated source fragments are caught by the denylist.
leaky = synthetic[0]
leaky = type(leaky)(
    id="leaky", language="cpp", old_code=leaky.old_code,
    diff='@@ -1,0 +2,1 @@\n+        System.out.print("oops");\n',
    label=1, origin="synthetic", source_id=leaky.source_id,
)
verdict = validator.validate_record(leaky)
print("leaky record valid?", verdict.valid, "->", verdict.violations[0].rule)

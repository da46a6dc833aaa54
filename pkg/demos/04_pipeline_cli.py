#!/usr/bin/env python3
# The same flow end to end through the CLI, on the bundled fixture corpus.
# Equivalent shell command:
#   xlr pipeline --config fixtures/pipeline_config.json --workdir runs/demo

import json
import tempfile
from pathlib import Path

from xlr import cli

root = Path(__file__).resolve().parent.parent
workdir = Path(tempfile.mkdtemp(prefix="xlr-demo-"))

code = cli.main([
    "pipeline",
    "--config", str(root / "fixtures" / "pipeline_config.json"),
    "--in", str(root / "fixtures" / "fixture_corpus.jsonl"),
    "--workdir", str(workdir),
])
assert code == 0

print("artifacts:")
for path in sorted(workdir.iterdir()):
    print(f"  {path.name} ({path.stat().st_size} bytes)")

print()
print((workdir / "report.md").read_text(encoding="utf-8"))

report = json.loads((workdir / "report.json").read_text(encoding="utf-8"))
print("test set fingerprint:", report["fingerprint"][:16], "...")
print("rows evaluated on identical test sets:", [r["name"] for r in report["rows"]])

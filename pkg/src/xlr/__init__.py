"""Cross-language code-review data pipeline.

Submodules:
    corpus      labeled code-change corpora (JSONL ingest/split/select/export)
    diffkit     unified diff parse/apply/render
    translator  LLM-backed translation of changes between languages
    validator   lexical validation of generated code
    model       hashed n-gram logistic classifier plus backend protocol client
    evalkit     confusion/metrics and comparison reports
    fixtures    deterministic planted-signal corpora for tests and demos
    cli         command-line orchestration of the full flow
"""

from .errors import XlrError

__all__ = ["XlrError"]
__version__ = "0.1.0"

"""Translate labeled code changes between languages via an LLM provider.

A provider receives one prompt per record and must reply with two fenced
blocks: one tagged OLD holding the full translated before-code and one
tagged DIFF holding a unified diff that applies to it. The review label is
copied verbatim from the source record onto every synthetic record.

The mock provider is a deterministic offline stand-in: a word-boundary token
substitution table for java -> cpp, plus an optional seeded corruption that
drops the last "}" from the post-change code so the validator has something
to catch.
"""

from __future__ import annotations

import json
import logging
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import requests

from . import diffkit
from .corpus import ChangeRecord
from .errors import XlrError

log = logging.getLogger(__name__)


class TemplateError(XlrError):
    pass


class ReplyFormatError(XlrError):
    pass


class InconsistentReplyError(XlrError):
    pass


class TranslationError(XlrError):
    pass


class ProviderError(XlrError):
    pass


class ProviderTransientError(ProviderError):
    """Timeouts, 429, and 5xx: worth retrying."""


class ProviderPermanentError(ProviderError):
    """Anything else: fail fast."""


PLACEHOLDERS = ("src_lang", "dst_lang", "old_code", "diff")

_PLACEHOLDER_RE = re.compile(r"\{(src_lang|dst_lang|old_code|diff)\}")


@dataclass(frozen=True)
class PromptTemplate:
    text: str

    def validate(self) -> None:
        for name in PLACEHOLDERS:
            count = self.text.count("{" + name + "}")
            if count != 1:
                raise TemplateError(
                    f"template must contain {{{name}}} exactly once, found {count}"
                )


DEFAULT_TEMPLATE = PromptTemplate(
    "Translate the following {src_lang} code change into {dst_lang}.\n"
    "Produce a functionally equivalent change of the same significance and extent.\n"
    "Reply with exactly two fenced blocks: one tagged OLD holding the full\n"
    "translated before-code, and one tagged DIFF holding a unified diff that\n"
    "applies cleanly to that before-code.\n"
    "\n"
    "```OLD\n"
    "{old_code}```\n"
    "\n"
    "```DIFF\n"
    "{diff}```\n"
)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 0.5
    jitter_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_delay < 0:
            raise ValueError("base_delay must be >= 0")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    endpoint: str | None = None
    model: str = "mock-java-cpp"
    max_concurrency: int = 1
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout: float = 30.0
    corruption_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ValueError(f"provider kind must be mock or http, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http provider requires an endpoint")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must be in [0, 1]")


@dataclass
class TranslationStats:
    attempted: int = 0
    succeeded: int = 0
    provider_failed: int = 0
    inconsistent: int = 0


def build_prompt(record: ChangeRecord, dst_lang: str, template: PromptTemplate) -> str:
    """Substitute the four placeholders; old_code and diff appear verbatim."""
    template.validate()
    if record.language == dst_lang:
        raise TranslationError(
            f"record {record.id}: source language equals destination {dst_lang!r}"
        )
    values = {
        "src_lang": record.language,
        "dst_lang": dst_lang,
        "old_code": record.old_code,
        "diff": record.diff,
    }
    # Single-pass substitution so placeholder-looking text inside the code
    # never gets re-expanded.
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.text)


def parse_provider_reply(reply: str) -> tuple[str, str]:
    """Extract the OLD and DIFF fenced blocks from a reply.

    A block opens with a line "```OLD" or "```DIFF" and closes with a line
    "```"; surrounding prose is ignored. Block content comes back with every
    line newline-terminated. Missing or duplicate blocks are errors.
    """
    blocks: dict[str, list[str]] = {"OLD": [], "DIFF": []}
    lines = reply.split("\n")
    i = 0
    while i < len(lines):
        tag = lines[i].strip()
        if tag in ("```OLD", "```DIFF"):
            name = tag[3:]
            body: list[str] = []
            i += 1
            while i < len(lines) and lines[i].strip() != "```":
                body.append(lines[i])
                i += 1
            if i >= len(lines):
                raise ReplyFormatError(f"unclosed {name} block")
            blocks[name].append("".join(line + "\n" for line in body))
        i += 1
    for name in ("OLD", "DIFF"):
        if len(blocks[name]) == 0:
            raise ReplyFormatError(f"reply is missing the {name} block")
        if len(blocks[name]) > 1:
            raise ReplyFormatError(f"reply has {len(blocks[name])} {name} blocks, expected 1")
    return blocks["OLD"][0], blocks["DIFF"][0]


# Longest match first; applied only at word boundaries.
MOCK_SUBSTITUTIONS = (
    ("System.out.println", "std::cout <<"),
    ("ArrayList", "std::vector"),
    ("boolean", "bool"),
    ("String", "std::string"),
    ("final", "const"),
    ("null", "nullptr"),
)

_MOCK_TABLE = dict(MOCK_SUBSTITUTIONS)
_MOCK_RE = re.compile(
    r"(?<![A-Za-z0-9_])(" + "|".join(re.escape(k) for k, _ in MOCK_SUBSTITUTIONS) + r")(?![A-Za-z0-9_])"
)


def mock_corrupts(record_id: str, corruption_rate: float) -> bool:
    """Seeded per record id; True when the mock should corrupt this record."""
    if corruption_rate <= 0.0:
        return False
    return random.Random(f"corrupt:{record_id}").random() < corruption_rate


def mock_translate(text: str, corrupt: bool = False) -> str:
    """Apply the fixed java->cpp token table; optionally drop the last "}"."""
    out = _MOCK_RE.sub(lambda m: _MOCK_TABLE[m.group(1)], text)
    if corrupt:
        idx = out.rfind("}")
        if idx >= 0:
            out = out[:idx] + out[idx + 1:]
    return out


class MockProvider:
    """Deterministic offline provider for the java -> cpp pair.

    Reads the source code and diff back out of the prompt's OLD/DIFF fenced
    blocks, so it requires a template that embeds them (the default does).
    """

    def __init__(self, src_lang: str = "java", dst_lang: str = "cpp",
                 corruption_rate: float = 0.0):
        if (src_lang, dst_lang) != ("java", "cpp"):
            raise ProviderPermanentError(
                f"mock provider supports java -> cpp only, not {src_lang} -> {dst_lang}"
            )
        self.corruption_rate = corruption_rate

    def complete(self, prompt: str, record_id: str) -> str:
        old_src, diff_src = parse_provider_reply(prompt)
        t_old = mock_translate(old_src)
        src_diff = diffkit.parse_unified_diff(diff_src)
        t_diff = diffkit.Diff(tuple(
            replace(hunk, lines=tuple(
                replace(ln, text=mock_translate(ln.text)) for ln in hunk.lines
            ))
            for hunk in src_diff.hunks
        ))
        if mock_corrupts(record_id, self.corruption_rate):
            t_new = diffkit.apply(t_old, t_diff)
            corrupted = mock_translate(t_new, corrupt=True)
            reply_diff = diffkit.render(diffkit.diff_texts(t_old, corrupted))
        else:
            reply_diff = diffkit.render(t_diff)
        return (
            "Here is the translated change.\n"
            "\n"
            "```OLD\n" + t_old + "```\n"
            "\n"
            "```DIFF\n" + reply_diff + "```\n"
        )


class HttpProvider:
    """OpenAI-compatible chat-completions provider."""

    def __init__(self, endpoint: str, model: str, timeout: float = 30.0):
        self.url = endpoint.rstrip("/") + "/v1/chat/completions"
        self.model = model
        self.timeout = timeout

    def complete(self, prompt: str, record_id: str) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get("XLR_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise ProviderTransientError(f"request failed: {exc}") from None
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderTransientError(f"HTTP {resp.status_code}")
        if not 200 <= resp.status_code < 300:
            raise ProviderPermanentError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderPermanentError(f"malformed completion envelope: {exc}") from None


def make_provider(config: ProviderConfig, src_lang: str, dst_lang: str):
    if config.kind == "mock":
        return MockProvider(src_lang, dst_lang, config.corruption_rate)
    return HttpProvider(config.endpoint, config.model, config.timeout)


def _complete_with_retry(provider, prompt: str, record_id: str, retry: RetryPolicy) -> str:
    last: Exception | None = None
    for attempt in range(1, retry.max_attempts + 1):
        try:
            return provider.complete(prompt, record_id)
        except ProviderTransientError as exc:
            last = exc
            if attempt == retry.max_attempts:
                break
            jitter = random.Random(
                f"{retry.jitter_seed}:{record_id}:{attempt}"
            ).uniform(0.0, retry.base_delay)
            delay = retry.base_delay * 2 ** (attempt - 1) + jitter
            log.debug("record %s attempt %d failed (%s); retrying in %.2fs",
                      record_id, attempt, exc, delay)
            if delay > 0:
                time.sleep(delay)
    raise ProviderError(
        f"record {record_id}: provider failed after {retry.max_attempts} attempts: {last}"
    )


def translate_record(
    record: ChangeRecord,
    provider,
    dst_lang: str,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    retry: RetryPolicy = RetryPolicy(),
) -> ChangeRecord:
    """Translate one record, carrying its label onto the synthetic output.

    Raises ProviderError when retries are exhausted, ReplyFormatError when
    the reply lacks the OLD/DIFF blocks, and InconsistentReplyError when the
    returned diff does not parse and apply to the returned before-code.
    """
    prompt = build_prompt(record, dst_lang, template)
    reply = _complete_with_retry(provider, prompt, record.id, retry)
    new_old, new_diff = parse_provider_reply(reply)
    try:
        diffkit.apply(new_old, diffkit.parse_unified_diff(new_diff))
    except (diffkit.DiffParseError, diffkit.DiffApplyError) as exc:
        raise InconsistentReplyError(
            f"record {record.id}: returned diff does not apply: {exc}"
        ) from None
    return ChangeRecord(
        id=f"{record.id}::syn::{dst_lang}",
        language=dst_lang,
        old_code=new_old,
        diff=new_diff,
        label=record.label,
        origin="synthetic",
        source_id=record.id,
        split=None,
    )


def translate_corpus(
    records,
    provider,
    src_lang: str,
    dst_lang: str,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    retry: RetryPolicy = RetryPolicy(),
    max_concurrency: int = 1,
) -> tuple[list[ChangeRecord], TranslationStats]:
    """Translate every record whose language is src_lang.

    Up to max_concurrency requests run in flight; output order always equals
    source order. Per-record failures are counted, never fatal: transport
    failures under provider_failed, unusable replies under inconsistent.
    """
    if src_lang == dst_lang:
        raise TranslationError(f"source language equals destination {dst_lang!r}")
    if hasattr(records, "records"):
        records = records.records
    sources = [r for r in records if r.language == src_lang]
    stats = TranslationStats(attempted=len(sources))
    out: list[ChangeRecord] = []
    if not sources:
        return out, stats

    def work(record: ChangeRecord) -> ChangeRecord:
        return translate_record(record, provider, dst_lang, template, retry)

    with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
        futures = [pool.submit(work, record) for record in sources]
        for record, future in zip(sources, futures):
            try:
                out.append(future.result())
                stats.succeeded += 1
            except (ReplyFormatError, InconsistentReplyError) as exc:
                stats.inconsistent += 1
                log.warning("record %s dropped: %s", record.id, exc)
            except ProviderError as exc:
                stats.provider_failed += 1
                log.warning("record %s failed: %s", record.id, exc)
    return out, stats


def export_stats(stats: TranslationStats) -> str:
    return json.dumps(stats.__dict__, sort_keys=True)

"""Review-needed classifier: hashed n-gram features plus logistic SGD.

Features come from the changed lines only. Each added-line token gets a "+"
prefix and each removed-line token a "-" prefix; unigrams and within-line
adjacent bigrams are hashed with 64-bit FNV-1a into hash_dim buckets
(collisions are accepted as usual for feature hashing) and the count vector
is L2-normalized. Training is plain SGD, batch size 1, with per-epoch
seeded shuffling, so results are bit-reproducible for a fixed seed.

External backends are child processes speaking line-delimited JSON over
stdin/stdout; see ExternalBackend for the wire contract.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import random
import re
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import diffkit
from .corpus import ChangeRecord, to_json_obj
from .errors import XlrError

log = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")


class ModelError(XlrError):
    pass


class BackendProtocolError(XlrError):
    pass


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    epochs: int = 5
    l2: float = 1e-4
    hash_dim: int = 2 ** 18

    def __post_init__(self) -> None:
        if self.hash_dim < 1 or self.hash_dim & (self.hash_dim - 1):
            raise ModelError(f"hash_dim must be a power of two, got {self.hash_dim}")
        if self.epochs < 0:
            raise ModelError("epochs must be >= 0")


@dataclass
class ModelWeights:
    weights: np.ndarray
    bias: float
    hyperparams: Hyperparams
    seed: int
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if len(self.weights) != self.hyperparams.hash_dim:
            raise ModelError("weights length must equal hash_dim")
        if not 0.0 < self.threshold < 1.0:
            raise ModelError("threshold must be in (0, 1)")


def zero_model(hyperparams: Hyperparams, seed: int = 0, threshold: float = 0.5) -> ModelWeights:
    return ModelWeights(
        weights=np.zeros(hyperparams.hash_dim, dtype=np.float64),
        bias=0.0,
        hyperparams=hyperparams,
        seed=seed,
        threshold=threshold,
    )


def featurize(record: ChangeRecord, hash_dim: int) -> dict[int, float]:
    """Hash the changed-line n-grams of a record into an L2-normalized sparse vector."""
    diff = diffkit.parse_unified_diff(record.diff)
    added, removed = diffkit.changed_lines(diff)
    counts: dict[str, int] = {}
    for prefix, lines in (("+", added), ("-", removed)):
        for line in lines:
            toks = [prefix + t for t in _TOKEN_RE.findall(line)]
            for tok in toks:
                counts[tok] = counts.get(tok, 0) + 1
            for a, b in zip(toks, toks[1:]):
                gram = a + " " + b
                counts[gram] = counts.get(gram, 0) + 1
    if not counts:
        return {}
    vec: dict[int, float] = {}
    mask = hash_dim - 1
    for feat, count in counts.items():
        idx = fnv1a64(feat.encode("utf-8")) & mask
        vec[idx] = vec.get(idx, 0.0) + float(count)
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return {i: v / norm for i, v in vec.items()}


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _dot(weights: np.ndarray, x: Mapping[int, float], bias: float) -> float:
    return float(sum(weights[i] * v for i, v in x.items()) + bias)


def loss_and_grad(
    model: ModelWeights, batch: Sequence[tuple[Mapping[int, float], int]]
) -> tuple[float, tuple[np.ndarray, float]]:
    """Mean regularized logistic loss over a batch and its exact gradient.

    loss = mean(-[y ln p + (1-y) ln(1-p)]) + (l2/2) * ||w||^2 with
    p = sigmoid(w.x + b); the bias is not regularized.
    """
    if not batch:
        raise ModelError("loss_and_grad needs a non-empty batch")
    w = model.weights
    l2 = model.hyperparams.l2
    grad_w = np.zeros_like(w)
    grad_b = 0.0
    loss_sum = 0.0
    for x, y in batch:
        z = _dot(w, x, model.bias)
        # -[y ln p + (1-y) ln(1-p)] == log(1 + e^z) - y z, computed stably
        loss_sum += float(np.logaddexp(0.0, z)) - y * z
        d = _sigmoid(z) - y
        for i, v in x.items():
            grad_w[i] += d * v
        grad_b += d
    n = len(batch)
    loss = loss_sum / n + 0.5 * l2 * float(np.dot(w, w))
    grad_w = grad_w / n + l2 * w
    grad_b = grad_b / n
    if not (math.isfinite(loss) and math.isfinite(grad_b) and np.isfinite(grad_w).all()):
        raise ModelError("non-finite loss or gradient")
    return loss, (grad_w, grad_b)


def train_native(
    train: Sequence[ChangeRecord],
    hyperparams: Hyperparams = Hyperparams(),
    seed: int = 0,
    threshold: float = 0.5,
) -> ModelWeights:
    """SGD training, batch size 1, epochs * len(train) updates, deterministic."""
    if not train:
        raise ModelError("training set is empty")
    labels = {r.label for r in train}
    if len(labels) < 2:
        log.warning("training set contains a single class (%s); model will be degenerate",
                    labels)
    hp = hyperparams
    feats = [(featurize(r, hp.hash_dim), r.label) for r in train]
    w = np.zeros(hp.hash_dim, dtype=np.float64)
    b = 0.0
    lr = hp.learning_rate
    rng = random.Random(seed)
    order = list(range(len(feats)))
    for epoch in range(hp.epochs):
        rng.shuffle(order)
        for j in order:
            x, y = feats[j]
            z = _dot(w, x, b)
            d = _sigmoid(z) - y
            if not math.isfinite(d):
                raise ModelError(f"non-finite update at epoch {epoch + 1}")
            # w <- w - lr * (d x + l2 w), applied as scale plus sparse update
            if hp.l2:
                w *= 1.0 - lr * hp.l2
            for i, v in x.items():
                w[i] -= lr * d * v
            b -= lr * d
        if not np.isfinite(w).all() or not math.isfinite(b):
            raise ModelError(
                f"non-finite weights after epoch {epoch + 1} "
                f"(lr={lr}, l2={hp.l2}); lower the learning rate"
            )
    return ModelWeights(weights=w, bias=b, hyperparams=hp, seed=seed, threshold=threshold)


def predict(model: ModelWeights, record: ChangeRecord) -> tuple[float, int]:
    """Probability that the change requires review, and the >= threshold decision."""
    x = featurize(record, model.hyperparams.hash_dim)
    p = _sigmoid(_dot(model.weights, x, model.bias))
    return p, 1 if p >= model.threshold else 0


def mean_loss(model: ModelWeights, records: Sequence[ChangeRecord]) -> float:
    feats = [(featurize(r, model.hyperparams.hash_dim), r.label) for r in records]
    loss, _ = loss_and_grad(model, feats)
    return loss


_MODEL_MAGIC = b"XLRMODEL1\n"


def save_model(model: ModelWeights, path: str | Path) -> None:
    """Deterministic binary format: magic, JSON header line, raw float64 weights."""
    header = {
        "bias": model.bias,
        "threshold": model.threshold,
        "seed": model.seed,
        "hyperparams": {
            "learning_rate": model.hyperparams.learning_rate,
            "epochs": model.hyperparams.epochs,
            "l2": model.hyperparams.l2,
            "hash_dim": model.hyperparams.hash_dim,
        },
    }
    with Path(path).open("wb") as handle:
        handle.write(_MODEL_MAGIC)
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        handle.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_model(path: str | Path) -> ModelWeights:
    with Path(path).open("rb") as handle:
        magic = handle.read(len(_MODEL_MAGIC))
        if magic != _MODEL_MAGIC:
            raise ModelError(f"{path} is not a model file")
        header = json.loads(handle.readline().decode("utf-8"))
        hp = Hyperparams(**header["hyperparams"])
        raw = handle.read(8 * hp.hash_dim)
        if len(raw) != 8 * hp.hash_dim:
            raise ModelError(f"{path}: truncated weight data")
        weights = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return ModelWeights(
        weights=weights,
        bias=header["bias"],
        hyperparams=hp,
        seed=header["seed"],
        threshold=header["threshold"],
    )


class NativeBackend:
    """Backend facade over train_native/predict; same contracts, held state."""

    kind = "native"

    def __init__(self, hyperparams: Hyperparams = Hyperparams(), threshold: float = 0.5):
        self.hyperparams = hyperparams
        self.threshold = threshold
        self.model: ModelWeights | None = None

    def train(self, records: Sequence[ChangeRecord], seed: int = 0) -> None:
        self.model = train_native(records, self.hyperparams, seed, self.threshold)

    def predict_probabilities(self, records: Sequence[ChangeRecord]) -> list[float]:
        if self.model is None:
            raise ModelError("predict before train")
        return [predict(self.model, r)[0] for r in records]


class ExternalBackend:
    """Client for a child-process backend.

    Wire contract, one JSON object per line on the child's stdin/stdout:
        request  {"id": n, "cmd": "handshake" | "train" | "predict" | "shutdown", ...}
        reply    {"id": n, "ok": true, "result": ...} | {"id": n, "ok": false, "error": str}
    "train" carries {"records": [...], "params": {...}}; "predict" carries
    {"records": [...]} and must return {"probabilities": [...]} aligned with
    the input order, every value in [0, 1]. The handshake result must report
    protocol 1 with train and predict capabilities. Any protocol violation
    kills the child.
    """

    kind = "external"

    def __init__(self, command: Sequence[str], cwd: str | None = None,
                 timeout: float = 60.0, threshold: float = 0.5):
        if not command:
            raise BackendProtocolError("external backend needs a non-empty command")
        self.command = list(command)
        self.cwd = cwd
        self.timeout = timeout
        self.threshold = threshold
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._next_id = 0

    def _start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                cwd=self.cwd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendProtocolError(f"cannot start backend {self.command}: {exc}") from None

        def pump(stream, sink):
            for line in stream:
                sink.put(line)
            sink.put(None)

        threading.Thread(
            target=pump, args=(self._proc.stdout, self._lines), daemon=True
        ).start()
        reply = self._request("handshake")
        if not (isinstance(reply, dict) and reply.get("protocol") == 1
                and set(reply.get("capabilities", ())) >= {"train", "predict"}):
            self._kill()
            raise BackendProtocolError(f"bad handshake result: {reply!r}")

    def _kill(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def _request(self, cmd: str, **payload) -> object:
        assert self._proc is not None
        self._next_id += 1
        req_id = self._next_id
        message = {"id": req_id, "cmd": cmd, **payload}
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            self._kill()
            raise BackendProtocolError(f"backend write failed: {exc}") from None
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._kill()
            raise BackendProtocolError(f"backend timed out after {self.timeout}s on {cmd!r}") from None
        if line is None:
            self._kill()
            raise BackendProtocolError(f"backend exited while handling {cmd!r}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            self._kill()
            raise BackendProtocolError(f"backend sent a malformed line: {line!r}") from None
        if not isinstance(reply, dict) or reply.get("id") != req_id:
            self._kill()
            raise BackendProtocolError(
                f"backend reply id mismatch: expected {req_id}, got {reply!r}"
            )
        if reply.get("ok") is not True:
            error = reply.get("error", "backend did not say why")
            raise BackendProtocolError(f"backend error on {cmd!r}: {error}")
        return reply.get("result")

    def train(self, records: Sequence[ChangeRecord], seed: int = 0,
              params: Mapping | None = None) -> None:
        self._start()
        merged = {"seed": seed, **(params or {})}
        self._request("train", records=[to_json_obj(r) for r in records], params=merged)

    def predict_probabilities(self, records: Sequence[ChangeRecord]) -> list[float]:
        self._start()
        result = self._request("predict", records=[to_json_obj(r) for r in records])
        if not isinstance(result, dict) or "probabilities" not in result:
            self._kill()
            raise BackendProtocolError(f"predict result missing probabilities: {result!r}")
        probs = result["probabilities"]
        if not isinstance(probs, list) or len(probs) != len(records):
            self._kill()
            raise BackendProtocolError(
                f"expected {len(records)} probabilities, got {probs!r}"
            )
        for p in probs:
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
                self._kill()
                raise BackendProtocolError(f"probability out of range: {p!r}")
        return [float(p) for p in probs]

    def shutdown(self) -> None:
        if self._proc is None:
            return
        try:
            self._request("shutdown")
        except BackendProtocolError:
            pass
        try:
            self._proc.wait(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            self._kill()
        self._proc = None

    def __enter__(self) -> "ExternalBackend":
        self._start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

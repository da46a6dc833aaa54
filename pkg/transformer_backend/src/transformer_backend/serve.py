"""Backend protocol server: line-delimited JSON over stdin/stdout.

Requests:  {"id": n, "cmd": "handshake" | "train" | "predict" | "shutdown", ...}
Replies:   {"id": n, "ok": true, "result": ...} | {"id": n, "ok": false, "error": str}

train carries {"records": [...], "params": {...}} (params documented in
classifier.DEFAULT_PARAMS); predict carries {"records": [...]} and returns
{"probabilities": [...]} aligned with the request order. Malformed requests
get ok:false and the session continues; predict is refused before a
successful train; shutdown replies then exits 0.
"""

from __future__ import annotations

import json
import sys

from .classifier import BackendError, ReviewClassifier

PROTOCOL_VERSION = 1
CAPABILITIES = ["train", "predict"]


def _write(stdout, reply: dict) -> None:
    stdout.write(json.dumps(reply) + "\n")
    stdout.flush()


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    classifier = ReviewClassifier()
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except ValueError as exc:
            _write(stdout, {"id": None, "ok": False, "error": f"malformed request: {exc}"})
            continue
        rid = request.get("id")
        cmd = request.get("cmd")
        try:
            if cmd == "handshake":
                result = {"protocol": PROTOCOL_VERSION, "capabilities": CAPABILITIES}
            elif cmd == "train":
                result = classifier.train(request.get("records") or [],
                                          request.get("params") or {})
            elif cmd == "predict":
                result = {"probabilities": classifier.predict(request.get("records") or [])}
            elif cmd == "shutdown":
                _write(stdout, {"id": rid, "ok": True, "result": {}})
                return 0
            else:
                raise BackendError(f"unknown cmd {cmd!r}")
        except (BackendError, KeyError, TypeError, ValueError) as exc:
            _write(stdout, {"id": rid, "ok": False, "error": str(exc)})
            continue
        except Exception as exc:  # unrecoverable model error
            _write(stdout, {"id": rid, "ok": False, "error": f"unrecoverable: {exc}"})
            return 1
        _write(stdout, {"id": rid, "ok": True, "result": result})
    return 0

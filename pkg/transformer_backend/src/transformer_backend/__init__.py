"""Transformer encoder backend for review-needed classification.

Runs as a child process speaking line-delimited JSON on stdin/stdout:
handshake, train, predict, shutdown. See serve.py for the wire contract and
classifier.py for the model.
"""

from .encoding import SEPARATOR, encode_record

__all__ = ["SEPARATOR", "encode_record"]
__version__ = "0.1.0"

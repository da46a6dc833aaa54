"""Shared exception hierarchy. The CLI maps any XlrError to exit code 1."""


class XlrError(Exception):
    pass

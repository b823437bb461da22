"""Exception hierarchy shared across the toolkit.

Plain ``ValueError`` is used for bad arguments to pure functions; the
classes here cover problems with external data and run configuration,
which the CLI maps onto its exit-code contract (1 usage, 2 data).
"""

from __future__ import annotations


class LingdivError(Exception):
    """Base class for toolkit-specific errors."""


class ParseError(LingdivError):
    """Malformed input file (bad JSONL line, bad CoNLL-U sentence, ...)."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix += str(source)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SchemaError(ParseError):
    """Record is syntactically valid but violates the expected schema."""


class StructureError(LingdivError):
    """Dependency structure is not a tree (cycle, disconnected, no root)."""


class ConfigError(LingdivError):
    """Invalid run configuration, reported before any work starts."""

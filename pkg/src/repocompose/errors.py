"""Exception types shared across the pipeline."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A composer spec, policy, or CLI flag combination is invalid."""


class SchemaError(ValueError):
    """An input record does not match the expected wire format.

    Carries the source line number when the record came from a JSONL file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExampleRejected(Exception):
    """Raised when packing drops an example (e.g. completion truncated to zero).

    The caller records a skip entry and continues; this never aborts a run.
    """

    def __init__(self, example_id: str, reason: str):
        self.example_id = example_id
        self.reason = reason
        super().__init__(f"{example_id}: {reason}")

"""Tokenizer interface, training-mode packing, and evaluation-mode truncation.

Packing independently tokenizes context and completion, truncates the context
from the left and the completion from the right, and enforces a minimum
context-to-completion ratio. Evaluation preparation concatenates first and
left-truncates to a parameterized length.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import ConfigurationError, ExampleRejected

FILE_SEP = "<file_sep>"


class Tokenizer(Protocol):
    """Lossless tokenizer contract required of any plugged implementation."""

    name: str
    vocab_size: int
    special_ids: frozenset[int]

    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: Sequence[int]) -> str: ...


class ByteTokenizer:
    """Reference byte-level tokenizer: one id per byte, plus ``<file_sep>``.

    Ids 0-255 are raw bytes and id 256 is the file separator, so every token
    count in the docs is machine-checkable without external assets. Arbitrary
    id slices stay decodable (and re-encode to the same ids) because decoding
    uses surrogateescape for bytes that fall mid-character.
    """

    name = "reference"
    vocab_size = 257
    special_ids = frozenset({256})

    _SEP_ID = 256

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        parts = text.split(FILE_SEP)
        for i, part in enumerate(parts):
            if i:
                ids.append(self._SEP_ID)
            ids.extend(part.encode("utf-8", "surrogateescape"))
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        out: list[str] = []
        buf = bytearray()
        for tok in ids:
            if tok == self._SEP_ID:
                if buf:
                    out.append(buf.decode("utf-8", "surrogateescape"))
                    buf.clear()
                out.append(FILE_SEP)
            elif 0 <= tok < 256:
                buf.append(tok)
            else:
                raise ValueError(f"token id {tok} out of range for {self.name}")
        if buf:
            out.append(buf.decode("utf-8", "surrogateescape"))
        return "".join(out)


def reference_tokenizer() -> ByteTokenizer:
    """Return the deterministic byte-level reference tokenizer."""
    return ByteTokenizer()


class SubprocessTokenizer:
    """Tokenizer backed by an external command speaking a JSON line protocol.

    The command is spawned once; each request is one line of JSON
    ``{"op": "encode", "text": ...}`` or ``{"op": "decode", "ids": [...]}``
    and the reply is ``{"ids": [...]}`` / ``{"text": ...}``. The command must
    answer ``{"op": "info"}`` with ``{"name", "vocab_size", "special_ids"}``.
    """

    def __init__(self, command: str):
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        info = self._request({"op": "info"})
        self.name = str(info["name"])
        self.vocab_size = int(info["vocab_size"])
        self.special_ids = frozenset(int(i) for i in info["special_ids"])

    def _request(self, payload: dict) -> dict:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        self._proc.stdin.write(json.dumps(payload) + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise ConfigurationError("external tokenizer closed its output stream")
        return json.loads(line)

    def encode(self, text: str) -> list[int]:
        return [int(i) for i in self._request({"op": "encode", "text": text})["ids"]]

    def decode(self, ids: Sequence[int]) -> str:
        return str(self._request({"op": "decode", "ids": list(ids)})["text"])

    def close(self) -> None:
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.wait(timeout=10)


def make_tokenizer(selector: str) -> Tokenizer:
    """Build a tokenizer from a CLI selector: ``reference`` or ``external:<cmd>``."""
    if selector == "reference":
        return reference_tokenizer()
    if selector.startswith("external:"):
        return SubprocessTokenizer(selector[len("external:"):])
    raise ConfigurationError(
        f"unknown tokenizer {selector!r}; expected 'reference' or 'external:<cmd>'"
    )


@dataclass(frozen=True)
class TruncationPolicy:
    """Training-mode length budget: totals, completion cap, and context ratio."""

    total_max: int = 16384
    completion_max: int = 4096
    min_ratio: int = 3

    def __post_init__(self):
        if self.completion_max > self.total_max:
            raise ConfigurationError("completion_max must be <= total_max")
        if self.total_max <= 0 or self.completion_max <= 0:
            raise ConfigurationError("length budgets must be positive")
        if self.min_ratio < 0:
            raise ConfigurationError("min_ratio must be >= 0")


@dataclass(frozen=True)
class PackedExample:
    """Token-id sequence plus loss mask for one training example."""

    example_id: str
    input_ids: tuple[int, ...]
    loss_mask: tuple[int, ...]
    context_len: int
    completion_len: int

    def __post_init__(self):
        if len(self.input_ids) != len(self.loss_mask):
            raise ValueError("input_ids and loss_mask must have equal length")
        if self.context_len + self.completion_len != len(self.input_ids):
            raise ValueError("context_len + completion_len must equal len(input_ids)")


def pack_training_example(
    context: str,
    completion: str,
    policy: TruncationPolicy,
    tokenizer: Tokenizer,
    example_id: str = "",
    mask_mode: str = "completion",
) -> PackedExample:
    """Pack one (context, completion) pair into ids and a loss mask.

    The completion is right-truncated to ``completion_max``, the context
    left-truncated into the remaining total budget. If the surviving context
    is shorter than ``min_ratio`` times the completion, the completion is
    truncated further to ``len(context) // min_ratio`` and the context
    re-extended into the freed budget. An empty context (file-level case)
    carries no ratio constraint. Raises :class:`ExampleRejected` when the
    completion truncates to zero tokens.
    """
    if mask_mode not in ("completion", "full"):
        raise ConfigurationError(f"unknown mask mode {mask_mode!r}")

    completion_ids = tokenizer.encode(completion)[: policy.completion_max]
    if not completion_ids:
        raise ExampleRejected(example_id, "completion truncated to zero tokens")

    context_ids_full = tokenizer.encode(context)
    context_budget = policy.total_max - len(completion_ids)
    context_ids = context_ids_full[-context_budget:] if context_budget else []

    if context_ids and policy.min_ratio and len(context_ids) < policy.min_ratio * len(completion_ids):
        completion_ids = completion_ids[: len(context_ids) // policy.min_ratio]
        if not completion_ids:
            raise ExampleRejected(example_id, "completion truncated to zero tokens by ratio rule")
        context_budget = policy.total_max - len(completion_ids)
        context_ids = context_ids_full[-context_budget:]

    input_ids = tuple(context_ids) + tuple(completion_ids)
    if mask_mode == "full":
        loss_mask = (1,) * len(input_ids)
    else:
        loss_mask = (0,) * len(context_ids) + (1,) * len(completion_ids)
    return PackedExample(
        example_id=example_id,
        input_ids=input_ids,
        loss_mask=loss_mask,
        context_len=len(context_ids),
        completion_len=len(completion_ids),
    )


def prepare_eval_sequence(
    context: str,
    completion_prefix: str,
    max_seq_len: int,
    tokenizer: Tokenizer,
) -> list[int]:
    """Tokenize context ++ completion prefix and left-truncate to ``max_seq_len``."""
    if max_seq_len < 1:
        raise ConfigurationError("max_seq_len must be >= 1")
    ids = tokenizer.encode(context + completion_prefix)
    return ids[-max_seq_len:]

"""Streaming reader for packed datasets (JSONL or binary) plus run manifests.

The client is a pure adapter: read-only, stateless between iterations, and
strict about the invariants a training loop relies on. Every record must
carry parallel ``input_ids`` / ``loss_mask`` sequences whose mask is a block
of zeros followed by a block of ones covering exactly the completion tokens.
Shuffling and collation stay the trainer's responsibility.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

PACKED_MAGIC = b"RCPK\x01"


class DatasetError(ValueError):
    """A record violates the packed-dataset schema.

    ``position`` is the 1-based line number (JSONL) or record index (binary)
    of the offending record.
    """

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"record {position}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PackedRecord:
    """One validated training example."""

    example_id: str
    input_ids: tuple[int, ...]
    loss_mask: tuple[int, ...]
    context_len: int
    completion_len: int
    tokenizer: str


@dataclass
class DatasetHandle:
    """An opened packed dataset; iteration is restartable and order-stable."""

    path: Path
    format: str  # "jsonl" | "binary"
    tokenizer: str
    schema_version: str
    manifest: dict | None
    _count: int | None = None

    @property
    def record_count(self) -> int:
        """Record count from the manifest, else counted on the first full pass."""
        if self._count is None:
            n = 0
            for n, _ in enumerate(_raw_records(self.path, self.format), start=1):
                pass
            self._count = n
        return self._count


def _validate(raw: dict, position: int) -> PackedRecord:
    for field, types in (
        ("example_id", str),
        ("input_ids", list),
        ("loss_mask", list),
        ("context_len", int),
        ("completion_len", int),
        ("tokenizer", str),
    ):
        if field not in raw:
            raise DatasetError(f"missing field {field!r}", position)
        if not isinstance(raw[field], types):
            raise DatasetError(
                f"field {field!r} has type {type(raw[field]).__name__}", position
            )
    ids = raw["input_ids"]
    mask = raw["loss_mask"]
    for value in ids:
        if type(value) is not int or value < 0:
            raise DatasetError(f"input_ids contains non-token value {value!r}", position)
    if len(ids) != len(mask):
        raise DatasetError(
            f"len(input_ids)={len(ids)} != len(loss_mask)={len(mask)}", position
        )
    if raw["context_len"] + raw["completion_len"] != len(ids):
        raise DatasetError("context_len + completion_len != len(input_ids)", position)
    ones = sum(1 for bit in mask if bit == 1)
    if any(bit not in (0, 1) for bit in mask):
        raise DatasetError("loss_mask contains values other than 0/1", position)
    if mask[len(mask) - ones :] != [1] * ones or mask[: len(mask) - ones] != [0] * (len(mask) - ones):
        raise DatasetError("loss_mask is not a contiguous suffix of ones", position)
    if ones != raw["completion_len"]:
        raise DatasetError("loss_mask ones do not cover the completion suffix", position)
    return PackedRecord(
        example_id=raw["example_id"],
        input_ids=tuple(ids),
        loss_mask=tuple(mask),
        context_len=raw["context_len"],
        completion_len=raw["completion_len"],
        tokenizer=raw["tokenizer"],
    )


def _raw_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8", errors="surrogateescape") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(raw, dict):
                raise DatasetError("record is not a JSON object", lineno)
            yield lineno, raw


def _raw_binary(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, "rb") as handle:
        if handle.read(len(PACKED_MAGIC)) != PACKED_MAGIC:
            raise DatasetError(f"bad magic; not a packed binary file: {path}")
        index = 0

        def take(n: int) -> bytes:
            data = handle.read(n)
            if len(data) != n:
                raise DatasetError("truncated record", index + 1)
            return data

        while True:
            head = handle.read(4)
            if not head:
                return
            index += 1
            if len(head) != 4:
                raise DatasetError("truncated record", index)
            example_id = take(struct.unpack("<I", head)[0]).decode("utf-8", "surrogateescape")
            (n_ids,) = struct.unpack("<I", take(4))
            input_ids = list(struct.unpack(f"<{n_ids}I", take(4 * n_ids))) if n_ids else []
            (n_mask,) = struct.unpack("<I", take(4))
            loss_mask = list(take(n_mask))
            context_len, completion_len = struct.unpack("<II", take(8))
            tokenizer = take(struct.unpack("<I", take(4))[0]).decode("utf-8")
            yield index, {
                "example_id": example_id,
                "input_ids": input_ids,
                "loss_mask": loss_mask,
                "context_len": context_len,
                "completion_len": completion_len,
                "tokenizer": tokenizer,
            }


def _detect_format(path: Path) -> str:
    with open(path, "rb") as handle:
        return "binary" if handle.read(len(PACKED_MAGIC)) == PACKED_MAGIC else "jsonl"


def _raw_records(path: Path, fmt: str) -> Iterator[tuple[int, dict]]:
    return _raw_binary(path) if fmt == "binary" else _raw_jsonl(path)


def read_manifest(path: str | Path) -> dict | None:
    manifest = Path(str(path) + ".manifest.json")
    if not manifest.exists():
        return None
    with open(manifest, "r", encoding="utf-8") as handle:
        return json.load(handle)


def open_dataset(path: str | Path) -> DatasetHandle:
    """Open a packed dataset and eagerly validate its first record.

    The record count comes from the run manifest when one sits next to the
    file; otherwise it is counted on the first full pass. Remaining records
    are validated lazily during iteration.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    fmt = _detect_format(path)
    first: PackedRecord | None = None
    for position, raw in _raw_records(path, fmt):
        first = _validate(raw, position)
        break

    manifest = read_manifest(path)
    count: int | None = None
    tokenizer = first.tokenizer if first else ""
    version = "1"
    if manifest is not None:
        counts = manifest.get("counts", {})
        if isinstance(counts.get("examples"), int):
            count = counts["examples"]
        tokenizer = counts.get("tokenizer", tokenizer)
        version = str(manifest.get("version", version))
    if first is None:
        count = 0 if count is None else count
    return DatasetHandle(
        path=path,
        format=fmt,
        tokenizer=tokenizer,
        schema_version=version,
        manifest=manifest,
        _count=count,
    )


def records(handle: DatasetHandle) -> Iterator[PackedRecord]:
    """Validated records in file order."""
    for position, raw in _raw_records(handle.path, handle.format):
        yield _validate(raw, position)


def iterate(
    handle: DatasetHandle, batch_size: int, drop_last: bool = False
) -> Iterator[list[PackedRecord]]:
    """Yield records grouped into batches, preserving file order.

    With ``drop_last`` the final short batch is omitted. Validation runs per
    record, so a corrupt mid-file record stops iteration with its position.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    batch: list[PackedRecord] = []
    for record in records(handle):
        batch.append(record)
        if len(batch) == batch_size:
            yield batch
            batch = []
    if batch and not drop_last:
        yield batch


def total_tokens(handle: DatasetHandle) -> int:
    """Sum of input_ids lengths across the dataset."""
    return sum(len(record.input_ids) for record in records(handle))

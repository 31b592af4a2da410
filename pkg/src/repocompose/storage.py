"""Wire formats: JSONL streaming, run manifests, and the binary packed format.

All JSONL writers emit ASCII-safe lines (non-ASCII and surrogate escapes are
\\u-encoded) so outputs survive any locale, and readers report the offending
line number on schema violations.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Iterator

from . import __version__
from .errors import SchemaError
from .evaluation import EvalItem, categorize_line
from .filtering import CommitRecord
from .pysurface import declared_identifiers
from .model import (
    CompletionTarget,
    FileEntry,
    LineCategory,
    RepositorySnapshot,
    normalize_path,
)
from .tokenization import PackedExample

PACKED_MAGIC = b"RCPK\x01"


def dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=True, separators=(",", ":")) + "\n"


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs; malformed lines raise SchemaError."""
    with open(path, "r", encoding="utf-8", errors="surrogateescape") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise SchemaError("record is not a JSON object", line=lineno)
            yield lineno, record


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", errors="surrogateescape") as handle:
        for row in rows:
            handle.write(dump_line(row))
            count += 1
    return count


def _require(record: dict, key: str, types, lineno: int | None):
    if key not in record:
        raise SchemaError(f"missing field {key!r}", line=lineno)
    value = record[key]
    if not isinstance(value, types):
        raise SchemaError(
            f"field {key!r} has type {type(value).__name__}", line=lineno
        )
    return value


def _parse_file_list(record: dict, key: str, lineno: int | None) -> list[FileEntry]:
    raw = _require(record, key, list, lineno)
    entries = []
    for item in raw:
        if not isinstance(item, dict):
            raise SchemaError(f"{key} entries must be objects", line=lineno)
        path = _require(item, "path", str, lineno)
        content = _require(item, "content", str, lineno)
        try:
            entries.append(FileEntry(normalize_path(path), content))
        except ValueError as exc:
            raise SchemaError(f"bad {key} entry: {exc}", line=lineno) from exc
    return entries


def parse_commit_record(record: dict, lineno: int | None = None) -> CommitRecord:
    repo = _require(record, "repo", str, lineno)
    commit = _require(record, "commit", str, lineno)
    timestamp = _require(record, "timestamp", int, lineno)
    snapshot_files = _parse_file_list(record, "snapshot", lineno)
    completion_files = _parse_file_list(record, "completion_files", lineno)
    try:
        snapshot = RepositorySnapshot(
            repo=repo, commit=commit, timestamp=timestamp, files=tuple(snapshot_files)
        )
        return CommitRecord(
            repo=repo,
            commit=commit,
            timestamp=timestamp,
            snapshot=snapshot,
            completion_files=tuple(completion_files),
        )
    except ValueError as exc:
        raise SchemaError(str(exc), line=lineno) from exc


def read_commit_records(path: str | Path) -> Iterator[CommitRecord]:
    for lineno, record in read_jsonl(path):
        yield parse_commit_record(record, lineno)


def commit_record_row(record: CommitRecord) -> dict:
    return {
        "repo": record.repo,
        "commit": record.commit,
        "timestamp": record.timestamp,
        "snapshot": [{"path": f.path, "content": f.content} for f in record.snapshot.files],
        "completion_files": [
            {"path": f.path, "content": f.content} for f in record.completion_files
        ],
    }


def target_row(target: CompletionTarget) -> dict:
    return {
        "repo": target.repo,
        "commit": target.commit,
        "timestamp": target.timestamp,
        "completion_path": target.file.path,
        "snapshot_key": target.snapshot_key,
    }


def composed_row(example, repo: str, commit: str, modifier: str) -> dict:
    return {
        "example_id": example.example_id,
        "repo": repo,
        "commit": commit,
        "composer": example.composer,
        "modifier": modifier,
        "completion_path": example.completion_path,
        "context": example.context,
        "completion": example.completion,
    }


def parse_composed_row(record: dict, lineno: int | None = None) -> dict:
    for key in ("example_id", "context", "completion"):
        _require(record, key, str, lineno)
    return record


def packed_row(example: PackedExample, tokenizer_name: str) -> dict:
    return {
        "example_id": example.example_id,
        "input_ids": list(example.input_ids),
        "loss_mask": list(example.loss_mask),
        "context_len": example.context_len,
        "completion_len": example.completion_len,
        "tokenizer": tokenizer_name,
    }


def parse_eval_item(record: dict, lineno: int | None = None) -> EvalItem:
    truth = _require(record, "ground_truth_line", str, lineno)
    prefix = _require(record, "file_prefix", str, lineno)
    context = _require(record, "context", str, lineno)
    if "category" in record:
        # pre-assigned labels are honored verbatim
        category = _require(record, "category", str, lineno)
        try:
            parsed_category = LineCategory(category)
        except ValueError as exc:
            raise SchemaError(f"unknown category {category!r}", line=lineno) from exc
    else:
        # fall back to the identifier heuristic over the prefix and context
        parsed_category = categorize_line(
            truth, declared_identifiers(prefix), declared_identifiers(context)
        )
    try:
        return EvalItem(
            example_id=_require(record, "example_id", str, lineno),
            context=context,
            file_prefix=prefix,
            ground_truth_line=truth,
            category=parsed_category,
        )
    except ValueError as exc:
        raise SchemaError(str(exc), line=lineno) from exc


def read_eval_items(path: str | Path) -> list[EvalItem]:
    return [parse_eval_item(record, lineno) for lineno, record in read_jsonl(path)]


def read_predictions(path: str | Path) -> dict[str, str]:
    predictions = {}
    for lineno, record in read_jsonl(path):
        example_id = _require(record, "example_id", str, lineno)
        predictions[example_id] = _require(record, "prediction", str, lineno)
    return predictions


# -- snapshot sidecar ---------------------------------------------------------

def snapshot_row(snapshot: RepositorySnapshot) -> dict:
    return {
        "key": snapshot.key,
        "files": [{"path": f.path, "content": f.content} for f in snapshot.files],
    }


def load_snapshot_sidecar(path: str | Path) -> dict[str, list[FileEntry]]:
    sidecar = {}
    for lineno, record in read_jsonl(path):
        key = _require(record, "key", str, lineno)
        sidecar[key] = _parse_file_list(record, "files", lineno)
    return sidecar


# -- run manifest -------------------------------------------------------------

def manifest_path(output_path: str | Path) -> Path:
    return Path(str(output_path) + ".manifest.json")


def write_manifest(output_path: str | Path, command: str, config: dict, counts: dict) -> Path:
    """Write the machine-readable run manifest next to an output file."""
    payload = {
        "tool": "repocompose",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "counts": counts,
    }
    path = manifest_path(output_path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=True, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def read_manifest(output_path: str | Path) -> dict | None:
    path = manifest_path(output_path)
    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


# -- binary packed format -----------------------------------------------------

def _write_bytes(handle, data: bytes) -> None:
    handle.write(struct.pack("<I", len(data)))
    handle.write(data)


def write_packed_binary(path: str | Path, rows: Iterable[dict]) -> int:
    """Length-prefixed binary variant of the packed JSONL, same field order."""
    count = 0
    with open(path, "wb") as handle:
        handle.write(PACKED_MAGIC)
        for row in rows:
            _write_bytes(handle, row["example_id"].encode("utf-8", "surrogateescape"))
            ids = row["input_ids"]
            handle.write(struct.pack("<I", len(ids)))
            handle.write(struct.pack(f"<{len(ids)}I", *ids) if ids else b"")
            mask = row["loss_mask"]
            handle.write(struct.pack("<I", len(mask)))
            handle.write(bytes(mask))
            handle.write(struct.pack("<II", row["context_len"], row["completion_len"]))
            _write_bytes(handle, row["tokenizer"].encode("utf-8"))
            count += 1
    return count


def read_packed_binary(path: str | Path) -> Iterator[dict]:
    with open(path, "rb") as handle:
        magic = handle.read(len(PACKED_MAGIC))
        if magic != PACKED_MAGIC:
            raise SchemaError(f"bad magic in packed binary file {path}")

        def take(n: int) -> bytes:
            data = handle.read(n)
            if len(data) != n:
                raise SchemaError(f"truncated packed binary file {path}")
            return data

        while True:
            head = handle.read(4)
            if not head:
                return
            if len(head) != 4:
                raise SchemaError(f"truncated packed binary file {path}")
            example_id = take(struct.unpack("<I", head)[0]).decode("utf-8", "surrogateescape")
            (n_ids,) = struct.unpack("<I", take(4))
            input_ids = list(struct.unpack(f"<{n_ids}I", take(4 * n_ids))) if n_ids else []
            (n_mask,) = struct.unpack("<I", take(4))
            loss_mask = list(take(n_mask))
            context_len, completion_len = struct.unpack("<II", take(8))
            tokenizer_name = take(struct.unpack("<I", take(4))[0]).decode("utf-8")
            yield {
                "example_id": example_id,
                "input_ids": input_ids,
                "loss_mask": loss_mask,
                "context_len": context_len,
                "completion_len": completion_len,
                "tokenizer": tokenizer_name,
            }

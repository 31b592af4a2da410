from __future__ import annotations

import json
import struct

import pytest

from repocompose_client import (
    DatasetError,
    iterate,
    open_dataset,
    records,
    total_tokens,
)

PACKED_MAGIC = b"RCPK\x01"


def row(i, n_context=2, n_completion=2):
    n = n_context + n_completion
    return {
        "example_id": f"r@c/file_{i}.py",
        "input_ids": list(range(100, 100 + n)),
        "loss_mask": [0] * n_context + [1] * n_completion,
        "context_len": n_context,
        "completion_len": n_completion,
        "tokenizer": "reference",
    }


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def test_open_valid_three_record_file(tmp_path):
    path = tmp_path / "data.jsonl"
    write_jsonl(path, [row(i) for i in range(3)])
    handle = open_dataset(path)
    assert handle.record_count == 3
    assert handle.tokenizer == "reference"


def test_open_uses_manifest_count_when_present(tmp_path):
    path = tmp_path / "data.jsonl"
    write_jsonl(path, [row(i) for i in range(3)])
    manifest = {"version": "0.1.0", "counts": {"examples": 3, "tokenizer": "reference"}}
    (tmp_path / "data.jsonl.manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    handle = open_dataset(path)
    assert handle.record_count == 3
    assert handle.schema_version == "0.1.0"


def test_open_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    handle = open_dataset(path)
    assert handle.record_count == 0
    assert list(iterate(handle, 4)) == []


def test_open_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        open_dataset(tmp_path / "absent.jsonl")


def test_length_mismatch_rejected_with_position(tmp_path):
    bad = row(0)
    bad["loss_mask"] = bad["loss_mask"][:-1]
    path = tmp_path / "bad.jsonl"
    write_jsonl(path, [bad])
    with pytest.raises(DatasetError, match="record 1.*loss_mask"):
        open_dataset(path)


def test_mask_not_suffix_contiguous_rejected(tmp_path):
    bad = row(0)
    bad["loss_mask"] = [0, 0, 1, 0]
    path = tmp_path / "bad.jsonl"
    write_jsonl(path, [bad])
    with pytest.raises(DatasetError, match="contiguous suffix"):
        open_dataset(path)


def test_corrupt_mid_file_record_stops_with_position(tmp_path):
    rows = [row(i) for i in range(5)]
    rows[3]["context_len"] = 99
    path = tmp_path / "mid.jsonl"
    write_jsonl(path, rows)
    handle = open_dataset(path)
    seen = 0
    with pytest.raises(DatasetError, match="record 4"):
        for batch in iterate(handle, 2):
            seen += len(batch)
    assert seen == 2  # the first full batch arrived before the corruption


def test_batching_drop_last(tmp_path):
    path = tmp_path / "ten.jsonl"
    write_jsonl(path, [row(i) for i in range(10)])
    handle = open_dataset(path)
    dropped = list(iterate(handle, 4, drop_last=True))
    assert [len(b) for b in dropped] == [4, 4]
    kept = list(iterate(handle, 4, drop_last=False))
    assert [len(b) for b in kept] == [4, 4, 2]


def test_iteration_order_stable_and_counts_add_up(tmp_path):
    path = tmp_path / "ten.jsonl"
    write_jsonl(path, [row(i) for i in range(10)])
    handle = open_dataset(path)
    first = [r.example_id for batch in iterate(handle, 3) for r in batch]
    second = [r.example_id for batch in iterate(handle, 3) for r in batch]
    assert first == second == [f"r@c/file_{i}.py" for i in range(10)]
    assert sum(len(b) for b in iterate(handle, 3)) == handle.record_count


def test_total_tokens(tmp_path):
    path = tmp_path / "data.jsonl"
    write_jsonl(path, [row(0, 2, 2), row(1, 3, 1)])
    handle = open_dataset(path)
    assert total_tokens(handle) == 8


def test_batch_size_validated(tmp_path):
    path = tmp_path / "one.jsonl"
    write_jsonl(path, [row(0)])
    with pytest.raises(ValueError):
        list(iterate(open_dataset(path), 0))


def write_binary(path, rows):
    with open(path, "wb") as handle:
        handle.write(PACKED_MAGIC)
        for r in rows:
            eid = r["example_id"].encode()
            handle.write(struct.pack("<I", len(eid)) + eid)
            ids = r["input_ids"]
            handle.write(struct.pack("<I", len(ids)))
            handle.write(struct.pack(f"<{len(ids)}I", *ids) if ids else b"")
            mask = r["loss_mask"]
            handle.write(struct.pack("<I", len(mask)) + bytes(mask))
            handle.write(struct.pack("<II", r["context_len"], r["completion_len"]))
            tok = r["tokenizer"].encode()
            handle.write(struct.pack("<I", len(tok)) + tok)


def test_binary_format_roundtrip(tmp_path):
    path = tmp_path / "data.bin"
    write_binary(path, [row(i) for i in range(4)])
    handle = open_dataset(path)
    assert handle.format == "binary"
    assert handle.record_count == 4
    assert [r.example_id for r in records(handle)] == [f"r@c/file_{i}.py" for i in range(4)]


def test_binary_truncation_detected(tmp_path):
    path = tmp_path / "cut.bin"
    write_binary(path, [row(0)])
    data = path.read_bytes()
    path.write_bytes(data[:-2])
    handle_error = None
    try:
        list(records(open_dataset(path)))
    except DatasetError as exc:
        handle_error = exc
    assert handle_error is not None and "truncated" in str(handle_error)


def test_non_integer_token_ids_rejected(tmp_path):
    bad = row(0)
    bad["input_ids"][1] = 1.5
    path = tmp_path / "floaty.jsonl"
    write_jsonl(path, [bad])
    with pytest.raises(DatasetError, match="non-token value"):
        open_dataset(path)

"""Round-trip against datasets produced by the repocompose CLI.

These tests shell out to the producer; they are the only place the client
touches it, and only through files. Skipped when the CLI is not installed.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from datetime import datetime, timezone

import pytest

from repocompose_client import iterate, open_dataset, read_manifest, total_tokens

TS = int(datetime(2016, 3, 1, tzinfo=timezone.utc).timestamp())


def repocompose_available() -> bool:
    if shutil.which("repocompose"):
        return True
    probe = subprocess.run(
        [sys.executable, "-m", "repocompose.cli", "--version"], capture_output=True
    )
    return probe.returncode == 0


pytestmark = pytest.mark.skipif(
    not repocompose_available(), reason="repocompose CLI not installed"
)


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "repocompose.cli", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


def write_records(path, n_records=6):
    rows = []
    for r in range(n_records):
        snapshot = [
            {
                "path": f"lib/part_{i}.py",
                "content": f"def piece_{r}_{i}(x):\n    return x * {i + 1}\n" * 8,
            }
            for i in range(4)
        ]
        rows.append({
            "repo": "round/trip",
            "commit": f"c{r:03d}",
            "timestamp": TS + r,
            "snapshot": snapshot,
            "completion_files": [{
                "path": "lib/added.py",
                "content": f"# fresh module {r}\n" + f"value_{r} = {r}\n" * 40,
            }],
        })
    path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")


@pytest.mark.parametrize("binary", [False, True])
def test_pack_output_round_trips(tmp_path, binary):
    records = tmp_path / "records.jsonl"
    composed = tmp_path / "composed.jsonl"
    packed = tmp_path / ("packed.bin" if binary else "packed.jsonl")
    write_records(records)

    run_cli("compose", "--records", str(records), "--out", str(composed),
            "--composer", "path_distance_py", "--max-context", "512", "--seed", "42")
    pack_args = ["pack", "--input", str(composed), "--out", str(packed),
                 "--max-total", "1024", "--max-completion", "256"]
    if binary:
        pack_args.append("--binary")
    run_cli(*pack_args)

    handle = open_dataset(packed)
    manifest = read_manifest(packed)
    assert manifest is not None

    ids_in_order = []
    yielded_tokens = 0
    for batch in iterate(handle, 4):
        for record in batch:
            ids_in_order.append(record.example_id)
            yielded_tokens += len(record.input_ids)
            ones = sum(record.loss_mask)
            assert ones == record.completion_len
            assert record.loss_mask[-ones:] == (1,) * ones if ones else True

    assert len(ids_in_order) == handle.record_count == manifest["counts"]["examples"]
    assert ids_in_order == sorted(ids_in_order) == [
        f"round/trip@c{r:03d}/lib/added.py" for r in range(6)
    ]
    assert yielded_tokens == manifest["counts"]["total_tokens"]
    print(f"[PASS] client round-trip ({'binary' if binary else 'jsonl'}): "
          f"{len(ids_in_order)} records, {yielded_tokens} tokens match manifest")

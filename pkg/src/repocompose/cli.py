"""Command-line surface: filter, compose, pack, eval, sweep, stats, rope-report.

Every subcommand streams JSONL line by line (constant memory in file count),
writes a machine-readable run manifest next to each output file, and exits 0
on success, 1 on input/schema errors, and 2 on configuration errors. Output
order always equals input order, so worker parallelism never changes bytes.
"""

from __future__ import annotations

import argparse
import collections
import csv
import json
import logging
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, TypeVar

from . import __version__
from .composers import ContextBudget, compose
from .errors import ConfigurationError, ExampleRejected, SchemaError
from .evaluation import SweepRow, context_scaling_sweep, evaluate
from .filtering import (
    FilterPolicy,
    TargetSelector,
    completion_length_ok,
    dataset_stats,
    record_passes,
)
from .model import (
    COMPOSER_KINDS,
    MODES,
    MODIFIERS,
    CompletionTarget,
    ComposerSpec,
    normalize_content,
    normalize_snapshot,
)
from .rope import RopeConfig, frequency_report
from .tokenization import TruncationPolicy, make_tokenizer, pack_training_example
from . import storage

log = logging.getLogger("repocompose")

DEFAULT_SEED = 42

T = TypeVar("T")
R = TypeVar("R")


def _ordered_parallel_map(
    fn: Callable[[T], R], items: Iterable[T], workers: int
) -> Iterator[R]:
    """Map with a bounded worker pool, yielding results in input order."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: collections.deque = collections.deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= workers * 2:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- filter -------------------------------------------------------------------

def cmd_filter(args) -> int:
    policy = FilterPolicy(
        min_year=args.min_year,
        min_chars=args.min_chars,
        max_chars=args.max_chars,
        max_files_per_repo=args.max_files_per_repo,
        holdout_repos=frozenset(args.holdout.split(",")) if args.holdout else frozenset(),
    )
    selector = TargetSelector(policy)
    records_seen = 0
    sidecar = open(args.snapshots_out, "w", encoding="utf-8") if args.snapshots_out else None
    try:
        for record in storage.read_commit_records(args.records):
            records_seen += 1
            record = _normalized(record)
            if not record_passes(record, policy):
                continue
            survivors = [f for f in record.completion_files if completion_length_ok(f, policy)]
            if not survivors:
                continue
            if sidecar is not None:
                sidecar.write(storage.dump_line(storage.snapshot_row(record.snapshot)))
            for entry in survivors:
                selector.offer(
                    CompletionTarget(record.repo, record.commit, record.timestamp, entry)
                )
    finally:
        if sidecar is not None:
            sidecar.close()
    targets = selector.finalize()
    storage.write_jsonl(args.out, (storage.target_row(t) for t in targets))
    storage.write_manifest(
        args.out,
        "filter",
        _config_dict(args),
        {"records": records_seen, "targets": len(targets)},
    )
    log.info("filter: %d records -> %d targets", records_seen, len(targets))
    return 0


def _normalized(record):
    snapshot = normalize_snapshot(record.snapshot)
    completions = tuple(
        replace(f, content=normalize_content(f.content)) for f in record.completion_files
    )
    return replace(record, snapshot=snapshot, completion_files=completions)


# -- compose ------------------------------------------------------------------

def _load_target_selection(path) -> set[tuple[str, str, str]]:
    selection = set()
    for lineno, row in storage.read_jsonl(path):
        try:
            selection.add((str(row["repo"]), str(row["commit"]), str(row["completion_path"])))
        except KeyError as exc:
            raise SchemaError(f"target row missing field {exc}", line=lineno) from exc
    return selection


def cmd_compose(args) -> int:
    tokenizer = make_tokenizer(args.tokenizer)
    spec = ComposerSpec(
        kind=args.composer,
        modifier=args.modifier,
        mode=args.mode,
        max_seq_len=args.max_context,
        seed=args.seed,
        dropout_p=args.dropout_p,
        mask_p=args.mask_p,
        leak_segments=args.leak_segments,
    )
    budget = ContextBudget(max_context_tokens=args.max_context, tokenizer=tokenizer)
    selection = _load_target_selection(args.targets) if args.targets else None

    def compose_record(record) -> list[tuple[str, str]]:
        record = _normalized(record)
        lines = []
        for entry in record.completion_files:
            if not entry.content:
                continue
            if selection is not None and (record.repo, record.commit, entry.path) not in selection:
                continue
            target = CompletionTarget(record.repo, record.commit, record.timestamp, entry)
            example = compose(spec, record.snapshot, target, budget)
            row = storage.composed_row(example, record.repo, record.commit, spec.modifier)
            lines.append((example.example_id, storage.dump_line(row)))
        return lines

    examples = 0
    seen_ids: set[str] = set()
    duplicates = 0
    with open(args.out, "w", encoding="utf-8", errors="surrogateescape") as out:
        for lines in _ordered_parallel_map(
            compose_record, storage.read_commit_records(args.records), args.workers
        ):
            for example_id, line in lines:
                if example_id in seen_ids:
                    duplicates += 1
                    log.warning("duplicate example_id %s", example_id)
                seen_ids.add(example_id)
                out.write(line)
                examples += 1
    counts = {"examples": examples}
    if duplicates:
        counts["duplicate_ids"] = duplicates
    storage.write_manifest(args.out, "compose", _config_dict(args), counts)
    log.info("compose: wrote %d examples", examples)
    return 0


# -- pack ---------------------------------------------------------------------

def cmd_pack(args) -> int:
    tokenizer = make_tokenizer(args.tokenizer)
    policy = TruncationPolicy(
        total_max=args.max_total,
        completion_max=args.max_completion,
        min_ratio=args.min_ratio,
    )

    skipped: list[dict] = []
    counts = {"examples": 0, "skipped": 0, "total_tokens": 0}

    def rows() -> Iterator[dict]:
        for lineno, record in storage.read_jsonl(args.input):
            record = storage.parse_composed_row(record, lineno)
            try:
                packed = pack_training_example(
                    record["context"],
                    record["completion"],
                    policy,
                    tokenizer,
                    example_id=record["example_id"],
                    mask_mode=args.mask,
                )
            except ExampleRejected as exc:
                skipped.append({"example_id": exc.example_id, "reason": exc.reason})
                counts["skipped"] += 1
                continue
            counts["examples"] += 1
            counts["total_tokens"] += len(packed.input_ids)
            yield storage.packed_row(packed, tokenizer.name)

    if args.binary:
        storage.write_packed_binary(args.out, rows())
    else:
        storage.write_jsonl(args.out, rows())
    counts["tokenizer"] = tokenizer.name
    manifest_counts = dict(counts)
    if skipped:
        manifest_counts["skips"] = skipped
    storage.write_manifest(args.out, "pack", _config_dict(args), manifest_counts)
    log.info("pack: %d examples, %d skipped", counts["examples"], counts["skipped"])
    return 0


# -- eval ---------------------------------------------------------------------

def cmd_eval(args) -> int:
    items = storage.read_eval_items(args.items)
    predictions = storage.read_predictions(args.preds)
    categories = args.categories.split(",") if args.categories else None
    report = evaluate(items, predictions, categories, composer_name=args.composer_name)
    payload = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        storage.write_manifest(
            args.out, "eval", _config_dict(args), {"items": len(items)}
        )
    else:
        print(payload)
    return 0


# -- sweep --------------------------------------------------------------------

def _pattern_predictor(pattern: str):
    def predictor(length: int, prepared: dict[str, list[int]]) -> dict[str, str]:
        path = pattern.replace("{length}", str(length))
        return storage.read_predictions(path)

    return predictor


def _command_predictor(command: str):
    def predictor(length: int, prepared: dict[str, list[int]]) -> dict[str, str]:
        payload = "".join(
            storage.dump_line({"example_id": k, "token_ids": v}) for k, v in prepared.items()
        )
        proc = subprocess.run(
            command,
            shell=True,
            input=payload,
            capture_output=True,
            text=True,
            env={**os.environ, "REPOCOMPOSE_SWEEP_LENGTH": str(length)},
        )
        if proc.returncode != 0:
            raise RuntimeError(f"predictor exited {proc.returncode}: {proc.stderr.strip()}")
        predictions = {}
        for line in proc.stdout.splitlines():
            if line.strip():
                record = json.loads(line)
                predictions[record["example_id"]] = record["prediction"]
        return predictions

    return predictor


def _write_sweep_csv(rows: list[SweepRow], handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["length", "category", "exact_match", "count"])
    for row in rows:
        writer.writerow(
            [row.length, row.category, "" if row.exact_match is None else row.exact_match, row.count]
        )


def cmd_sweep(args) -> int:
    if bool(args.preds_pattern) == bool(args.predictor_cmd):
        raise ConfigurationError("exactly one of --preds-pattern / --predictor-cmd is required")
    tokenizer = make_tokenizer(args.tokenizer)
    items = storage.read_eval_items(args.items)
    lengths = [int(x) for x in args.lengths.split(",")]
    categories = args.categories.split(",") if args.categories else None
    predictor = (
        _pattern_predictor(args.preds_pattern)
        if args.preds_pattern
        else _command_predictor(args.predictor_cmd)
    )
    rows = context_scaling_sweep(items, predictor, tokenizer, lengths, categories,
                                 workers=args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            _write_sweep_csv(rows, handle)
        storage.write_manifest(args.out, "sweep", _config_dict(args), {"rows": len(rows)})
    else:
        _write_sweep_csv(rows, sys.stdout)
    return 0


# -- stats --------------------------------------------------------------------

def cmd_stats(args) -> int:
    report = dataset_stats(storage.read_commit_records(args.records))
    payload = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        storage.write_manifest(args.out, "stats", _config_dict(args), report.as_dict())
    else:
        print(payload)
    return 0


# -- rope-report --------------------------------------------------------------

def cmd_rope_report(args) -> int:
    cfg = RopeConfig(base=args.base, head_dim=args.head_dim)

    def write(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["i", "omega", "wavelength"])
        for i, omega, wavelength in frequency_report(cfg):
            writer.writerow([i, repr(omega), repr(wavelength)])

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        storage.write_manifest(
            args.out, "rope-report", _config_dict(args), {"rows": cfg.head_dim // 2}
        )
    else:
        write(sys.stdout)
    return 0


# -- parser -------------------------------------------------------------------

def _add_tokenizer_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tokenizer",
        default="reference",
        help="'reference' (byte-level) or 'external:<cmd>' speaking the JSON line protocol",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repocompose",
        description="Build and evaluate repository-level code completion datasets.",
    )
    parser.add_argument("--version", action="version", version=f"repocompose {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="apply dataset filtering to raw commit records")
    p.add_argument("--records", required=True, help="input commit records JSONL")
    p.add_argument("--out", required=True, help="output targets JSONL")
    p.add_argument("--snapshots-out", default=None, help="optional snapshot sidecar JSONL")
    p.add_argument("--min-year", type=int, default=2010)
    p.add_argument("--min-chars", type=int, default=800)
    p.add_argument("--max-chars", type=int, default=25000)
    p.add_argument("--max-files-per-repo", type=int, default=1000)
    p.add_argument("--holdout", default="", help="comma-separated holdout repo ids")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("compose", help="compose contexts for every completion file")
    p.add_argument("--records", required=True, help="input commit records JSONL")
    p.add_argument("--targets", default=None,
                   help="optional filter-output JSONL; compose only the selected completion files")
    p.add_argument("--out", required=True, help="output composed JSONL")
    p.add_argument("--composer", required=True, choices=COMPOSER_KINDS)
    p.add_argument("--modifier", default="none", choices=MODIFIERS)
    p.add_argument("--mode", default="training", choices=MODES)
    p.add_argument("--max-context", type=int, required=True, help="context token budget")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dropout-p", type=float, default=0.5)
    p.add_argument("--mask-p", type=float, default=0.15)
    p.add_argument("--leak-segments", type=int, default=5)
    _add_tokenizer_flag(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("pack", help="pack composed examples into ids and loss masks")
    p.add_argument("--input", required=True, help="composed JSONL")
    p.add_argument("--out", required=True, help="output packed dataset")
    p.add_argument("--max-total", type=int, default=16384)
    p.add_argument("--max-completion", type=int, default=4096)
    p.add_argument("--min-ratio", type=int, default=3)
    p.add_argument("--mask", default="completion", choices=("completion", "full"))
    p.add_argument("--binary", action="store_true", help="write the binary variant")
    _add_tokenizer_flag(p)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("eval", help="score predictions with Exact Match")
    p.add_argument("--items", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--categories", default=None, help="comma-separated category filter")
    p.add_argument("--composer-name", default="PD-16K")
    p.add_argument("--out", default=None, help="write report JSON here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="Exact Match across maximum sequence lengths")
    p.add_argument("--items", required=True)
    p.add_argument("--lengths", default="1024,2048,4096,8192,16384,32768,65536,131072")
    p.add_argument("--categories", default=None)
    p.add_argument("--preds-pattern", default=None, help="predictions file per length, e.g. preds-{length}.jsonl")
    p.add_argument("--predictor-cmd", default=None, help="subprocess predictor command")
    p.add_argument("--workers", type=int, default=1, help="lengths evaluated concurrently")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    _add_tokenizer_flag(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stats", help="corpus counters for commit records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("rope-report", help="CSV of rotary frequencies and wavelengths")
    p.add_argument("--base", type=float, default=10000.0)
    p.add_argument("--head-dim", type=int, default=64)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rope_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("REPOCOMPOSE_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"repocompose: configuration error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"repocompose: schema error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"repocompose: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"repocompose: input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

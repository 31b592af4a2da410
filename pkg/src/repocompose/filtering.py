"""Commit-record filtering that produces the raw-repositories dataset.

Record-level exclusions (holdout repos, pre-cutoff commits, out-of-range
completion lengths) stream independently per record; the per-name dedup and
the per-repo cap are a reduction handled by :class:`TargetSelector` so the
CLI can stream large inputs with only candidate metadata in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable

from .model import CompletionTarget, FileEntry, RepositorySnapshot


@dataclass(frozen=True)
class CommitRecord:
    """One pre-extracted commit: snapshot plus the ``.py`` files it added."""

    repo: str
    commit: str
    timestamp: int
    snapshot: RepositorySnapshot
    completion_files: tuple[FileEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "completion_files", tuple(self.completion_files))
        if self.timestamp <= 0:
            raise ValueError("timestamp must be positive")
        for entry in self.completion_files:
            if not entry.path.endswith(".py"):
                raise ValueError(f"completion file must be .py: {entry.path!r}")


@dataclass(frozen=True)
class FilterPolicy:
    """Dataset selection rules: cutoff year, length window, per-repo cap."""

    min_year: int = 2010
    min_chars: int = 800
    max_chars: int = 25000
    max_files_per_repo: int = 1000
    holdout_repos: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.min_chars > self.max_chars:
            raise ValueError("min_chars must be <= max_chars")
        if min(self.min_year, self.min_chars, self.max_files_per_repo) <= 0:
            raise ValueError("policy fields must be positive")

    @property
    def cutoff_timestamp(self) -> int:
        """First second of Jan 1 of ``min_year``, UTC."""
        return int(datetime(self.min_year, 1, 1, tzinfo=timezone.utc).timestamp())


@dataclass
class TargetSelector:
    """Streaming reducer for dedup-by-name and the per-repo recency cap.

    Keeps one candidate per (repo, file name): the most recent, ties broken
    by lexicographically smaller full path, then commit id. ``finalize``
    applies the per-repo cap and returns targets in first-seen order.
    """

    policy: FilterPolicy
    _best: dict[tuple[str, str], tuple[int, str, str, CompletionTarget, int]] = field(
        default_factory=dict
    )
    _order: int = 0

    def offer(self, target: CompletionTarget) -> None:
        key = (target.repo, target.file.path.rsplit("/", 1)[-1])
        candidate = (target.timestamp, target.file.path, target.commit, target, self._order)
        self._order += 1
        held = self._best.get(key)
        if held is None or self._wins(candidate, held):
            self._best[key] = candidate

    @staticmethod
    def _wins(candidate, held) -> bool:
        # Most recent first; lexicographic path then commit for determinism.
        c = (-candidate[0], candidate[1], candidate[2])
        h = (-held[0], held[1], held[2])
        return c < h

    def finalize(self) -> list[CompletionTarget]:
        per_repo: dict[str, list] = {}
        for key, cand in self._best.items():
            per_repo.setdefault(key[0], []).append(cand)
        keep: list[tuple[int, CompletionTarget]] = []
        for candidates in per_repo.values():
            candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
            for cand in candidates[: self.policy.max_files_per_repo]:
                keep.append((cand[4], cand[3]))
        keep.sort(key=lambda pair: pair[0])
        return [target for _, target in keep]


def record_passes(record: CommitRecord, policy: FilterPolicy) -> bool:
    """Record-level exclusions: holdout repos and pre-cutoff commits."""
    if record.repo in policy.holdout_repos:
        return False
    return record.timestamp >= policy.cutoff_timestamp


def completion_length_ok(entry: FileEntry, policy: FilterPolicy) -> bool:
    """Closed-interval character length check (Unicode code points)."""
    return policy.min_chars <= len(entry.content) <= policy.max_chars


def filter_dataset(
    records: Iterable[CommitRecord], policy: FilterPolicy
) -> list[CompletionTarget]:
    """Apply all filtering rules; snapshots pass through untouched.

    Each returned target references its snapshot via ``target.snapshot_key``.
    """
    selector = TargetSelector(policy)
    for record in records:
        if not record_passes(record, policy):
            continue
        for entry in record.completion_files:
            if not completion_length_ok(entry, policy):
                continue
            selector.offer(
                CompletionTarget(
                    repo=record.repo,
                    commit=record.commit,
                    timestamp=record.timestamp,
                    file=entry,
                )
            )
    return selector.finalize()


@dataclass(frozen=True)
class StatsReport:
    """Row-level corpus counters; no implicit dedup."""

    repos: int
    commits: int
    completion_files: int
    completion_chars: int
    snapshot_chars: int

    def as_dict(self) -> dict:
        return {
            "repos": self.repos,
            "commits": self.commits,
            "completion_files": self.completion_files,
            "completion_chars": self.completion_chars,
            "snapshot_chars": self.snapshot_chars,
        }


def dataset_stats(records: Iterable[CommitRecord]) -> StatsReport:
    """Count repos, commits (rows as given), completion files, and characters."""
    repos: set[str] = set()
    commits = 0
    completion_files = 0
    completion_chars = 0
    snapshot_chars = 0
    for record in records:
        repos.add(record.repo)
        commits += 1
        completion_files += len(record.completion_files)
        completion_chars += sum(len(f.content) for f in record.completion_files)
        snapshot_chars += sum(len(f.content) for f in record.snapshot.files)
    return StatsReport(len(repos), commits, completion_files, completion_chars, snapshot_chars)

"""Core domain types and the universal snapshot preprocessing.

Every composer operates on a normalized snapshot: LF-only line separators,
no empty or whitespace-only files. Normalization happens once at ingest and
all downstream contracts assume it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable

from .errors import ConfigurationError

COMPOSER_KINDS = (
    "file_level",
    "path_distance_py",
    "lines_iou_py",
    "code_chunks",
    "half_memory_py",
    "declarations_py",
    "text_chunks_py",
    "text_files",
    "random_files",
    "random_py",
    "mixed",
    "random_tokens",
    "duplication",
    "leak",
    "masked_leak",
)

MODIFIERS = ("none", "reversed", "irrelevant")
MODES = ("training", "evaluation")

# Kinds whose base ordering is a deterministic ranking; only these accept the
# reversed / irrelevant modifiers.
RANKED_KINDS = frozenset(
    {
        "path_distance_py",
        "lines_iou_py",
        "code_chunks",
        "half_memory_py",
        "declarations_py",
        "text_chunks_py",
        "text_files",
        "leak",
        "masked_leak",
    }
)


def _validate_path(path: str) -> None:
    if not path:
        raise ValueError("file path must be non-empty")
    if path.startswith("/"):
        raise ValueError(f"file path must be relative: {path!r}")
    segments = path.split("/")
    if any(seg in ("", ".", "..") for seg in segments):
        raise ValueError(f"file path contains invalid segment: {path!r}")


def normalize_path(path: str) -> str:
    """Normalize a raw path to forward slashes and validate it."""
    path = path.replace("\\", "/")
    if path.startswith("./"):
        path = path[2:]
    _validate_path(path)
    return path


@dataclass(frozen=True)
class FileEntry:
    """One file of a repository snapshot.

    ``path`` is relative, forward-slash separated, with no "." or ".."
    segments. ``content`` is expected to be LF-only after normalization.
    """

    path: str
    content: str

    def __post_init__(self):
        _validate_path(self.path)


@dataclass(frozen=True)
class RepositorySnapshot:
    """All code and text files of one repository immediately before a commit."""

    repo: str
    commit: str
    timestamp: int
    files: tuple[FileEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "files", tuple(self.files))
        seen: set[str] = set()
        for entry in self.files:
            if entry.path in seen:
                raise ValueError(f"duplicate path in snapshot: {entry.path!r}")
            seen.add(entry.path)

    @property
    def key(self) -> str:
        return f"{self.repo}@{self.commit}"


@dataclass(frozen=True)
class CompletionTarget:
    """A ``.py`` file added in a commit, on which completion is performed."""

    repo: str
    commit: str
    timestamp: int
    file: FileEntry

    def __post_init__(self):
        if not self.file.path.endswith(".py"):
            raise ValueError(f"completion file must be .py: {self.file.path!r}")
        if len(self.file.content) < 1:
            raise ValueError("completion file content must be non-empty")

    @property
    def snapshot_key(self) -> str:
        return f"{self.repo}@{self.commit}"

    @property
    def example_id(self) -> str:
        return f"{self.repo}@{self.commit}/{self.file.path}"


@dataclass(frozen=True)
class ComposedExample:
    """One (context string, completion file) pair produced by a composer."""

    example_id: str
    composer: str
    completion_path: str
    context: str
    completion: str


class LineCategory(str, Enum):
    """Category of an evaluated completion line."""

    INFILE = "infile"
    INPROJECT = "inproject"
    OTHER = "other"


@dataclass(frozen=True)
class ComposerSpec:
    """Full configuration of one composer run.

    ``dropout_p`` applies to half_memory_py only, ``mask_p`` and
    ``leak_segments`` to the leak family only; other kinds ignore them.
    """

    kind: str
    modifier: str = "none"
    mode: str = "training"
    max_seq_len: int = 16384
    seed: int = 0
    dropout_p: float = 0.5
    mask_p: float = 0.15
    leak_segments: int = 5

    def __post_init__(self):
        if self.kind not in COMPOSER_KINDS:
            raise ConfigurationError(
                f"unknown composer kind {self.kind!r}; valid kinds: {', '.join(COMPOSER_KINDS)}"
            )
        if self.modifier not in MODIFIERS:
            raise ConfigurationError(
                f"unknown modifier {self.modifier!r}; valid modifiers: {', '.join(MODIFIERS)}"
            )
        if self.mode not in MODES:
            raise ConfigurationError(
                f"unknown mode {self.mode!r}; valid modes: {', '.join(MODES)}"
            )
        if self.modifier != "none" and self.kind not in RANKED_KINDS:
            raise ConfigurationError(
                f"modifier {self.modifier!r} requires a deterministically ranked "
                f"composer, not {self.kind!r}"
            )
        if self.max_seq_len < 0:
            raise ConfigurationError("max_seq_len must be >= 0")
        if not 0.0 <= self.dropout_p <= 1.0:
            raise ConfigurationError("dropout_p must be in [0, 1]")
        if not 0.0 <= self.mask_p <= 1.0:
            raise ConfigurationError("mask_p must be in [0, 1]")
        if self.leak_segments < 1:
            raise ConfigurationError("leak_segments must be >= 1")

    @property
    def name(self) -> str:
        """Composer identifier recorded on emitted examples."""
        if self.modifier == "none":
            return self.kind
        return f"{self.kind}:{self.modifier}"


@dataclass
class FileDropRecord:
    """Per-file error record emitted when normalization drops a file."""

    path: str
    reason: str


def normalize_content(text: str) -> str:
    """Normalize CRLF and lone CR line separators to LF."""
    return text.replace("\r\n", "\n").replace("\r", "\n")


def normalize_snapshot(
    snapshot: RepositorySnapshot,
    errors: list[FileDropRecord] | None = None,
) -> RepositorySnapshot:
    """Apply the universal preprocessing to a snapshot.

    Line separators become LF, files that are empty or whitespace-only after
    normalization are removed, and files whose content cannot be encoded as
    UTF-8 are dropped with an error record. Original file order is preserved.
    Idempotent.
    """
    kept: list[FileEntry] = []
    for entry in snapshot.files:
        try:
            entry.content.encode("utf-8")
        except UnicodeEncodeError as exc:
            if errors is not None:
                errors.append(FileDropRecord(entry.path, f"invalid UTF-8: {exc}"))
            continue
        content = normalize_content(entry.content)
        if not content.strip():
            continue
        if content is entry.content:
            kept.append(entry)
        else:
            kept.append(replace(entry, content=content))
    return replace(snapshot, files=tuple(kept))


def snapshot_from_pairs(
    repo: str, commit: str, timestamp: int, pairs: Iterable[tuple[str, str]]
) -> RepositorySnapshot:
    """Convenience constructor used by tests and ingest."""
    files = tuple(FileEntry(normalize_path(p), c) for p, c in pairs)
    return RepositorySnapshot(repo=repo, commit=commit, timestamp=timestamp, files=files)

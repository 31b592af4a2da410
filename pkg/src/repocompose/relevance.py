"""Ranking primitives for the ranked composers.

All rankings order candidates least-relevant-first so the most relevant file
lands at the end of the composed context. Ties are always broken
deterministically (lexicographic path) to give a total order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ConfigurationError
from .model import CompletionTarget, FileEntry, RepositorySnapshot

RANKING_SCHEMES = ("path_distance_py", "lines_iou_py", "text_groups", "random_all", "random_py")

# Extension groups in ascending relevance order for the text_groups scheme.
TEXT_GROUPS: tuple[tuple[str, ...], ...] = (
    (".json",),
    (".yaml", ".yml"),
    (".sh",),
    (".md", ".txt", ".rst"),
)

MIN_IOU_LINE_CHARS = 5


@dataclass(frozen=True)
class RankedFiles:
    """Candidate files ordered least-relevant-first with their sort scores."""

    files: tuple[FileEntry, ...]
    scores: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.files) != len(self.scores):
            raise ValueError("files and scores must be parallel sequences")


def path_distance(a: str, b: str) -> int:
    """Tree distance between the directories containing two files.

    Counts the directory segments of each path that lie outside the shared
    prefix; the file name itself does not contribute.
    """
    dirs_a = a.split("/")[:-1]
    dirs_b = b.split("/")[:-1]
    common = 0
    for seg_a, seg_b in zip(dirs_a, dirs_b):
        if seg_a != seg_b:
            break
        common += 1
    return (len(dirs_a) - common) + (len(dirs_b) - common)


def iou_line_set(content: str) -> frozenset[str]:
    """Distinct whitespace-stripped lines of at least five characters."""
    return frozenset(
        stripped for line in content.split("\n") if len(stripped := line.strip()) >= MIN_IOU_LINE_CHARS
    )


def lines_iou(a: str, b: str) -> float:
    """Intersection-over-union of the qualifying line sets of two contents."""
    sa, sb = iou_line_set(a), iou_line_set(b)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


def _text_group_index(path: str) -> int | None:
    lowered = path.lower()
    for idx, extensions in enumerate(TEXT_GROUPS):
        if lowered.endswith(extensions):
            return idx
    return None


def rank_files(
    snapshot: RepositorySnapshot,
    completion: CompletionTarget,
    scheme: str,
    seed: int = 0,
) -> RankedFiles:
    """Order snapshot files least-relevant-first under the given scheme.

    The completion file itself never appears in the candidate set. Random
    schemes shuffle with a generator seeded by ``seed`` and are deterministic
    under a fixed seed.
    """
    if scheme not in RANKING_SCHEMES:
        raise ConfigurationError(
            f"unknown ranking scheme {scheme!r}; valid schemes: {', '.join(RANKING_SCHEMES)}"
        )

    candidates = [f for f in snapshot.files if f.path != completion.file.path]
    target_path = completion.file.path

    if scheme == "path_distance_py":
        candidates = [f for f in candidates if f.path.endswith(".py")]
        target_lines = iou_line_set(completion.file.content)
        decorated = []
        for f in candidates:
            dist = path_distance(f.path, target_path)
            own = iou_line_set(f.content)
            union = len(own | target_lines)
            iou = len(own & target_lines) / union if union else 0.0
            decorated.append((-dist, iou, f.path, f))
        decorated.sort(key=lambda t: t[:3])
        return RankedFiles(
            files=tuple(t[3] for t in decorated),
            scores=tuple((float(-t[0]), t[1]) for t in decorated),
        )

    if scheme == "lines_iou_py":
        candidates = [f for f in candidates if f.path.endswith(".py")]
        target_lines = iou_line_set(completion.file.content)
        decorated = []
        for f in candidates:
            own = iou_line_set(f.content)
            union = len(own | target_lines)
            iou = len(own & target_lines) / union if union else 0.0
            decorated.append((iou, f.path, f))
        decorated.sort(key=lambda t: t[:2])
        return RankedFiles(
            files=tuple(t[2] for t in decorated),
            scores=tuple((t[0], 0.0) for t in decorated),
        )

    if scheme == "text_groups":
        decorated = []
        for f in candidates:
            group = _text_group_index(f.path)
            if group is None:
                continue
            dist = path_distance(f.path, target_path)
            decorated.append((group, -dist, f.path, f))
        decorated.sort(key=lambda t: t[:3])
        return RankedFiles(
            files=tuple(t[3] for t in decorated),
            scores=tuple((float(t[0]), float(-t[1])) for t in decorated),
        )

    if scheme == "random_py":
        candidates = [f for f in candidates if f.path.endswith(".py")]
    rng = random.Random(seed)
    rng.shuffle(candidates)
    return RankedFiles(
        files=tuple(candidates),
        scores=tuple((float(i), 0.0) for i in range(len(candidates))),
    )

"""The composer engine: (snapshot, completion, spec) -> composed context.

Fifteen composer kinds plus the reversed/irrelevant modifiers. Ranked kinds
select files via :mod:`repocompose.relevance`, transform content where the
kind calls for it, and greedily fill the token budget from the most relevant
end, left-truncating the first file that does not fit so the window stays
saturated. All randomness flows from a generator derived from
(spec.seed, example_id), making composition a pure function.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .model import ComposedExample, ComposerSpec, CompletionTarget, FileEntry, RepositorySnapshot
from .pysurface import extract_declarations, extract_text_chunks, strip_to_code
from .relevance import RankedFiles, rank_files
from .tokenization import Tokenizer

# Ranking scheme behind each ranked composer kind.
RANKING_SCHEME = {
    "path_distance_py": "path_distance_py",
    "lines_iou_py": "lines_iou_py",
    "code_chunks": "path_distance_py",
    "half_memory_py": "path_distance_py",
    "declarations_py": "path_distance_py",
    "text_chunks_py": "path_distance_py",
    "text_files": "text_groups",
    "random_files": "random_all",
    "random_py": "random_py",
}

CONTENT_TRANSFORM: dict[str, Callable[[str], str]] = {
    "code_chunks": strip_to_code,
    "declarations_py": extract_declarations,
    "text_chunks_py": extract_text_chunks,
}

# Pool the mixed composer draws from; duplication is skipped in evaluation mode.
MIXED_POOL = (
    "file_level",
    "path_distance_py",
    "half_memory_py",
    "declarations_py",
    "text_files",
    "random_files",
    "duplication",
)

_PLACEMENT_ATTEMPTS = 200


@dataclass(frozen=True)
class ContextBudget:
    """Token budget and the tokenizer that measures it."""

    max_context_tokens: int
    tokenizer: Tokenizer

    def __post_init__(self):
        if self.max_context_tokens < 0:
            raise ValueError("max_context_tokens must be >= 0")


def format_file(entry: FileEntry) -> str:
    """Uniform file representation: separator token, path header, content."""
    return f"<file_sep># {entry.path}\n{entry.content}"


def derive_rng(seed: int, example_id: str) -> random.Random:
    """Per-example generator; stable across runs, platforms, and schedulers."""
    digest = hashlib.sha256(f"{seed}\x1f{example_id}".encode("utf-8", "surrogateescape")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _fit_pieces(
    files: Sequence[FileEntry],
    max_tokens: int,
    tokenizer: Tokenizer,
    transform: Callable[[str], str] | None = None,
) -> list[str]:
    """Formatted file strings that fill the budget, least-relevant-first.

    Walks candidates from the most relevant end, transforming lazily and
    dropping files whose transformed content is empty. The first candidate
    that does not fit whole contributes the token suffix of its formatted
    text, filling the budget exactly.
    """
    if max_tokens <= 0:
        return []
    remaining = max_tokens
    selected: list[str] = []
    for entry in reversed(files):
        content = entry.content if transform is None else transform(entry.content)
        if not content.strip():
            continue
        formatted = f"<file_sep># {entry.path}\n{content}"
        ids = tokenizer.encode(formatted)
        if len(ids) <= remaining:
            selected.append(formatted)
            remaining -= len(ids)
        else:
            selected.append(tokenizer.decode(ids[-remaining:]))
            remaining = 0
        if remaining == 0:
            break
    selected.reverse()
    return selected


def fit_and_concat(
    ranked: RankedFiles | Sequence[FileEntry],
    budget: ContextBudget,
    transform: Callable[[str], str] | None = None,
) -> str:
    """Concatenate budget-fitted files, most relevant last."""
    files = ranked.files if isinstance(ranked, RankedFiles) else ranked
    return "".join(_fit_pieces(files, budget.max_context_tokens, budget.tokenizer, transform))


def half_memory_dropout(content: str, p: float, rng: random.Random) -> str:
    """Keep each line independently with probability 1 - p."""
    if not content:
        return content
    ends_nl = content.endswith("\n")
    body = content[:-1] if ends_nl else content
    kept = [line for line in body.split("\n") if rng.random() >= p]
    if not kept:
        return ""
    return "\n".join(kept) + ("\n" if ends_nl else "")


def duplication_context(completion: CompletionTarget, budget: ContextBudget) -> str:
    """Repeat the formatted completion file to exactly fill the budget."""
    if budget.max_context_tokens <= 0:
        return ""
    ids = budget.tokenizer.encode(format_file(completion.file))
    copies = math.ceil(budget.max_context_tokens / len(ids))
    return budget.tokenizer.decode((ids * copies)[-budget.max_context_tokens :])


def random_token_context(max_tokens: int, rng: random.Random, tokenizer: Tokenizer) -> str:
    """Exactly ``max_tokens`` ids sampled uniformly from the non-special vocab.

    The contract is on the sampled id sequence length; the decoded string is
    not guaranteed to re-encode to the same count.
    """
    if max_tokens <= 0:
        return ""
    pool = sorted(set(range(tokenizer.vocab_size)) - set(tokenizer.special_ids))
    return tokenizer.decode(rng.choices(pool, k=max_tokens))


def corrupt_tokens(
    ids: Sequence[int], p: float, rng: random.Random, tokenizer: Tokenizer
) -> list[int]:
    """Replace each token with probability ``p`` by a different non-special token."""
    pool = sorted(set(range(tokenizer.vocab_size)) - set(tokenizer.special_ids))
    index = {tok: i for i, tok in enumerate(pool)}
    n = len(pool)
    out = []
    for tok in ids:
        if rng.random() >= p:
            out.append(tok)
            continue
        pos = index.get(tok)
        if pos is None:
            out.append(pool[rng.randrange(n)])
        else:
            r = rng.randrange(n - 1)
            out.append(pool[r + 1 if r >= pos else r])
    return out


def _split_body(text: str) -> tuple[list[str], bool]:
    ends_nl = text.endswith("\n")
    body = text[:-1] if ends_nl else text
    return (body.split("\n") if body else []), ends_nl


def _segment_lines(completion_content: str, segments: int, rng: random.Random) -> list[list[str]]:
    """Split the completion into ``segments`` contiguous runs at random newlines."""
    lines, _ = _split_body(completion_content)
    if not lines:
        return []
    count = max(1, min(segments, len(lines)))
    cuts = sorted(rng.sample(range(1, len(lines)), count - 1)) if count > 1 else []
    bounds = [0, *cuts, len(lines)]
    return [lines[a:b] for a, b in zip(bounds, bounds[1:])]


def _overlapping_segments(completion_content: str, size: int = 5, overlap: int = 1) -> list[list[str]]:
    """Fixed-size line segments sharing ``overlap`` lines at each junction."""
    lines, _ = _split_body(completion_content)
    if not lines:
        return []
    stride = size - overlap
    segs = []
    i = 0
    while True:
        segs.append(lines[i : i + size])
        if i + size >= len(lines):
            break
        i += stride
    return segs


def _place_segments(
    ctx_lines: list[str],
    segments: list[list[str]],
    rng: random.Random,
    tokenizer: Tokenizer,
) -> list[tuple[int, int, list[str]]]:
    """Choose disjoint line runs whose token mass first covers each segment.

    Collisions with already-placed runs are resampled; after the attempt cap
    a deterministic left-to-right scan picks the first fitting free run, then
    the largest free run, so placement is total.
    """
    line_tokens = [len(tokenizer.encode(line + "\n")) for line in ctx_lines]
    taken = [False] * len(ctx_lines)
    placements: list[tuple[int, int, list[str]]] = []

    def run_from(start: int, need: int) -> tuple[int, int] | None:
        end = start
        cum = 0
        while end < len(ctx_lines) and cum < need:
            if taken[end]:
                return None
            cum += line_tokens[end]
            end += 1
        return (end, cum) if cum >= need else None

    for seg in segments:
        need = sum(len(tokenizer.encode(line + "\n")) for line in seg)
        region: tuple[int, int] | None = None
        if ctx_lines:
            for _ in range(_PLACEMENT_ATTEMPTS):
                start = rng.randrange(len(ctx_lines))
                if taken[start]:
                    continue
                hit = run_from(start, need)
                if hit is not None:
                    region = (start, hit[0])
                    break
            if region is None:
                best: tuple[int, int] | None = None
                best_len = -1
                for start in range(len(ctx_lines)):
                    if taken[start]:
                        continue
                    hit = run_from(start, need)
                    if hit is not None:
                        region = (start, hit[0])
                        break
                    end = start
                    while end < len(ctx_lines) and not taken[end]:
                        end += 1
                    if end - start > best_len:
                        best, best_len = (start, end), end - start
                if region is None:
                    region = best
        if region is None:
            region = (len(ctx_lines), len(ctx_lines))
        for row in range(region[0], region[1]):
            taken[row] = True
        placements.append((region[0], region[1], seg))
    return placements


def _apply_placements(
    ctx_lines: list[str],
    placements: list[tuple[int, int, list[str]]],
    ends_nl: bool,
) -> str:
    out: list[str] = []
    pos = 0
    for start, end, seg in sorted(placements, key=lambda t: (t[0], t[1])):
        out.extend(ctx_lines[pos:start])
        out.extend(seg)
        pos = end
    out.extend(ctx_lines[pos:])
    if not out:
        return ""
    return "\n".join(out) + ("\n" if ends_nl else "")


def leak_transform(
    base_context: str,
    completion_content: str,
    segments: int,
    rng: random.Random,
    tokenizer: Tokenizer,
) -> str:
    """Scatter the completion, split into segments at newlines, over the context.

    Each segment replaces a consecutive run of context lines whose cumulative
    token count first meets or exceeds the segment's, so the output token
    count stays near the original.
    """
    ctx_lines, ends_nl = _split_body(base_context)
    if not ctx_lines:
        return base_context
    segs = _segment_lines(completion_content, segments, rng)
    placements = _place_segments(ctx_lines, segs, rng, tokenizer)
    return _apply_placements(ctx_lines, placements, ends_nl)


def masked_leak_transform(
    base_context: str,
    completion_content: str,
    rng: random.Random,
    tokenizer: Tokenizer,
    mask_p: float = 0.15,
) -> str:
    """Scatter overlapping five-line completion segments, then corrupt tokens.

    After placement every context token is independently replaced with
    probability ``mask_p`` by a different non-special token.
    """
    ctx_lines, ends_nl = _split_body(base_context)
    if ctx_lines:
        segs = _overlapping_segments(completion_content)
        placements = _place_segments(ctx_lines, segs, rng, tokenizer)
        leaked = _apply_placements(ctx_lines, placements, ends_nl)
    else:
        leaked = base_context
    ids = corrupt_tokens(tokenizer.encode(leaked), mask_p, rng, tokenizer)
    return tokenizer.decode(ids)


def _ranked_context(
    kind: str,
    spec: ComposerSpec,
    snapshot: RepositorySnapshot,
    completion: CompletionTarget,
    budget: ContextBudget,
    rng: random.Random,
) -> str:
    scheme = RANKING_SCHEME[kind]
    shuffle_seed = rng.getrandbits(64) if scheme in ("random_all", "random_py") else 0
    ranked = rank_files(snapshot, completion, scheme, seed=shuffle_seed)
    files: Sequence[FileEntry] = ranked.files
    if spec.modifier == "irrelevant":
        files = files[::-1]

    transform = CONTENT_TRANSFORM.get(kind)
    if kind == "half_memory_py":
        transform = lambda content: half_memory_dropout(content, spec.dropout_p, rng)

    pieces = _fit_pieces(files, budget.max_context_tokens, budget.tokenizer, transform)
    if spec.modifier == "reversed":
        pieces.reverse()
    return "".join(pieces)


def _compose_context(
    spec: ComposerSpec,
    snapshot: RepositorySnapshot,
    completion: CompletionTarget,
    budget: ContextBudget,
    rng: random.Random,
    kind: str | None = None,
) -> str:
    kind = kind or spec.kind
    if kind == "file_level":
        return ""
    if kind == "random_tokens":
        return random_token_context(budget.max_context_tokens, rng, budget.tokenizer)
    if kind == "duplication":
        return duplication_context(completion, budget)
    if kind == "mixed":
        pool = MIXED_POOL
        if spec.mode == "evaluation":
            pool = tuple(k for k in pool if k != "duplication")
        return _compose_context(spec, snapshot, completion, budget, rng, kind=rng.choice(pool))
    if kind in ("leak", "masked_leak"):
        base = _ranked_context("path_distance_py", spec, snapshot, completion, budget, rng)
        if kind == "leak":
            return leak_transform(base, completion.file.content, spec.leak_segments, rng, budget.tokenizer)
        return masked_leak_transform(base, completion.file.content, rng, budget.tokenizer, spec.mask_p)
    return _ranked_context(kind, spec, snapshot, completion, budget, rng)


def compose(
    spec: ComposerSpec,
    snapshot: RepositorySnapshot,
    completion: CompletionTarget,
    budget: ContextBudget,
) -> ComposedExample:
    """Produce the composed example for one completion target.

    Pure: identical (spec, snapshot, completion, budget) yield byte-identical
    output, random composers included.
    """
    example_id = completion.example_id
    rng = derive_rng(spec.seed, example_id)
    context = _compose_context(spec, snapshot, completion, budget, rng)
    return ComposedExample(
        example_id=example_id,
        composer=spec.name,
        completion_path=completion.file.path,
        context=context,
        completion=completion.file.content,
    )

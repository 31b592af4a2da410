"""Exact Match scoring, line categorization, and the context-scaling sweep.

A prediction matches when its first non-empty line equals the ground-truth
line after trailing-whitespace stripping on both sides. Reports aggregate per
(composer-name, category) and derive the repository-context boost whenever
both reference composer runs (PD-16K and FL-4K) are present.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .model import LineCategory
from .tokenization import Tokenizer, prepare_eval_sequence

FL_4K = "FL-4K"
PD_16K = "PD-16K"

DEFAULT_SWEEP_LENGTHS = (1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072)

_IDENT_RE = re.compile(r"[A-Za-z_]\w*")


@dataclass(frozen=True)
class EvalItem:
    """One next-line completion instance."""

    example_id: str
    context: str
    file_prefix: str
    ground_truth_line: str
    category: LineCategory

    def __post_init__(self):
        if "\n" in self.ground_truth_line:
            raise ValueError("ground_truth_line must not contain LF")


def exact_match(prediction: str, truth: str) -> bool:
    """Compare the prediction's first non-empty line against the truth."""
    for line in prediction.split("\n"):
        if line.strip():
            return line.rstrip() == truth.rstrip()
    return False


def categorize_line(line: str, infile_ids: set[str], project_ids: set[str]) -> LineCategory:
    """Categorize by the identifiers the line references; infile wins ties."""
    referenced = set(_IDENT_RE.findall(line))
    if referenced & infile_ids:
        return LineCategory.INFILE
    if referenced & project_ids:
        return LineCategory.INPROJECT
    return LineCategory.OTHER


@dataclass(frozen=True)
class CategoryScore:
    """Match count and total for one (composer, category) cell."""

    matches: int
    total: int

    @property
    def pct(self) -> float:
        if self.total <= 0:
            raise ValueError("percentage undefined for zero items")
        return round(100.0 * self.matches / self.total, 1)


def repository_context_boost(pd_score: float, fl_score: float) -> float:
    """PD-16K Exact Match minus FL-4K Exact Match, to one decimal."""
    return round(pd_score - fl_score, 1)


@dataclass
class EvalReport:
    """Per-(composer, category) Exact Match plus derived boost entries."""

    scores: dict[tuple[str, str], CategoryScore] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    @property
    def rcb(self) -> dict[str, float]:
        """Boost per category, present when both reference runs are scored."""
        out = {}
        for (composer, category), score in self.scores.items():
            if composer != PD_16K:
                continue
            fl = self.scores.get((FL_4K, category))
            if fl is not None:
                out[category] = repository_context_boost(score.pct, fl.pct)
        return out

    def merge(self, other: "EvalReport") -> "EvalReport":
        merged = EvalReport(
            scores={**self.scores, **other.scores},
            warnings=self.warnings + other.warnings,
            notices=self.notices + other.notices,
        )
        return merged

    @classmethod
    def from_scores(cls, scores_by_composer: Mapping[str, Mapping[str, float]]) -> "EvalReport":
        """Build a report from already-computed percentages (counts unknown).

        Percentages are stored as match counts out of 1000 so ``pct``
        round-trips any one-decimal score exactly.
        """
        report = cls()
        for composer, by_category in scores_by_composer.items():
            for category, pct in by_category.items():
                report.scores[(composer, category)] = CategoryScore(
                    matches=round(pct * 10), total=1000
                )
        return report

    def as_dict(self) -> dict:
        return {
            "scores": [
                {
                    "composer": composer,
                    "category": category,
                    "exact_match": score.pct,
                    "matches": score.matches,
                    "total": score.total,
                }
                for (composer, category), score in sorted(self.scores.items())
            ],
            "rcb": self.rcb,
            "warnings": self.warnings,
            "notices": self.notices,
        }


def evaluate(
    items: Sequence[EvalItem],
    predictions: Mapping[str, str],
    categories: Iterable[str] | None = None,
    composer_name: str = PD_16K,
) -> EvalReport:
    """Score one composer run; missing predictions count as mismatches."""
    wanted = list(categories) if categories is not None else None
    report = EvalReport()
    tallies: dict[str, list[int]] = {}
    for item in items:
        category = item.category.value
        if wanted is not None and category not in wanted:
            continue
        prediction = predictions.get(item.example_id)
        if prediction is None:
            report.warnings.append(f"missing prediction for {item.example_id}")
            matched = False
        else:
            matched = exact_match(prediction, item.ground_truth_line)
        tally = tallies.setdefault(category, [0, 0])
        tally[0] += int(matched)
        tally[1] += 1
    for category, (matches, total) in tallies.items():
        report.scores[(composer_name, category)] = CategoryScore(matches, total)
    for category in wanted or ():
        if category not in tallies:
            report.notices.append(f"category {category!r} has no items; omitted")
    return report


@dataclass(frozen=True)
class SweepRow:
    """One output row of the context-scaling sweep; ``exact_match`` is None
    when the predictor failed at that length."""

    length: int
    category: str
    exact_match: float | None
    count: int


Predictor = Callable[[int, dict[str, list[int]]], Mapping[str, str]]


def context_scaling_sweep(
    items: Sequence[EvalItem],
    predictor: Predictor,
    tokenizer: Tokenizer,
    lengths: Sequence[int] = DEFAULT_SWEEP_LENGTHS,
    categories: Iterable[str] | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Exact Match per category at each maximum sequence length.

    The predictor receives prepared (left-truncated) token sequences keyed by
    example id and returns predicted lines. A predictor failure at one length
    records missing rows and the sweep continues. ``workers`` bounds how many
    lengths are in flight at once; row order is always the lengths order.
    """
    wanted = list(categories) if categories is not None else None
    present: list[str] = []
    for item in items:
        category = item.category.value
        if wanted is not None and category not in wanted:
            continue
        if category not in present:
            present.append(category)

    def rows_for(length: int) -> list[SweepRow]:
        prepared = {
            item.example_id: prepare_eval_sequence(item.context, item.file_prefix, length, tokenizer)
            for item in items
        }
        try:
            predictions = predictor(length, prepared)
        except Exception:
            return [SweepRow(length, category, None, 0) for category in present]
        report = evaluate(items, predictions, wanted, composer_name=f"len-{length}")
        return [
            SweepRow(length, category, report.scores[(f"len-{length}", category)].pct,
                     report.scores[(f"len-{length}", category)].total)
            for category in present
        ]

    if workers <= 1:
        per_length = [rows_for(length) for length in lengths]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_length = list(pool.map(rows_for, lengths))
    return [row for rows in per_length for row in rows]

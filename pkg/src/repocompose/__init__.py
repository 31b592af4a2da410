"""Repository-level context composition, packing, and evaluation toolkit."""

__version__ = "0.1.0"

from .composers import ContextBudget, compose, fit_and_concat, format_file
from .errors import ConfigurationError, ExampleRejected, SchemaError
from .evaluation import (
    EvalItem,
    EvalReport,
    categorize_line,
    context_scaling_sweep,
    evaluate,
    exact_match,
    repository_context_boost,
)
from .filtering import CommitRecord, FilterPolicy, StatsReport, dataset_stats, filter_dataset
from .model import (
    ComposedExample,
    ComposerSpec,
    CompletionTarget,
    FileEntry,
    LineCategory,
    RepositorySnapshot,
    normalize_snapshot,
)
from .relevance import RankedFiles, lines_iou, path_distance, rank_files
from .rope import RopeConfig, apply_rope, relative_score, rope_frequencies
from .tokenization import (
    PackedExample,
    Tokenizer,
    TruncationPolicy,
    pack_training_example,
    prepare_eval_sequence,
    reference_tokenizer,
)

__all__ = [
    "__version__",
    "ComposedExample",
    "ComposerSpec",
    "CompletionTarget",
    "ConfigurationError",
    "ContextBudget",
    "CommitRecord",
    "EvalItem",
    "EvalReport",
    "ExampleRejected",
    "FileEntry",
    "FilterPolicy",
    "LineCategory",
    "PackedExample",
    "RankedFiles",
    "RepositorySnapshot",
    "RopeConfig",
    "SchemaError",
    "StatsReport",
    "Tokenizer",
    "TruncationPolicy",
    "apply_rope",
    "categorize_line",
    "compose",
    "context_scaling_sweep",
    "dataset_stats",
    "evaluate",
    "exact_match",
    "filter_dataset",
    "fit_and_concat",
    "format_file",
    "lines_iou",
    "normalize_snapshot",
    "pack_training_example",
    "path_distance",
    "prepare_eval_sequence",
    "rank_files",
    "reference_tokenizer",
    "relative_score",
    "repository_context_boost",
    "rope_frequencies",
]
